//! Double-double arithmetic (about 32 significant digits), used as an
//! independent high-precision oracle for finite-difference checks.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact scaling by a power of two.
    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    pub fn exp(self) -> Dd {
        if self.hi < -700.0 {
            return Dd::ZERO;
        }
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from(k)).ldexp(-SQUARINGS);
        // |r| < 3.5e-4 here, so ten terms reach 1e-33.
        let mut sum = Dd::ONE;
        for i in (1..=10).rev() {
            sum = Dd::ONE + r * sum / Dd::from(i as f64);
        }
        for _ in 0..SQUARINGS {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    /// Natural log of a positive value by Newton steps on `exp`.
    pub fn ln(self) -> Dd {
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Dd {
        let e = (self + self).exp();
        Dd::ONE - Dd::from(2.0) / (e + Dd::ONE)
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

/// Dense forward pass: `weights` row-major `(out, in)`, tanh or identity.
pub fn dense(input: &[Dd], weights: &[f64], bias: &[f64], tanh: bool) -> Vec<Dd> {
    let n_in = input.len();
    bias.iter()
        .enumerate()
        .map(|(o, &b)| {
            let z = input
                .iter()
                .zip(&weights[o * n_in..(o + 1) * n_in])
                .fold(Dd::from(b), |acc, (&x, &w)| acc + x * Dd::from(w));
            if tanh { z.tanh() } else { z }
        })
        .collect()
}

/// Runs `input` through layers `from..` of a net given as alternating
/// weight/bias slices.
pub fn forward_from(input: &[Dd], params: &[&[f64]], tanh: &[bool], from: usize) -> Vec<Dd> {
    let mut a = input.to_vec();
    for (l, &act) in tanh.iter().enumerate().skip(from) {
        a = dense(&a, params[2 * l], params[2 * l + 1], act);
    }
    a
}

/// Inputs to every layer for one record; the last entry is the output.
pub fn trace(x: &[f64], params: &[&[f64]], tanh: &[bool]) -> Vec<Vec<Dd>> {
    let mut out = vec![x.iter().map(|&v| Dd::from(v)).collect::<Vec<_>>()];
    for (l, &act) in tanh.iter().enumerate() {
        let next = dense(out.last().unwrap(), params[2 * l], params[2 * l + 1], act);
        out.push(next);
    }
    out
}
