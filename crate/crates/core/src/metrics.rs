//! Confusion matrices and precision / recall / F1 / accuracy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("label vectors differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("class id {id} at position {index} is outside 0..{classes}")]
    OutOfRange { index: usize, id: usize, classes: usize },
    #[error("cannot evaluate an empty confusion matrix")]
    Empty,
    #[error("unknown averaging mode {0:?} (expected macro or weighted)")]
    UnknownAveraging(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Unweighted mean over classes.
    Macro,
    /// Mean over classes weighted by true-class support.
    Weighted,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::Macro => "macro",
            Averaging::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Averaging {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "macro" => Ok(Averaging::Macro),
            "weighted" => Ok(Averaging::Weighted),
            _ => Err(MetricsError::UnknownAveraging(s.to_string())),
        }
    }
}

/// `counts[i][j]` = samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn with_class_names(mut self, names: &[String]) -> Self {
        if names.len() == self.classes() {
            self.class_names = names.to_vec();
        }
        self
    }

    fn true_positives(&self, c: usize) -> u64 {
        self.counts[c][c]
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (index, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        for id in [t, p] {
            if id >= classes {
                return Err(MetricsError::OutOfRange { index, id, classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: (0..classes).map(|c| c.to_string()).collect(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Averaged precision / recall / F1 under one convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averaged {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub averaging: Averaging,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    /// The same confusion matrix summarized under the other convention.
    pub fn averaged(&self, averaging: Averaging) -> Averaged {
        average(&self.per_class, averaging)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn per_class(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes())
        .map(|c| {
            let tp = cm.true_positives(c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            ClassMetrics {
                class: cm.class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect()
}

fn average(rows: &[ClassMetrics], averaging: Averaging) -> Averaged {
    let weights: Vec<f64> = match averaging {
        Averaging::Macro => vec![1.0; rows.len()],
        Averaging::Weighted => rows.iter().map(|r| r.support as f64).collect(),
    };
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Averaged {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let mean = |f: fn(&ClassMetrics) -> f64| -> f64 {
        rows.iter().zip(&weights).map(|(r, w)| w * f(r)).sum::<f64>() / total
    };
    Averaged {
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
    }
}

pub fn evaluate(cm: &ConfusionMatrix, averaging: Averaging) -> Result<EvalReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let rows = per_class(cm);
    let avg = average(&rows, averaging);
    Ok(EvalReport {
        averaging,
        accuracy: ratio(cm.trace(), total),
        precision: avg.precision,
        recall: avg.recall,
        f1: avg.f1,
        per_class: rows,
        confusion: cm.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::SeededRng;
    use proptest::prelude::*;

    fn cm(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        ConfusionMatrix {
            class_names: (0..counts.len()).map(|c| c.to_string()).collect(),
            counts,
        }
    }

    #[test]
    fn perfect_pair() {
        let m = confusion(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(m.counts, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn hand_count() {
        let m = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.counts, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn out_of_range_and_length_errors() {
        assert!(matches!(
            confusion(&[0, 2], &[0, 1], 2),
            Err(MetricsError::OutOfRange { index: 1, id: 2, .. })
        ));
        assert!(matches!(confusion(&[0], &[0, 1], 2), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn hand_evaluated_two_class() {
        let m = cm(vec![vec![1, 1], vec![0, 2]]);
        let macro_ = evaluate(&m, Averaging::Macro).unwrap();
        assert_eq!(macro_.accuracy, 0.75);
        assert!((macro_.precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((macro_.recall - 0.75).abs() < 1e-12);
        let weighted = evaluate(&m, Averaging::Weighted).unwrap();
        assert!((weighted.recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn perfect_diagonal_scores_one() {
        let m = cm(vec![vec![3, 0, 0], vec![0, 4, 0], vec![0, 0, 1]]);
        for avg in [Averaging::Macro, Averaging::Weighted] {
            let r = evaluate(&m, avg).unwrap();
            assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn absent_class_scores_zero() {
        let m = cm(vec![vec![2, 0, 0], vec![1, 3, 0], vec![0, 0, 0]]);
        let r = evaluate(&m, Averaging::Macro).unwrap();
        let absent = &r.per_class[2];
        assert_eq!((absent.precision, absent.recall, absent.f1), (0.0, 0.0, 0.0));
        assert!(r.precision.is_finite() && r.f1.is_finite());
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert_eq!(evaluate(&cm(vec![vec![0, 0], vec![0, 0]]), Averaging::Macro), Err(MetricsError::Empty));
    }

    #[test]
    fn confusion_matches_pairwise_oracle() {
        let mut rng = SeededRng::new(21);
        let k = 4;
        let t: Vec<usize> = (0..300).map(|_| rng.below(k)).collect();
        let p: Vec<usize> = (0..300).map(|_| rng.below(k)).collect();
        let m = confusion(&t, &p, k).unwrap();
        for i in 0..k {
            for j in 0..k {
                let oracle = t.iter().zip(&p).filter(|&(&a, &b)| a == i && b == j).count() as u64;
                assert_eq!(m.counts[i][j], oracle);
            }
        }
    }

    fn labels() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
        (2usize..6).prop_flat_map(|k| {
            (1usize..80).prop_flat_map(move |n| {
                (
                    Just(k),
                    proptest::collection::vec(0..k, n),
                    proptest::collection::vec(0..k, n),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn weighted_recall_is_accuracy((k, t, p) in labels()) {
            let r = evaluate(&confusion(&t, &p, k).unwrap(), Averaging::Weighted).unwrap();
            prop_assert!((r.recall - r.accuracy).abs() < 1e-12);
        }

        #[test]
        fn macro_is_permutation_invariant((k, t, p) in labels(), shift in 1usize..5) {
            let perm = |c: usize| (c + shift) % k;
            let a = evaluate(&confusion(&t, &p, k).unwrap(), Averaging::Macro).unwrap();
            let tp: Vec<usize> = t.iter().map(|&c| perm(c)).collect();
            let pp: Vec<usize> = p.iter().map(|&c| perm(c)).collect();
            let b = evaluate(&confusion(&tp, &pp, k).unwrap(), Averaging::Macro).unwrap();
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
            prop_assert!((a.recall - b.recall).abs() < 1e-12);
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
            prop_assert_eq!(a.accuracy, b.accuracy);
        }

        #[test]
        fn f1_is_zero_or_harmonic((k, t, p) in labels()) {
            let r = evaluate(&confusion(&t, &p, k).unwrap(), Averaging::Macro).unwrap();
            for c in &r.per_class {
                if c.precision + c.recall == 0.0 {
                    prop_assert_eq!(c.f1, 0.0);
                } else {
                    prop_assert!(c.f1 > 0.0 && c.f1 <= 1.0);
                }
            }
        }
    }
}
