//! Seeded Gaussian-blob data shaped like the UAV cyber capture.
//!
//! Output columns: `frame.number`, `wlan.bssid`, `timestamp_c`, the feature
//! columns, then `Label`. The last feature column is categorical (string
//! codes) and a small share of numeric cells are left empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::{CANONICAL_CLASSES, DEFAULT_DROPPED_COLUMNS, DEFAULT_LABEL_COLUMN};
use crate::numkernel::{derive_seed_str, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub features: usize,
    /// Relative class frequencies, in `CANONICAL_CLASSES` order.
    pub class_weights: Vec<f64>,
    /// Standard deviation of the class centres around the origin.
    pub separation: f64,
    pub noise: f64,
    pub null_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 10_000,
            features: 54,
            class_weights: vec![0.35, 0.2, 0.15, 0.15, 0.15],
            separation: 1.0,
            noise: 0.5,
            null_rate: 0.002,
            seed: 7,
        }
    }
}

const PROTOCOLS: [&str; 4] = ["udp", "tcp", "icmp", "arp"];

/// Rows per class: proportional shares, remainder to the largest fractions
/// (lowest class first on ties).
pub fn class_counts(rows: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * rows as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = rows - counts.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        counts[c] += 1;
    }
    counts
}

/// Writes the generated table to `path` and returns the per-class counts.
pub fn write_synthetic_csv(config: &SynthConfig, path: &Path) -> std::io::Result<Vec<usize>> {
    assert!(config.features >= 2, "need at least two feature columns");
    assert!(config.class_weights.len() <= CANONICAL_CLASSES.len());
    let k = config.class_weights.len();
    let numeric = config.features - 1;
    let mut rng = SeededRng::new(derive_seed_str(config.seed, "synth/centres"));
    let centres: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..numeric).map(|_| config.separation * rng.gaussian()).collect())
        .collect();

    let counts = class_counts(config.rows, &config.class_weights);
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
    let mut rng = SeededRng::new(derive_seed_str(config.seed, "synth/rows"));
    rng.shuffle(&mut labels);

    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = DEFAULT_DROPPED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..numeric).map(|j| format!("f{j:02}")));
    header.push("proto".into());
    header.push(DEFAULT_LABEL_COLUMN.into());
    writeln!(w, "{}", header.join(","))?;

    for (r, &c) in labels.iter().enumerate() {
        let mut line = format!("{},02:00:00:00:{:02x}:{:02x},{:.6}", r + 1, c, r % 256, r as f64 * 0.01);
        for centre in &centres[c] {
            line.push(',');
            if rng.uniform() >= config.null_rate {
                line.push_str(&(centre + config.noise * rng.gaussian()).to_string());
            }
        }
        let proto = if rng.uniform() < 0.7 { c % PROTOCOLS.len() } else { rng.below(PROTOCOLS.len()) };
        line.push(',');
        line.push_str(PROTOCOLS[proto]);
        line.push(',');
        line.push_str(CANONICAL_CLASSES[c]);
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, preprocess};

    #[test]
    fn counts_sum_to_rows() {
        assert_eq!(class_counts(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(class_counts(10_000, &[0.35, 0.2, 0.15, 0.15, 0.15]), vec![3500, 2000, 1500, 1500, 1500]);
    }

    #[test]
    fn generated_file_preprocesses_to_requested_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let config = SynthConfig {
            rows: 300,
            ..SynthConfig::default()
        };
        write_synthetic_csv(&config, &path).unwrap();
        let raw = load_csv(&path, DEFAULT_LABEL_COLUMN).unwrap();
        assert_eq!(raw.column_names.len(), 58);
        let drops: Vec<String> = DEFAULT_DROPPED_COLUMNS.iter().map(|s| s.to_string()).collect();
        let p = preprocess(&raw, &drops, 0.8, 1).unwrap();
        assert_eq!(p.train.features.cols(), 54);
        assert_eq!(p.train.rows() + p.test.rows(), 300);
        assert_eq!(p.params.class_names.len(), 5);
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let config = SynthConfig {
            rows: 50,
            ..SynthConfig::default()
        };
        write_synthetic_csv(&config, &dir.path().join("a.csv")).unwrap();
        write_synthetic_csv(&config, &dir.path().join("b.csv")).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("a.csv")).unwrap(),
            std::fs::read(dir.path().join("b.csv")).unwrap()
        );
    }
}
