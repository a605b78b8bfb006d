//! CSV ingestion and preprocessing of the cyber feature table.
//!
//! The preprocessing chain is: drop non-essential columns, integer-code
//! categorical columns, encode labels, split stratified by class, fit median
//! imputation and min-max scaling on the training rows only, then apply both
//! to train and test.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{Matrix, SeededRng, Vector};

/// Columns excluded before feature extraction.
pub const DEFAULT_DROPPED_COLUMNS: [&str; 3] = ["frame.number", "wlan.bssid", "timestamp_c"];
pub const DEFAULT_LABEL_COLUMN: &str = "Label";

pub const BENIGN: &str = "Benign";
pub const ATTACK: &str = "Attack";
/// Canonical class names in alphabetical (= multi-class id) order.
pub const CANONICAL_CLASSES: [&str; 5] = ["Benign", "De-Authentication", "Evil Twin", "FDI", "Replay"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: line {line} has {found} fields, header has {expected}")]
    RaggedRow {
        path: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("label column {column:?} not found (columns: {available})")]
    MissingLabelColumn { column: String, available: String },
    #[error("column {0:?} has no non-null values")]
    AllNull(String),
    #[error("row {row} has no label")]
    MissingLabel { row: usize },
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("class {class:?} has {count} record(s); stratified splitting needs at least 2")]
    TooFewInClass { class: String, count: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("feature table is inconsistent: {0}")]
    Inconsistent(String),
}

/// Raw string cells; `None` marks an empty (null) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub cells: Vec<Vec<Option<String>>>,
    pub label_column: String,
}

impl RawTable {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    fn label_index(&self) -> Result<usize, DatasetError> {
        self.column_index(&self.label_column)
            .ok_or_else(|| DatasetError::MissingLabelColumn {
                column: self.label_column.clone(),
                available: self.column_names.join(", "),
            })
    }

    /// Number of non-label columns.
    pub fn feature_count(&self) -> usize {
        self.column_names.len() - usize::from(self.column_index(&self.label_column).is_some())
    }
}

pub fn load_csv(path: &Path, label_column: &str) -> Result<RawTable, DatasetError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let csv_err = |e: csv::Error| DatasetError::Csv {
        path: display.clone(),
        message: e.to_string(),
    };
    let column_names: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if column_names.is_empty() || column_names.iter().all(String::is_empty) {
        return Err(DatasetError::Csv {
            path: display,
            message: "missing header row".into(),
        });
    }
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != column_names.len() {
            return Err(DatasetError::RaggedRow {
                path: display,
                line: record.position().map_or(0, |p| p.line()),
                expected: column_names.len(),
                found: record.len(),
            });
        }
        cells.push(
            record
                .iter()
                .map(|c| {
                    let c = c.trim();
                    (!c.is_empty()).then(|| c.to_string())
                })
                .collect(),
        );
    }
    let table = RawTable {
        column_names,
        cells,
        label_column: label_column.to_string(),
    };
    table.label_index()?;
    Ok(table)
}

/// Removes the named columns. Returns the names that were not present; the
/// label column is never dropped.
pub fn drop_columns(table: &RawTable, names: &[String]) -> (RawTable, Vec<String>) {
    let mut missing = Vec::new();
    let mut drop = vec![false; table.column_names.len()];
    for name in names {
        if *name == table.label_column {
            log::warn!("refusing to drop label column {name:?}");
            continue;
        }
        match table.column_index(name) {
            Some(i) => drop[i] = true,
            None => {
                log::warn!("column {name:?} not present; nothing to drop");
                missing.push(name.clone());
            }
        }
    }
    let keep = |row: &[Option<String>]| -> Vec<Option<String>> {
        row.iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(c, _)| c.clone())
            .collect()
    };
    let column_names = table
        .column_names
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(c, _)| c.clone())
        .collect();
    (
        RawTable {
            column_names,
            cells: table.cells.iter().map(|r| keep(r)).collect(),
            label_column: table.label_column.clone(),
        },
        missing,
    )
}

/// Features as numbers with nulls still present; labels still strings.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub raw_labels: Vec<String>,
    /// For each categorical column, its categories in code order.
    pub categorical: BTreeMap<String, Vec<String>>,
}

impl NumericTable {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> NumericTable {
        NumericTable {
            feature_names: self.feature_names.clone(),
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
            raw_labels: indices.iter().map(|&i| self.raw_labels[i].clone()).collect(),
            categorical: self.categorical.clone(),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses numeric columns and integer-codes every other column by order of
/// first appearance.
pub fn to_numeric(table: &RawTable) -> Result<NumericTable, DatasetError> {
    let label_idx = table.label_index()?;
    let feature_cols: Vec<usize> = (0..table.column_names.len()).filter(|&c| c != label_idx).collect();
    let mut raw_labels = Vec::with_capacity(table.rows());
    for (r, row) in table.cells.iter().enumerate() {
        raw_labels.push(row[label_idx].clone().ok_or(DatasetError::MissingLabel { row: r })?);
    }
    let mut categorical = BTreeMap::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let cells = table.cells.iter().map(|row| row[c].as_deref());
        let numeric = cells.clone().flatten().all(|s| parse_number(s).is_some());
        if numeric {
            columns.push(cells.map(|s| s.and_then(parse_number)).collect());
        } else {
            let mut codes: HashMap<&str, usize> = HashMap::new();
            let mut order: Vec<String> = Vec::new();
            let col = cells
                .map(|s| {
                    s.map(|s| {
                        let next = codes.len();
                        let code = *codes.entry(s).or_insert_with(|| {
                            order.push(s.to_string());
                            next
                        });
                        code as f64
                    })
                })
                .collect();
            categorical.insert(table.column_names[c].clone(), order);
            columns.push(col);
        }
    }
    let values = (0..table.rows())
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    Ok(NumericTable {
        feature_names: feature_cols.iter().map(|&c| table.column_names[c].clone()).collect(),
        values,
        raw_labels,
        categorical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeParams {
    pub fill: Vector,
    pub null_counts: Vec<usize>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Per-column medians of the non-null values.
pub fn impute_fit(table: &NumericTable) -> Result<ImputeParams, DatasetError> {
    let cols = table.feature_names.len();
    let mut fill = Vec::with_capacity(cols);
    let mut null_counts = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut present: Vec<f64> = table.values.iter().filter_map(|r| r[c]).collect();
        if present.is_empty() {
            return Err(DatasetError::AllNull(table.feature_names[c].clone()));
        }
        null_counts.push(table.rows() - present.len());
        fill.push(median(&mut present));
    }
    Ok(ImputeParams {
        fill: Vector::from(fill),
        null_counts,
    })
}

pub fn impute_apply(table: &NumericTable, params: &ImputeParams) -> Result<Matrix, DatasetError> {
    let cols = table.feature_names.len();
    if params.fill.len() != cols {
        return Err(DatasetError::Inconsistent(format!(
            "imputation fitted on {} columns, table has {cols}",
            params.fill.len()
        )));
    }
    let mut data = Vec::with_capacity(table.rows() * cols);
    for row in &table.values {
        data.extend(row.iter().zip(params.fill.iter()).map(|(v, f)| v.unwrap_or(*f)));
    }
    Matrix::from_vec(table.rows(), cols, data).map_err(|e| DatasetError::Inconsistent(e.to_string()))
}

/// Fits medians on `table` and fills its own nulls with them.
pub fn impute_fit_apply(table: &NumericTable) -> Result<(Matrix, ImputeParams), DatasetError> {
    let params = impute_fit(table)?;
    Ok((impute_apply(table, &params)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a label spelling onto its canonical class name.
///
/// Matching ignores case, whitespace, `-` and `_`; `DoS` is an alias of
/// De-Authentication and `False Data Injection` of FDI.
pub fn canonical_label(label: &str) -> Result<&'static str, DatasetError> {
    let key: String = label
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect();
    match key.as_str() {
        "benign" => Ok("Benign"),
        "deauthentication" | "dos" => Ok("De-Authentication"),
        "eviltwin" => Ok("Evil Twin"),
        "fdi" | "falsedatainjection" => Ok("FDI"),
        "replay" => Ok("Replay"),
        _ => Err(DatasetError::UnknownLabel(label.to_string())),
    }
}

/// Returns per-row class ids and the class names they index.
///
/// Binary: Benign = 0, every attack = 1. Multi-class: the classes present,
/// sorted alphabetically.
pub fn encode_labels(labels: &[String], task: Task) -> Result<(Vec<usize>, Vec<String>), DatasetError> {
    let canon: Vec<&'static str> = labels
        .iter()
        .map(|l| canonical_label(l))
        .collect::<Result<_, _>>()?;
    match task {
        Task::Binary => Ok((
            canon.iter().map(|&c| usize::from(c != BENIGN)).collect(),
            vec![BENIGN.to_string(), ATTACK.to_string()],
        )),
        Task::Multiclass => {
            let mut present: Vec<&str> = canon.clone();
            present.sort_unstable();
            present.dedup();
            let ids = canon
                .iter()
                .map(|c| present.binary_search(c).expect("present"))
                .collect();
            Ok((ids, present.into_iter().map(String::from).collect()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub features: Matrix,
    pub feature_names: Vec<String>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl FeatureTable {
    pub fn new(
        features: Matrix,
        feature_names: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let t = Self {
            features,
            feature_names,
            labels,
            class_names,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Inconsistent(m));
        if self.features.cols() != self.feature_names.len() {
            return bad(format!(
                "{} feature columns but {} names",
                self.features.cols(),
                self.feature_names.len()
            ));
        }
        if self.features.rows() != self.labels.len() {
            return bad(format!("{} rows but {} labels", self.features.rows(), self.labels.len()));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return bad(format!("label id {l} with only {} classes", self.class_names.len()));
        }
        if !self.features.is_finite() {
            return bad("non-finite feature value".into());
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            features: self.features.select_rows(indices),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Relabels a multi-class table as Benign (0) vs Attack (1).
    pub fn to_binary(&self) -> FeatureTable {
        let benign = self.class_names.iter().position(|c| c == BENIGN);
        FeatureTable {
            features: self.features.clone(),
            feature_names: self.feature_names.clone(),
            labels: self.labels.iter().map(|&l| usize::from(Some(l) != benign)).collect(),
            class_names: vec![BENIGN.to_string(), ATTACK.to_string()],
        }
    }

    pub fn for_task(&self, task: Task) -> FeatureTable {
        match task {
            Task::Binary => self.to_binary(),
            Task::Multiclass => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vector,
    pub max: Vector,
}

pub fn fit_scaler(train: &FeatureTable) -> ScalerParams {
    fit_scaler_matrix(&train.features)
}

pub fn fit_scaler_matrix(x: &Matrix) -> ScalerParams {
    let mut min = vec![f64::INFINITY; x.cols()];
    let mut max = vec![f64::NEG_INFINITY; x.cols()];
    for row in x.row_iter() {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    if x.rows() == 0 {
        min.fill(0.0);
        max.fill(0.0);
    }
    ScalerParams {
        min: Vector::from(min),
        max: Vector::from(max),
    }
}

/// `(x - min) / (max - min)` clamped to `[0, 1]`; constant features map to 0.
pub fn scale_matrix(params: &ScalerParams, x: &Matrix) -> Result<Matrix, DatasetError> {
    if params.min.len() != x.cols() {
        return Err(DatasetError::Inconsistent(format!(
            "scaler fitted on {} features, table has {}",
            params.min.len(),
            x.cols()
        )));
    }
    let mut out = x.clone();
    for r in 0..out.rows() {
        for (j, v) in out.row_mut(r).iter_mut().enumerate() {
            let (lo, hi) = (params.min[j], params.max[j]);
            let range = hi - lo;
            *v = if range > 0.0 {
                ((*v - lo) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

pub fn apply_scaler(params: &ScalerParams, table: &FeatureTable) -> Result<FeatureTable, DatasetError> {
    Ok(FeatureTable {
        features: scale_matrix(params, &table.features)?,
        ..table.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: FeatureTable,
    pub test: FeatureTable,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Per-class seeded shuffle; the first `round(ratio * count)` rows of each
/// class go to train (at least one row stays on each side). Both index lists
/// come back in ascending row order.
pub fn stratified_indices(
    labels: &[usize],
    class_names: &[String],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::BadRatio(ratio));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = SeededRng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut rows) in by_class.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(DatasetError::TooFewInClass {
                class: class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                count: rows.len(),
            });
        }
        rng.shuffle(&mut rows);
        let take = ((ratio * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        train.extend_from_slice(&rows[..take]);
        test.extend_from_slice(&rows[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(table: &FeatureTable, ratio: f64, seed: u64) -> Result<DatasetSplit, DatasetError> {
    let (train_indices, test_indices) = stratified_indices(&table.labels, &table.class_names, ratio, seed)?;
    Ok(DatasetSplit {
        train: table.select_rows(&train_indices),
        test: table.select_rows(&test_indices),
        train_indices,
        test_indices,
        seed,
        ratio,
    })
}

/// Share of each class id among `labels`.
pub fn class_proportions(labels: &[usize]) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// Everything needed to replay preprocessing on new raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub schema_version: u32,
    pub label_column: String,
    pub dropped_columns: Vec<String>,
    pub feature_names: Vec<String>,
    pub categorical_codes: BTreeMap<String, Vec<String>>,
    pub impute: ImputeParams,
    pub scaler: ScalerParams,
    pub class_names: Vec<String>,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub train: FeatureTable,
    pub test: FeatureTable,
    pub params: PreprocessParams,
    /// Columns requested for dropping that the file did not have.
    pub missing_drops: Vec<String>,
}

/// Runs the full chain on a loaded raw table.
pub fn preprocess(
    raw: &RawTable,
    drop: &[String],
    ratio: f64,
    seed: u64,
) -> Result<Preprocessed, DatasetError> {
    let (dropped, missing_drops) = drop_columns(raw, drop);
    let numeric = to_numeric(&dropped)?;
    let (labels, class_names) = encode_labels(&numeric.raw_labels, Task::Multiclass)?;
    let (train_idx, test_idx) = stratified_indices(&labels, &class_names, ratio, seed)?;

    let train_num = numeric.select_rows(&train_idx);
    let test_num = numeric.select_rows(&test_idx);
    let impute = impute_fit(&train_num)?;
    let train_x = impute_apply(&train_num, &impute)?;
    let test_x = impute_apply(&test_num, &impute)?;
    let scaler = fit_scaler_matrix(&train_x);

    let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let train = FeatureTable::new(
        scale_matrix(&scaler, &train_x)?,
        numeric.feature_names.clone(),
        pick(&train_idx),
        class_names.clone(),
    )?;
    let test = FeatureTable::new(
        scale_matrix(&scaler, &test_x)?,
        numeric.feature_names.clone(),
        pick(&test_idx),
        class_names.clone(),
    )?;
    let params = PreprocessParams {
        schema_version: 1,
        label_column: raw.label_column.clone(),
        dropped_columns: drop.to_vec(),
        feature_names: numeric.feature_names.clone(),
        categorical_codes: numeric.categorical.clone(),
        impute,
        scaler,
        class_names,
        split_ratio: ratio,
        split_seed: seed,
        train_rows: train.rows(),
        test_rows: test.rows(),
    };
    Ok(Preprocessed {
        train,
        test,
        params,
        missing_drops,
    })
}

/// Applies frozen parameters to another raw table with the same schema.
/// Unseen categories are treated as nulls.
pub fn transform(raw: &RawTable, params: &PreprocessParams) -> Result<FeatureTable, DatasetError> {
    let (dropped, _) = drop_columns(raw, &params.dropped_columns);
    let label_idx = dropped.label_index()?;
    let mut positions = Vec::with_capacity(params.feature_names.len());
    for name in &params.feature_names {
        positions.push(dropped.column_index(name).ok_or_else(|| {
            DatasetError::Inconsistent(format!("column {name:?} missing from input"))
        })?);
    }
    let mut values = Vec::with_capacity(dropped.rows());
    let mut raw_labels = Vec::with_capacity(dropped.rows());
    for (r, row) in dropped.cells.iter().enumerate() {
        raw_labels.push(row[label_idx].clone().ok_or(DatasetError::MissingLabel { row: r })?);
        values.push(
            params
                .feature_names
                .iter()
                .zip(&positions)
                .map(|(name, &p)| {
                    let cell = row[p].as_deref()?;
                    match params.categorical_codes.get(name) {
                        Some(cats) => cats.iter().position(|c| c == cell).map(|i| i as f64),
                        None => parse_number(cell),
                    }
                })
                .collect(),
        );
    }
    let numeric = NumericTable {
        feature_names: params.feature_names.clone(),
        values,
        raw_labels,
        categorical: params.categorical_codes.clone(),
    };
    let x = scale_matrix(&params.scaler, &impute_apply(&numeric, &params.impute)?)?;
    let mut labels = Vec::with_capacity(numeric.rows());
    for l in &numeric.raw_labels {
        let canon = canonical_label(l)?;
        labels.push(
            params
                .class_names
                .iter()
                .position(|c| c == canon)
                .ok_or_else(|| DatasetError::UnknownLabel(l.clone()))?,
        );
    }
    FeatureTable::new(x, params.feature_names.clone(), labels, params.class_names.clone())
}

/// Writes features plus a class-name label column. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_feature_csv(table: &FeatureTable, label_column: &str, path: &Path) -> Result<(), DatasetError> {
    write_matrix_csv(&table.features, &table.feature_names, &table.labels, &table.class_names, label_column, path)
}

pub fn write_matrix_csv(
    x: &Matrix,
    names: &[String],
    labels: &[usize],
    class_names: &[String],
    label_column: &str,
    path: &Path,
) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push(label_column);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (r, row) in x.row_iter().enumerate() {
        let mut line = String::new();
        for v in row {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&class_names[labels[r]]);
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a file written by [`write_feature_csv`], mapping label names through
/// `class_names`.
pub fn read_feature_csv(path: &Path, label_column: &str, class_names: &[String]) -> Result<FeatureTable, DatasetError> {
    let raw = load_csv(path, label_column)?;
    let label_idx = raw.label_index()?;
    let feature_names: Vec<String> = raw
        .column_names
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let mut data = Vec::with_capacity(raw.rows() * feature_names.len());
    let mut labels = Vec::with_capacity(raw.rows());
    for (r, row) in raw.cells.iter().enumerate() {
        for (i, cell) in row.iter().enumerate() {
            if i == label_idx {
                let name = cell.as_deref().ok_or(DatasetError::MissingLabel { row: r })?;
                labels.push(
                    class_names
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| DatasetError::UnknownLabel(name.to_string()))?,
                );
            } else {
                let v = cell.as_deref().and_then(parse_number).ok_or_else(|| {
                    DatasetError::Inconsistent(format!("row {r} column {i} is not a finite number"))
                })?;
                data.push(v);
            }
        }
    }
    let features = Matrix::from_vec(raw.rows(), feature_names.len(), data)
        .map_err(|e| DatasetError::Inconsistent(e.to_string()))?;
    FeatureTable::new(features, feature_names, labels, class_names.to_vec())
}
