//! Evaluation summaries, markdown tables, and the baselines file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierKind;
use crate::dataset::Task;
use crate::metrics::{Averaged, Averaging, EvalReport};

use super::config::SelectionMetric;
use super::PipelineError;

/// Averaging used for the headline numbers of each task: support-weighted
/// for binary, macro for multi-class.
pub fn task_averaging(task: Task) -> Averaging {
    match task {
        Task::Binary => Averaging::Weighted,
        Task::Multiclass => Averaging::Macro,
    }
}

pub fn task_title(task: Task) -> &'static str {
    match task {
        Task::Binary => "Binary classification",
        Task::Multiclass => "Multi-class classification",
    }
}

/// Fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl Scores {
    pub fn from_report(r: &EvalReport) -> Self {
        Self {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            accuracy: r.accuracy,
        }
    }

    pub fn get(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::Precision => self.precision,
            SelectionMetric::Recall => self.recall,
            SelectionMetric::F1 => self.f1,
            SelectionMetric::Accuracy => self.accuracy,
        }
    }

    fn cells(&self) -> [String; 4] {
        [self.precision, self.recall, self.f1, self.accuracy].map(percent)
    }
}

pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

/// Full per-model result as written to `<model>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub task: Task,
    pub n: usize,
    pub model: ClassifierKind,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    #[serde(flatten)]
    pub report: EvalReport,
    /// The same predictions under the other averaging convention.
    pub alternate: AlternateAveraging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternateAveraging {
    pub averaging: Averaging,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl AlternateAveraging {
    pub fn of(report: &EvalReport) -> Self {
        let averaging = match report.averaging {
            Averaging::Macro => Averaging::Weighted,
            Averaging::Weighted => Averaging::Macro,
        };
        let Averaged { precision, recall, f1 } = report.averaged(averaging);
        Self {
            averaging,
            precision,
            recall,
            f1,
        }
    }
}

/// Written in place of a [`ModelReport`] when a row fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFailure {
    pub task: Task,
    pub n: usize,
    pub model: ClassifierKind,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSummary {
    pub model: ClassifierKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One `(N, task)` evaluation: every configured model in configuration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub task: Task,
    pub n: usize,
    pub averaging: Averaging,
    pub selection_metric: SelectionMetric,
    pub best: Option<ClassifierKind>,
    pub rows: Vec<RowSummary>,
}

impl EvalSummary {
    pub fn new(task: Task, n: usize, selection_metric: SelectionMetric, rows: Vec<RowSummary>) -> Self {
        let best = select_best(&rows, selection_metric).map(|i| rows[i].model);
        Self {
            task,
            n,
            averaging: task_averaging(task),
            selection_metric,
            best,
            rows,
        }
    }

    pub fn best_row(&self) -> Option<&RowSummary> {
        let best = self.best?;
        self.rows.iter().find(|r| r.model == best)
    }
}

/// Index of the row with the highest metric; ties keep the earliest row and
/// failed rows never win.
pub fn select_best(rows: &[RowSummary], metric: SelectionMetric) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(s) = &row.scores {
            let v = s.get(metric);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Pipe table with padded columns. The first column is left-aligned, the
/// rest right-aligned.
fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count(), 3])
                .max()
                .unwrap_or(3)
        })
        .collect();
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut out = line(header);
    let rule: Vec<String> = widths
        .iter()
        .enumerate()
        .map(|(c, &w)| {
            if c == 0 {
                format!(":{}", "-".repeat(w - 1))
            } else {
                format!("{}:", "-".repeat(w - 1))
            }
        })
        .collect();
    out.push_str(&format!("| {} |\n", rule.join(" | ")));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

const METRIC_HEADERS: [&str; 4] = ["Precision", "Recall", "F1-score", "Accuracy"];

fn failure_notes(summaries: &[&EvalSummary]) -> String {
    let mut out = String::new();
    for s in summaries {
        for r in &s.rows {
            if let Some(e) = &r.error {
                out.push_str(&format!("- {} ({}): {e}\n", r.model, s.task));
            }
        }
    }
    if out.is_empty() {
        out
    } else {
        format!("\nFailed rows:\n\n{out}")
    }
}

/// Table for one task and latent size: one row per model, scores in
/// percent, the selected model marked with `*`.
pub fn render_task_table(s: &EvalSummary) -> String {
    let mut header = vec!["Model".to_string()];
    header.extend(METRIC_HEADERS.iter().map(|h| h.to_string()));
    header.push("Best".into());
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.model.label().to_string()];
            match &r.scores {
                Some(sc) => cells.extend(sc.cells()),
                None => cells.extend(std::iter::repeat_n("error".to_string(), 4)),
            }
            cells.push(if s.best == Some(r.model) { "*".into() } else { String::new() });
            cells
        })
        .collect();
    format!(
        "{}, N = {} ({} averaging, best by {})\n\n{}{}",
        task_title(s.task),
        s.n,
        s.averaging,
        s.selection_metric,
        markdown_table(&header, &rows),
        failure_notes(&[s])
    )
}

/// All tasks for one latent size side by side. The best cell of each task
/// is marked with `*`.
pub fn render_models_table(n: usize, summaries: &[EvalSummary]) -> String {
    let mut header = vec!["Model".to_string()];
    for s in summaries {
        let prefix = match s.task {
            Task::Binary => "Binary",
            Task::Multiclass => "Multi-class",
        };
        header.extend(METRIC_HEADERS.iter().map(|h| format!("{prefix} {h}")));
    }
    let mut models: Vec<ClassifierKind> = Vec::new();
    for s in summaries {
        for r in &s.rows {
            if !models.contains(&r.model) {
                models.push(r.model);
            }
        }
    }
    let rows: Vec<Vec<String>> = models
        .iter()
        .map(|&m| {
            let mut cells = vec![m.label().to_string()];
            for s in summaries {
                let row = s.rows.iter().find(|r| r.model == m);
                match row.and_then(|r| r.scores) {
                    Some(sc) => {
                        let mut c = sc.cells();
                        if s.best == Some(m) {
                            for v in &mut c {
                                v.push('*');
                            }
                        }
                        cells.extend(c);
                    }
                    None => cells.extend(std::iter::repeat_n(
                        if row.is_some() { "error" } else { "-" }.to_string(),
                        4,
                    )),
                }
            }
            cells
        })
        .collect();
    let refs: Vec<&EvalSummary> = summaries.iter().collect();
    format!(
        "Models on {n} extracted features\n\n{}{}",
        markdown_table(&header, &rows),
        failure_notes(&refs)
    )
}

/// One row of the baselines file. Scores are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub task: Task,
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub const BASELINE_COLUMNS: [&str; 7] = ["method", "task", "n", "precision", "recall", "f1", "accuracy"];

fn parse_task(s: &str) -> Option<Task> {
    match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
        "binary" => Some(Task::Binary),
        "multiclass" => Some(Task::Multiclass),
        _ => None,
    }
}

/// Reads a baselines CSV. Errors name the offending line.
pub fn read_baselines(path: &Path) -> Result<Vec<BaselineRow>, PipelineError> {
    let file = path.display().to_string();
    let bad = |line: u64, message: String| PipelineError::Baselines {
        path: file.clone(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let mut index = [0usize; 7];
    for (slot, name) in index.iter_mut().zip(BASELINE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(1, format!("missing column {name:?}")))?;
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let task = parse_task(field(1)).ok_or_else(|| bad(line, format!("unknown task {:?}", field(1))))?;
        let n = field(2)
            .parse()
            .map_err(|_| bad(line, format!("n must be a positive integer, got {:?}", field(2))))?;
        let mut scores = [0.0; 4];
        for (k, s) in scores.iter_mut().enumerate() {
            let text = field(3 + k);
            *s = text
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=100.0).contains(v))
                .ok_or_else(|| bad(line, format!("{} must be a percentage, got {text:?}", BASELINE_COLUMNS[3 + k])))?;
        }
        if field(0).is_empty() {
            return Err(bad(line, "empty method name".into()));
        }
        rows.push(BaselineRow {
            method: field(0).to_string(),
            task,
            n,
            precision: scores[0],
            recall: scores[1],
            f1: scores[2],
            accuracy: scores[3],
        });
    }
    Ok(rows)
}

pub const PROPOSED_METHOD: &str = "Proposed autoencoder";

/// Baseline methods (file order) followed by the proposed method, for one
/// latent size; per task, the proposed row uses that task's selected model.
pub fn render_comparison(n: usize, summaries: &[EvalSummary], baselines: &[BaselineRow]) -> String {
    let tasks: Vec<Task> = summaries.iter().map(|s| s.task).collect();
    let mut header = vec!["Method".to_string()];
    for &t in &tasks {
        let prefix = match t {
            Task::Binary => "Binary",
            Task::Multiclass => "Multi-class",
        };
        header.extend(METRIC_HEADERS.iter().map(|h| format!("{prefix} {h}")));
    }
    let mut methods: Vec<&str> = Vec::new();
    for b in baselines.iter().filter(|b| b.n == n) {
        if !methods.contains(&b.method.as_str()) {
            methods.push(&b.method);
        }
    }
    let mut rows = Vec::new();
    for m in methods {
        let mut cells = vec![m.to_string()];
        for &t in &tasks {
            match baselines.iter().find(|b| b.n == n && b.task == t && b.method == m) {
                Some(b) => cells.extend([b.precision, b.recall, b.f1, b.accuracy].map(|v| format!("{v:.2}"))),
                None => cells.extend(std::iter::repeat_n("-".to_string(), 4)),
            }
        }
        rows.push(cells);
    }
    let picks: Vec<String> = summaries
        .iter()
        .map(|s| s.best.map_or("none".to_string(), |b| b.label().to_string()))
        .collect();
    let mut cells = vec![format!("{PROPOSED_METHOD} ({})", picks.join(", "))];
    for s in summaries {
        match s.best_row().and_then(|r| r.scores) {
            Some(sc) => cells.extend(sc.cells()),
            None => cells.extend(std::iter::repeat_n("-".to_string(), 4)),
        }
    }
    rows.push(cells);
    format!(
        "Comparison on {n} extracted features\n\n{}",
        markdown_table(&header, &rows)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: ClassifierKind, f1: f64) -> RowSummary {
        RowSummary {
            model,
            scores: Some(Scores {
                precision: 0.5,
                recall: 0.5,
                f1,
                accuracy: 0.5,
            }),
            error: None,
        }
    }

    #[test]
    fn best_is_first_maximum() {
        let rows = vec![
            row(ClassifierKind::Dt, 0.7),
            row(ClassifierKind::Rf, 0.9),
            row(ClassifierKind::Knn, 0.9),
        ];
        assert_eq!(select_best(&rows, SelectionMetric::F1), Some(1));
        assert_eq!(select_best(&rows, SelectionMetric::Accuracy), Some(0));
    }

    #[test]
    fn failed_rows_never_win() {
        let rows = vec![
            RowSummary {
                model: ClassifierKind::Dt,
                scores: None,
                error: Some("boom".into()),
            },
            row(ClassifierKind::Svm, 0.1),
        ];
        assert_eq!(select_best(&rows, SelectionMetric::F1), Some(1));
        assert_eq!(select_best(&rows[..1], SelectionMetric::F1), None);
    }

    #[test]
    fn percent_rounds_to_two_places() {
        assert_eq!(percent(1.0), "100.00");
        assert_eq!(percent(0.94214), "94.21");
        assert_eq!(percent(0.0), "0.00");
    }

    #[test]
    fn baselines_parse_and_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::write(
            &good,
            "method,task,n,precision,recall,f1,accuracy\nFNN-SHAP,multi-class,4,78.32,79.30,78.81,71.64\n",
        )
        .unwrap();
        let rows = read_baselines(&good).unwrap();
        assert_eq!(rows[0].task, Task::Multiclass);
        assert_eq!(rows[0].f1, 78.81);

        let bad = dir.path().join("bad.csv");
        std::fs::write(
            &bad,
            "method,task,n,precision,recall,f1,accuracy\nA,binary,4,1,2,3,4\nB,binary,four,1,2,3,4\n",
        )
        .unwrap();
        match read_baselines(&bad) {
            Err(PipelineError::Baselines { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a line error, got {other:?}"),
        }
    }

    #[test]
    fn comparison_without_baselines_has_only_the_proposed_row() {
        let s = EvalSummary::new(Task::Binary, 4, SelectionMetric::F1, vec![row(ClassifierKind::Dt, 0.8)]);
        let text = render_comparison(4, &[s], &[]);
        let body: Vec<&str> = text.lines().filter(|l| l.starts_with("| ")).collect();
        assert_eq!(body.len(), 3);
        assert!(body[2].starts_with("| Proposed autoencoder (DT)"));
    }
}
