use uavids::classifiers::ClassifierKind;
use uavids::dataset::Task;
use uavids::pipeline::report::{render_comparison, render_task_table, BaselineRow};
use uavids::pipeline::{EvalSummary, RowSummary, Scores, SelectionMetric};

fn ok(model: ClassifierKind, p: f64, r: f64, f1: f64, acc: f64) -> RowSummary {
    RowSummary {
        model,
        scores: Some(Scores {
            precision: p,
            recall: r,
            f1,
            accuracy: acc,
        }),
        error: None,
    }
}

fn binary_summary() -> EvalSummary {
    EvalSummary::new(
        Task::Binary,
        8,
        SelectionMetric::F1,
        vec![
            ok(ClassifierKind::Dt, 0.9487, 0.9454, 0.9421, 0.9454),
            ok(ClassifierKind::Rf, 0.9231, 0.9145, 0.9123, 0.9145),
            RowSummary {
                model: ClassifierKind::Knn,
                scores: None,
                error: Some("k = 5 exceeds the 3 training rows".into()),
            },
            ok(ClassifierKind::Mlp, 0.9322, 0.9119, 0.9254, 0.9119),
            ok(ClassifierKind::Svm, 0.8348, 0.8419, 0.8433, 0.8419),
        ],
    )
}

#[test]
fn task_table_matches_golden_file() {
    let expected = include_str!("golden/binary_n8_table.md");
    assert_eq!(render_task_table(&binary_summary()), expected);
}

#[test]
fn task_table_shape() {
    let text = render_task_table(&binary_summary());
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("| ")).collect();
    // header + rule + five models
    assert_eq!(rows.len(), 7);
    for row in &rows {
        assert_eq!(row.matches('|').count(), 7, "{row}");
    }
}

#[test]
fn all_correct_rows_render_as_100() {
    let s = EvalSummary::new(
        Task::Multiclass,
        4,
        SelectionMetric::F1,
        vec![ok(ClassifierKind::Dt, 1.0, 1.0, 1.0, 1.0)],
    );
    let text = render_task_table(&s);
    assert!(text.contains("| DT    |    100.00 | 100.00 |   100.00 |   100.00 |    * |"), "{text}");
}

#[test]
fn comparison_places_baselines_before_the_proposed_row() {
    let multi = EvalSummary::new(
        Task::Multiclass,
        4,
        SelectionMetric::F1,
        vec![
            ok(ClassifierKind::Dt, 0.7915, 0.7966, 0.794, 0.7248),
            ok(ClassifierKind::Mlp, 0.8318, 0.8129, 0.8222, 0.7402),
        ],
    );
    let baselines = vec![BaselineRow {
        method: "FNN-SHAP".into(),
        task: Task::Multiclass,
        n: 4,
        precision: 78.32,
        recall: 79.30,
        f1: 78.81,
        accuracy: 71.64,
    }];
    let text = render_comparison(4, &[multi], &baselines);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("| ")).skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("| FNN-SHAP"));
    assert!(rows[0].contains("78.81"));
    assert!(rows[1].starts_with("| Proposed autoencoder (MLP)"));
    assert!(rows[1].contains("82.22"));
    // baselines for another N are not shown
    assert!(!render_comparison(8, &[], &baselines).contains("FNN-SHAP"));
}
