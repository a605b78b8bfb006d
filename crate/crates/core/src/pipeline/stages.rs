use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::autoencoder::{build, AeModel};
use crate::classifiers::{train, ClassifierModel, ClassifierSpec};
use crate::dataset::{
    load_csv, preprocess, read_feature_csv, write_feature_csv, write_matrix_csv, FeatureTable, PreprocessParams, Task,
};
use crate::metrics::{confusion, evaluate, EvalReport};
use crate::numkernel::{derive_seed_str, SeededRng};
use crate::persist;

use super::config::RunConfig;
use super::manifest::{record_timing, sha256_bytes, sha256_file, Artifact, DatasetRecord, RunManifest, StageRecord, StageTiming};
use super::report::{
    read_baselines, render_comparison, render_models_table, render_task_table, task_averaging, AlternateAveraging,
    BaselineRow, EvalSummary, ModelFailure, ModelReport, RowSummary, Scores,
};
use super::PipelineError;

/// Artifact paths, relative to the run directory.
pub mod layout {
    use crate::classifiers::ClassifierKind;
    use crate::dataset::Task;

    pub const TRAIN_FEATURES: &str = "preprocess/train.csv";
    pub const TEST_FEATURES: &str = "preprocess/test.csv";
    pub const PREPROCESS_PARAMS: &str = "preprocess/params.json";
    pub const COMPARE_TABLE: &str = "compare.md";
    pub const COMPARE_JSON: &str = "compare.json";

    pub fn autoencoder(n: usize) -> String {
        format!("n{n}/autoencoder.json")
    }

    pub fn loss_curve(n: usize) -> String {
        format!("n{n}/loss_curve.csv")
    }

    pub fn ae_report(n: usize) -> String {
        format!("n{n}/train_report.json")
    }

    pub fn latent_train(n: usize) -> String {
        format!("n{n}/latent_train.csv")
    }

    pub fn latent_test(n: usize) -> String {
        format!("n{n}/latent_test.csv")
    }

    pub fn eval_dir(n: usize, task: Task) -> String {
        format!("n{n}/{task}")
    }

    pub fn model_report(n: usize, task: Task, kind: ClassifierKind) -> String {
        format!("n{n}/{task}/{}.json", kind.label().to_ascii_lowercase())
    }

    pub fn model_file(n: usize, task: Task, kind: ClassifierKind) -> String {
        format!("n{n}/{task}/{}.model.json", kind.label().to_ascii_lowercase())
    }

    pub fn summary(n: usize, task: Task) -> String {
        format!("n{n}/{task}/summary.json")
    }

    pub fn task_table(n: usize, task: Task) -> String {
        format!("n{n}/{task}/table.md")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(io_err(path))
}

/// Seeded split of `rows` into (fit, held-out) index lists, both ascending.
fn holdout(rows: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order = SeededRng::new(derive_seed_str(seed, "ae/holdout")).permutation(rows);
    let n_val = ((fraction * rows as f64).round() as usize).clamp(1, rows.saturating_sub(1).max(1));
    let mut val = order.split_off(rows - n_val);
    order.sort_unstable();
    val.sort_unstable();
    (order, val)
}

fn stage_eval(n: usize, task: Task) -> String {
    format!("train-eval/n{n}/{task}")
}

/// Stage runner over one run directory. Each stage records its outputs and
/// a key derived from its settings and input digests; with caching on, a
/// stage whose key is unchanged and whose outputs are intact is skipped.
pub struct Pipeline {
    config: RunConfig,
    dir: PathBuf,
    manifest: RunManifest,
    use_cache: bool,
}

impl Pipeline {
    pub fn open(config: RunConfig, dir: &Path, use_cache: bool) -> Result<Self, PipelineError> {
        config.validate()?;
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut manifest = RunManifest::load(dir).unwrap_or_else(|| RunManifest::new(config.snapshot()));
        manifest.config = config.snapshot();
        Ok(Self {
            config,
            dir: dir.to_path_buf(),
            manifest,
            use_cache,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn into_manifest(self) -> RunManifest {
        self.manifest
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    fn input_digest(&self, stage: &str, rel: &str) -> Result<String, PipelineError> {
        let p = self.path(rel);
        if !p.is_file() {
            return Err(PipelineError::MissingArtifact {
                stage: stage.to_string(),
                path: rel.to_string(),
            });
        }
        sha256_file(&p)
    }

    fn class_names(&self) -> Result<PreprocessParams, PipelineError> {
        Ok(persist::read_json(&self.path(layout::PREPROCESS_PARAMS))?)
    }

    /// Returns `true` when the stage ran, `false` when it was cached.
    fn run_stage<F>(&mut self, name: &str, inputs: Value, body: F) -> Result<bool, PipelineError>
    where
        F: FnOnce(&Self) -> Result<(Vec<String>, Value), PipelineError>,
    {
        let key_doc = json!({ "stage": name, "inputs": inputs });
        let key = sha256_bytes(&serde_json::to_vec(&key_doc).expect("json"));
        if self.use_cache {
            if let Some(rec) = self.manifest.stages.get(name) {
                if rec.key == key && rec.outputs.iter().all(|a| a.verify(&self.dir)) {
                    log::info!("{name}: inputs unchanged, skipping");
                    record_timing(
                        &self.dir,
                        name,
                        StageTiming {
                            seconds: 0.0,
                            status: "cached".into(),
                        },
                    )?;
                    return Ok(false);
                }
            }
        }
        log::info!("{name}: running");
        let start = Instant::now();
        let (outputs, summary) = body(self).map_err(|e| e.in_stage(name))?;
        let outputs = outputs
            .iter()
            .map(|rel| Artifact::record(&self.dir, rel))
            .collect::<Result<Vec<_>, _>>()?;
        self.manifest.stages.insert(name.to_string(), StageRecord { key, outputs, summary });
        self.manifest.save(&self.dir)?;
        record_timing(
            &self.dir,
            name,
            StageTiming {
                seconds: start.elapsed().as_secs_f64(),
                status: "ran".into(),
            },
        )?;
        Ok(true)
    }

    pub fn preprocess(&mut self) -> Result<bool, PipelineError> {
        let name = "preprocess";
        let data = self.config.dataset_path();
        let digest = sha256_file(&data).map_err(|e| e.in_stage(name))?;
        let bytes = std::fs::metadata(&data).map_err(io_err(&data))?.len();
        self.manifest.dataset = Some(DatasetRecord {
            path: self.config.dataset.display().to_string(),
            sha256: digest.clone(),
            bytes,
        });
        let c = &self.config;
        let inputs = json!({
            "dataset": digest,
            "label_column": c.label_column,
            "drop_columns": c.drop_columns,
            "train_ratio": c.train_ratio,
            "seed": c.seed,
        });
        self.run_stage(name, inputs, |p| {
            let c = &p.config;
            let raw = load_csv(&data, &c.label_column)?;
            let pre = preprocess(&raw, &c.drop_columns, c.train_ratio, c.seed)?;
            for missing in &pre.missing_drops {
                log::warn!("column {missing:?} listed in drop_columns is not in the dataset");
            }
            let train_path = p.path(layout::TRAIN_FEATURES);
            ensure_parent(&train_path)?;
            write_feature_csv(&pre.train, &c.label_column, &train_path)?;
            write_feature_csv(&pre.test, &c.label_column, &p.path(layout::TEST_FEATURES))?;
            persist::write_json(&pre.params, &p.path(layout::PREPROCESS_PARAMS))?;
            log::info!(
                "preprocess: {} features, {} train / {} test rows",
                pre.params.feature_names.len(),
                pre.train.rows(),
                pre.test.rows()
            );
            Ok((
                vec![
                    layout::TRAIN_FEATURES.into(),
                    layout::TEST_FEATURES.into(),
                    layout::PREPROCESS_PARAMS.into(),
                ],
                json!({
                    "features": pre.params.feature_names.len(),
                    "train_rows": pre.train.rows(),
                    "test_rows": pre.test.rows(),
                    "classes": pre.params.class_names,
                    "missing_drops": pre.missing_drops,
                }),
            ))
        })
    }

    pub fn train_ae(&mut self, n: usize) -> Result<bool, PipelineError> {
        let name = format!("train-ae/n{n}");
        let seed = self.config.ae_seed(n);
        let inputs = json!({
            "train": self.input_digest(&name, layout::TRAIN_FEATURES)?,
            "params": self.input_digest(&name, layout::PREPROCESS_PARAMS)?,
            "autoencoder": self.config.autoencoder,
            "n": n,
            "seed": seed,
        });
        self.run_stage(&name, inputs, |p| {
            let params = p.class_names()?;
            let m = params.feature_names.len();
            let ae_config = p.config.autoencoder.to_config(m, n, seed);
            ae_config.validate()?;
            let table = read_feature_csv(&p.path(layout::TRAIN_FEATURES), &p.config.label_column, &params.class_names)?;
            let (fit_rows, val_rows) = holdout(table.rows(), ae_config.validation_fraction, seed);
            let fit = table.features.select_rows(&fit_rows);
            let val = table.features.select_rows(&val_rows);
            let mut model = build(&ae_config)?;
            let report = model.train(&fit, &val)?;
            log::info!(
                "autoencoder N={n}: best validation loss {:.6e} at epoch {} (stopped at {})",
                report.best_val_loss,
                report.best_epoch,
                report.stopped_epoch
            );

            let model_path = p.path(&layout::autoencoder(n));
            ensure_parent(&model_path)?;
            model.save(&model_path)?;

            let curve_path = p.path(&layout::loss_curve(n));
            let mut w = BufWriter::new(File::create(&curve_path).map_err(io_err(&curve_path))?);
            writeln!(w, "epoch,train_loss,val_loss").map_err(io_err(&curve_path))?;
            for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
                writeln!(w, "{},{t},{v}", i + 1).map_err(io_err(&curve_path))?;
            }
            w.flush().map_err(io_err(&curve_path))?;

            let summary = json!({
                "input_dim": m,
                "bottleneck_dim": n,
                "param_count": model.counted_params(),
                "fit_rows": fit_rows.len(),
                "validation_rows": val_rows.len(),
                "best_epoch": report.best_epoch,
                "stopped_epoch": report.stopped_epoch,
                "best_val_loss": report.best_val_loss,
            });
            persist::write_json(&summary, &p.path(&layout::ae_report(n)))?;
            Ok((
                vec![layout::autoencoder(n), layout::loss_curve(n), layout::ae_report(n)],
                summary,
            ))
        })
    }

    pub fn extract(&mut self, n: usize) -> Result<bool, PipelineError> {
        let name = format!("extract/n{n}");
        let inputs = json!({
            "model": self.input_digest(&name, &layout::autoencoder(n))?,
            "train": self.input_digest(&name, layout::TRAIN_FEATURES)?,
            "test": self.input_digest(&name, layout::TEST_FEATURES)?,
            "params": self.input_digest(&name, layout::PREPROCESS_PARAMS)?,
        });
        self.run_stage(&name, inputs, |p| {
            let params = p.class_names()?;
            let model = AeModel::load(&p.path(&layout::autoencoder(n)))?;
            if model.bottleneck_dim() != n {
                return Err(PipelineError::Dimension {
                    expected: n,
                    found: model.bottleneck_dim(),
                });
            }
            let names: Vec<String> = (0..n).map(|j| format!("z{j}")).collect();
            let mut rows = Vec::new();
            for (src, dst) in [
                (layout::TRAIN_FEATURES.to_string(), layout::latent_train(n)),
                (layout::TEST_FEATURES.to_string(), layout::latent_test(n)),
            ] {
                let table = read_feature_csv(&p.path(&src), &p.config.label_column, &params.class_names)?;
                if table.features.cols() != model.input_dim() {
                    return Err(PipelineError::Dimension {
                        expected: model.input_dim(),
                        found: table.features.cols(),
                    });
                }
                let latent = model.encode(&table.features)?;
                write_matrix_csv(
                    latent.as_matrix(),
                    &names,
                    &table.labels,
                    &table.class_names,
                    &p.config.label_column,
                    &p.path(&dst),
                )?;
                rows.push(table.rows());
            }
            Ok((
                vec![layout::latent_train(n), layout::latent_test(n)],
                json!({ "n": n, "train_rows": rows[0], "test_rows": rows[1] }),
            ))
        })
    }

    fn specs(&self) -> Vec<ClassifierSpec> {
        self.config
            .classifiers
            .iter()
            .map(|e| self.config.classifier_spec(e))
            .collect()
    }

    fn load_latent(&self, n: usize, task: Task) -> Result<(FeatureTable, FeatureTable), PipelineError> {
        let params = self.class_names()?;
        let label = &self.config.label_column;
        let train = read_feature_csv(&self.path(&layout::latent_train(n)), label, &params.class_names)?;
        let test = read_feature_csv(&self.path(&layout::latent_test(n)), label, &params.class_names)?;
        Ok((train.for_task(task), test.for_task(task)))
    }

    pub fn train_eval(&mut self, n: usize, task: Task) -> Result<bool, PipelineError> {
        let name = stage_eval(n, task);
        let inputs = json!({
            "train": self.input_digest(&name, &layout::latent_train(n))?,
            "test": self.input_digest(&name, &layout::latent_test(n))?,
            "params": self.input_digest(&name, layout::PREPROCESS_PARAMS)?,
            "task": task,
            "classifiers": self.specs(),
            "selection_metric": self.config.selection_metric,
        });
        self.run_stage(&name, inputs, |p| {
            let (train_t, test_t) = p.load_latent(n, task)?;
            let specs = p.specs();
            let outcomes: Vec<Result<(ClassifierModel, EvalReport), PipelineError>> = specs
                .par_iter()
                .map(|spec| fit_and_score(spec, &train_t, &test_t, task))
                .collect();

            let mut outputs = Vec::new();
            let mut rows = Vec::new();
            for (spec, outcome) in specs.iter().zip(outcomes) {
                let kind = spec.kind();
                let report_rel = layout::model_report(n, task, kind);
                let report_path = p.path(&report_rel);
                ensure_parent(&report_path)?;
                match outcome {
                    Ok((model, report)) => {
                        let model_rel = layout::model_file(n, task, kind);
                        model.save(&p.path(&model_rel))?;
                        outputs.push(model_rel);
                        rows.push(RowSummary {
                            model: kind,
                            scores: Some(Scores::from_report(&report)),
                            error: None,
                        });
                        let full = ModelReport {
                            task,
                            n,
                            model: kind,
                            seed: spec.seed,
                            train_rows: train_t.rows(),
                            test_rows: test_t.rows(),
                            alternate: AlternateAveraging::of(&report),
                            report,
                        };
                        persist::write_json(&full, &report_path)?;
                    }
                    Err(e) => {
                        log::warn!("{kind} on {task}, N={n}: {e}");
                        rows.push(RowSummary {
                            model: kind,
                            scores: None,
                            error: Some(e.to_string()),
                        });
                        persist::write_json(
                            &ModelFailure {
                                task,
                                n,
                                model: kind,
                                error: e.to_string(),
                            },
                            &report_path,
                        )?;
                    }
                }
                outputs.push(report_rel);
            }
            let summary = EvalSummary::new(task, n, p.config.selection_metric, rows);
            persist::write_json(&summary, &p.path(&layout::summary(n, task)))?;
            write_text(&p.path(&layout::task_table(n, task)), &render_task_table(&summary))?;
            outputs.push(layout::summary(n, task));
            outputs.push(layout::task_table(n, task));
            let failed: Vec<String> = summary
                .rows
                .iter()
                .filter(|r| r.error.is_some())
                .map(|r| r.model.to_string())
                .collect();
            Ok((outputs, json!({ "best": summary.best, "failed": failed })))
        })
    }

    fn load_baselines(&self) -> Result<(Vec<BaselineRow>, Value), PipelineError> {
        match self.config.baselines_path() {
            None => Ok((Vec::new(), Value::Null)),
            Some(path) if !path.is_file() => {
                log::warn!(
                    "baselines file {} not found; the comparison lists the proposed method only",
                    path.display()
                );
                Ok((Vec::new(), json!("missing")))
            }
            Some(path) => Ok((read_baselines(&path)?, json!(sha256_file(&path)?))),
        }
    }

    pub fn compare(&mut self) -> Result<bool, PipelineError> {
        let name = "compare";
        let mut digests = serde_json::Map::new();
        for &n in &self.config.latent_dims {
            for &task in &self.config.tasks {
                let rel = layout::summary(n, task);
                digests.insert(rel.clone(), json!(self.input_digest(name, &rel)?));
            }
        }
        let (_, baseline_digest) = self.load_baselines().map_err(|e| e.in_stage(name))?;
        let inputs = json!({
            "summaries": digests,
            "baselines": baseline_digest,
            "latent_dims": self.config.latent_dims,
            "tasks": self.config.tasks,
        });
        self.run_stage(name, inputs, |p| {
            let (baselines, _) = p.load_baselines()?;
            let mut text = String::from("# Results\n");
            let mut picks = Vec::new();
            for &n in &p.config.latent_dims {
                let summaries = p
                    .config
                    .tasks
                    .iter()
                    .map(|&t| persist::read_json::<EvalSummary>(&p.path(&layout::summary(n, t))))
                    .collect::<Result<Vec<_>, _>>()?;
                text.push_str(&format!("\n## N = {n}\n\n"));
                text.push_str(&render_models_table(n, &summaries));
                text.push('\n');
                text.push_str(&render_comparison(n, &summaries, &baselines));
                for s in &summaries {
                    picks.push(json!({
                        "n": n,
                        "task": s.task,
                        "averaging": s.averaging,
                        "model": s.best,
                        "scores": s.best_row().and_then(|r| r.scores),
                    }));
                }
            }
            write_text(&p.path(layout::COMPARE_TABLE), &text)?;
            let doc = json!({
                "selection_metric": p.config.selection_metric,
                "proposed": picks,
                "baselines": baselines,
            });
            persist::write_json(&doc, &p.path(layout::COMPARE_JSON))?;
            Ok((
                vec![layout::COMPARE_TABLE.into(), layout::COMPARE_JSON.into()],
                json!({ "baseline_rows": baselines.len() }),
            ))
        })
    }

    /// Every stage in order; stages from earlier configurations are dropped
    /// from the manifest.
    pub fn run_all(&mut self) -> Result<(), PipelineError> {
        let mut planned = BTreeSet::from(["preprocess".to_string(), "compare".to_string()]);
        self.preprocess()?;
        for n in self.config.latent_dims.clone() {
            self.train_ae(n)?;
            self.extract(n)?;
            planned.insert(format!("train-ae/n{n}"));
            planned.insert(format!("extract/n{n}"));
            for task in self.config.tasks.clone() {
                self.train_eval(n, task)?;
                planned.insert(stage_eval(n, task));
            }
        }
        self.compare()?;
        self.manifest.stages.retain(|k, _| planned.contains(k));
        self.manifest.save(&self.dir)?;
        let stale = self.manifest.stale_artifacts(&self.dir);
        if let Some(first) = stale.first() {
            return Err(PipelineError::MissingArtifact {
                stage: "run-all".into(),
                path: first.clone(),
            });
        }
        Ok(())
    }
}

fn fit_and_score(
    spec: &ClassifierSpec,
    train_t: &FeatureTable,
    test_t: &FeatureTable,
    task: Task,
) -> Result<(ClassifierModel, EvalReport), PipelineError> {
    let model = train(spec, &train_t.features, &train_t.labels)?;
    let pred = model.predict(&test_t.features)?;
    let cm = confusion(&test_t.labels, &pred, test_t.class_names.len())?.with_class_names(&test_t.class_names);
    let report = evaluate(&cm, task_averaging(task))?;
    Ok((model, report))
}

pub fn cmd_preprocess(config: &RunConfig, out: &Path) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, false)?;
    p.preprocess()?;
    Ok(p.into_manifest())
}

pub fn cmd_train_ae(config: &RunConfig, out: &Path, n: usize) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, false)?;
    p.train_ae(n)?;
    Ok(p.into_manifest())
}

pub fn cmd_extract(config: &RunConfig, out: &Path, n: usize) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, false)?;
    p.extract(n)?;
    Ok(p.into_manifest())
}

pub fn cmd_train_eval(config: &RunConfig, out: &Path, n: usize, task: Task) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, false)?;
    p.train_eval(n, task)?;
    Ok(p.into_manifest())
}

pub fn cmd_compare(config: &RunConfig, out: &Path) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, false)?;
    p.compare()?;
    Ok(p.into_manifest())
}

/// Full run with stage caching.
pub fn cmd_run_all(config: &RunConfig, out: &Path) -> Result<RunManifest, PipelineError> {
    let mut p = Pipeline::open(config.clone(), out, true)?;
    p.run_all()?;
    Ok(p.into_manifest())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_partitions_rows() {
        let (fit, val) = holdout(50, 0.1, 3);
        assert_eq!(val.len(), 5);
        let mut all: Vec<usize> = fit.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(holdout(50, 0.1, 3), (fit, val));
    }
}
