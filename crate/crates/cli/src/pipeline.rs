use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tabrisk::epi::{factor_table, write_factors_csv, FactorOptions};
use tabrisk::eval::{
    evaluate, grid_search, make_cv_plan, pr_curve, roc_curve, MetricReport, SearchOptions,
};
use tabrisk::ingest::{encode, load_csv, stratified_split, DatasetSchema, LoadStats};
use tabrisk::learners::{HyperParams, LearnerId, ModelDocument};
use tabrisk::rng::derive_seed;
use tabrisk::select::select_features;

use crate::config::PipelineConfig;
use crate::PipelineError;

/// Version of the report file layout.
pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record and skip a failing model instead of aborting.
    pub keep_going: bool,
    /// Also write the encoded train/test matrices.
    pub emit_encoded: bool,
    /// Record wall-clock seconds per stage (makes the manifest run-specific).
    pub timings: bool,
    /// Write each refit model as a JSON document.
    pub save_models: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCounts {
    pub rows_read: usize,
    pub dropped_missing_label: usize,
    pub dropped_listwise: usize,
    pub rows_kept: usize,
    pub anemic: usize,
    pub not_anemic: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_hp: Option<HyperParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_cv_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refit_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_violations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub report_format: u32,
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<RowCounts>,
    #[serde(default)]
    pub selected_features: Vec<String>,
    #[serde(default)]
    pub models: Vec<ModelSummary>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<StageTiming>,
}

/// Output directory bookkeeping: every file written is remembered so a
/// failed run can remove exactly what it produced.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<fs::File>, PipelineError> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::io(&p, e))?;
        }
        let f = fs::File::create(&p).map_err(|e| PipelineError::io(&p, e))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        let mut w = self.create(name)?;
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| PipelineError::io(&self.path(name), e))
    }

    fn remove_all(&mut self) {
        for name in self.written.drain(..) {
            let _ = fs::remove_file(self.dir.join(&name));
        }
        let _ = fs::remove_dir(self.dir.join("models"));
    }
}

struct Stages {
    enabled: bool,
    current: String,
    started: Instant,
    done: Vec<StageTiming>,
}

impl Stages {
    fn enter(&mut self, stage: &str) {
        self.finish();
        self.current = stage.to_string();
        self.started = Instant::now();
    }

    fn finish(&mut self) {
        if self.enabled && !self.current.is_empty() {
            self.done.push(StageTiming {
                stage: std::mem::take(&mut self.current),
                seconds: self.started.elapsed().as_secs_f64(),
            });
        }
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        String::new()
    }
}

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t}")
    }
}

fn write_performance(
    out: &mut Outputs,
    reports: &[(LearnerId, MetricReport)],
) -> Result<(), PipelineError> {
    let name = "model_performance.csv";
    let mut w = out.create(name)?;
    let mut text = String::from("Metric");
    for (l, _) in reports {
        text.push(',');
        text.push_str(l.label());
    }
    text.push('\n');
    for row in 0..8 {
        let label = reports.first().map_or("", |(_, r)| r.rows()[row].0);
        text.push_str(&csv_field(label));
        for (_, r) in reports {
            text.push(',');
            text.push_str(&fmt_metric(r.rows()[row].1));
        }
        text.push('\n');
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PipelineError::io(&out.path(name), e))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_text(out: &mut Outputs, name: &str, text: &str) -> Result<(), PipelineError> {
    let mut w = out.create(name)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PipelineError::io(&out.path(name), e))
}

fn write_curves(
    out: &mut Outputs,
    id: &str,
    scores: &[f64],
    labels: &[u8],
) -> Result<(), PipelineError> {
    let stage = PipelineError::from_core("evaluate");
    let mut roc = String::from("threshold,fpr,tpr\n");
    for p in roc_curve(scores, labels).map_err(&stage)? {
        roc.push_str(&format!(
            "{},{},{}\n",
            fmt_threshold(p.threshold),
            p.fpr,
            p.tpr
        ));
    }
    write_text(out, &format!("roc_{id}.csv"), &roc)?;
    let mut pr = String::from("threshold,recall,precision\n");
    for p in pr_curve(scores, labels).map_err(&stage)? {
        pr.push_str(&format!(
            "{},{},{}\n",
            fmt_threshold(p.threshold),
            p.recall,
            p.precision
        ));
    }
    write_text(out, &format!("pr_{id}.csv"), &pr)
}

/// Run the whole workflow described by `cfg`, writing reports into its
/// output directory. On failure the files written so far are removed and a
/// manifest naming the failed stage is left behind.
pub fn run_pipeline(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    let mut manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        report_format: REPORT_FORMAT_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        status: "running".into(),
        failed_stage: None,
        error: None,
        rows: None,
        selected_features: Vec::new(),
        models: Vec::new(),
        outputs: Vec::new(),
        timings: Vec::new(),
    };
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let mut stages = Stages {
        enabled: opts.timings,
        current: String::new(),
        started: Instant::now(),
        done: Vec::new(),
    };
    let result = run_stages(cfg, opts, &mut out, &mut manifest, &mut stages);
    stages.finish();
    manifest.timings = stages.done;
    match result {
        Ok(()) => {
            manifest.status = "ok".into();
            manifest.outputs = out.written.clone();
            manifest.outputs.push("manifest.json".into());
            out.write_json("manifest.json", &manifest)?;
            Ok(manifest)
        }
        Err(e) => {
            out.remove_all();
            manifest.status = "failed".into();
            manifest.failed_stage = Some(e.stage().unwrap_or(stages_current(&e)).to_string());
            manifest.error = Some(e.to_string());
            manifest.outputs.clear();
            if fs::create_dir_all(&out.dir).is_ok() {
                let _ = out.write_json("manifest.json", &manifest);
            }
            Err(e)
        }
    }
}

fn stages_current(e: &PipelineError) -> &'static str {
    match e {
        PipelineError::Config(_) => "config",
        _ => "output",
    }
}

fn run_stages(
    cfg: &PipelineConfig,
    opts: &RunOptions,
    out: &mut Outputs,
    manifest: &mut RunManifest,
    stages: &mut Stages,
) -> Result<(), PipelineError> {
    stages.enter("config");
    cfg.validate()?;
    fs::create_dir_all(&out.dir).map_err(|e| PipelineError::io(&out.dir, e))?;

    stages.enter("ingest");
    let ingest = PipelineError::from_core("ingest");
    let schema = Arc::new(DatasetSchema::from_path(&cfg.schema_path).map_err(&ingest)?);
    let (ds, stats): (_, LoadStats) = load_csv(&cfg.data_path, schema).map_err(&ingest)?;
    let split =
        stratified_split(&ds, cfg.test_frac, derive_seed(cfg.seed, "split")).map_err(&ingest)?;
    let train = ds.subset(&split.train_indices);
    let test = ds.subset(&split.test_indices);
    let [neg, pos] = ds.class_counts();
    manifest.rows = Some(RowCounts {
        rows_read: stats.rows_read,
        dropped_missing_label: stats.dropped_missing_label,
        dropped_listwise: stats.dropped_listwise,
        rows_kept: stats.rows_kept,
        anemic: pos,
        not_anemic: neg,
        train: train.n_rows(),
        test: test.n_rows(),
    });

    stages.enter("select");
    let select = PipelineError::from_core("select");
    let train_enc_all = encode(&train).map_err(&select)?;
    let table = select_features(
        &train,
        &train_enc_all,
        &cfg.selection_config(derive_seed(cfg.seed, "select")),
    )
    .map_err(&select)?;
    let mut w = out.create("feature_scores.csv")?;
    table.write_csv(&mut w).map_err(&select)?;
    w.flush()
        .map_err(|e| PipelineError::io(&out.path("feature_scores.csv"), e))?;
    if table.final_set.is_empty() {
        return Err(PipelineError::Stage {
            stage: "select",
            source: tabrisk::Error::InvalidConfig("consensus selected no features".into()),
        });
    }
    manifest.selected_features = table.final_set.clone();
    let train_sel = train.project(&table.final_set).map_err(&select)?;
    let test_sel = test.project(&table.final_set).map_err(&select)?;
    let train_enc = encode(&train_sel).map_err(&select)?;
    let test_enc = encode(&test_sel).map_err(&select)?;
    if opts.emit_encoded {
        for (name, enc) in [
            ("encoded_train.csv", &train_enc),
            ("encoded_test.csv", &test_enc),
        ] {
            let mut w = out.create(name)?;
            enc.write_csv(&mut w).map_err(&select)?;
            w.flush()
                .map_err(|e| PipelineError::io(&out.path(name), e))?;
        }
    }

    stages.enter("train");
    let plan = make_cv_plan(
        train_sel.labels(),
        cfg.cv.n_folds,
        cfg.cv.n_repeats,
        derive_seed(cfg.seed, "cv"),
    )
    .map_err(PipelineError::from_core("train"))?;
    let search_opts = SearchOptions {
        smote: cfg.smote.enabled.then(|| cfg.smote_config(0)),
        seed: derive_seed(cfg.seed, "search"),
    };
    let mut reports = Vec::new();
    let mut cv_rows = String::from("model,candidate,hyperparameters,mean_f1,std_f1,error\n");
    for entry in &cfg.models {
        let learner = entry.learner()?;
        stages.enter(&format!("train:{}", learner.id()));
        let grid = entry.grid(train_enc.n_cols())?;
        let searched = grid_search(
            learner,
            &grid,
            &plan,
            &train_enc.values,
            train_sel.labels(),
            &search_opts,
        );
        let result = match searched {
            Ok(r) => r,
            Err(e) if opts.keep_going => {
                manifest.models.push(ModelSummary {
                    id: learner.id().into(),
                    status: "failed".into(),
                    best_hp: None,
                    best_cv_f1: None,
                    candidates: Some(grid.size()),
                    refit_rows: None,
                    leakage_violations: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
            Err(e) => {
                return Err(PipelineError::Stage {
                    stage: "train",
                    source: e,
                })
            }
        };
        for (i, c) in result.candidates.iter().enumerate() {
            cv_rows.push_str(&format!(
                "{},{},{},{},{},{}\n",
                learner.id(),
                i,
                csv_field(&c.hp.to_string()),
                fmt_f64(c.mean_f1),
                fmt_f64(c.std_f1),
                csv_field(c.error.as_deref().unwrap_or(""))
            ));
        }
        let leaks: usize = result
            .audit
            .iter()
            .map(|a| a.validation_synthetic + a.validation_parents + a.overlap)
            .sum();
        let eval_err = PipelineError::from_core("evaluate");
        let report = evaluate(
            result.model.as_ref(),
            &test_enc.values,
            test_sel.labels(),
            Some((&train_enc.values, train_sel.labels())),
        )
        .map_err(&eval_err)?;
        let scores = result.model.predict_proba(&test_enc.values);
        write_curves(out, learner.id(), &scores, test_sel.labels())?;
        if opts.save_models {
            out.write_json(
                &format!("models/{}.json", learner.id()),
                &ModelDocument::new(result.model.as_ref(), &result.best_hp),
            )?;
        }
        manifest.models.push(ModelSummary {
            id: learner.id().into(),
            status: "ok".into(),
            best_hp: Some(result.best_hp.clone()),
            best_cv_f1: Some(result.candidates[result.best_index].mean_f1),
            candidates: Some(result.candidates.len()),
            refit_rows: Some(result.refit_rows),
            leakage_violations: Some(leaks),
            error: None,
        });
        reports.push((learner, report));
    }
    if reports.is_empty() {
        return Err(PipelineError::Stage {
            stage: "train",
            source: tabrisk::Error::SearchFailure("every model failed".into()),
        });
    }
    write_text(out, "cv_results.csv", &cv_rows)?;

    stages.enter("report");
    write_performance(out, &reports)?;
    let metrics: Vec<serde_json::Value> = reports
        .iter()
        .map(|(l, r)| serde_json::json!({ "model": l.id(), "label": l.label(), "report": r }))
        .collect();
    out.write_json("metrics.json", &metrics)?;

    if cfg.epi.enabled {
        stages.enter("epi");
        let epi = PipelineError::from_core("epi");
        let factors = factor_table(
            &ds,
            &FactorOptions {
                references: cfg.epi.references.clone(),
                haldane: cfg.epi.haldane,
                crude_only: false,
            },
        )
        .map_err(&epi)?;
        let mut w = out.create("factors.csv")?;
        write_factors_csv(&factors, &mut w).map_err(&epi)?;
        w.flush()
            .map_err(|e| PipelineError::io(&out.path("factors.csv"), e))?;
    }
    stages.finish();
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Convenience for callers that only need to know whether `dir` holds a
/// complete run.
pub fn read_manifest(dir: &Path) -> Result<RunManifest, PipelineError> {
    let p = dir.join("manifest.json");
    let text = fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))
}
