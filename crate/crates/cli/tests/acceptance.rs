//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `TABRISK_ACCEPTANCE_ONLY=3,7` to run a subset while iterating.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng as _;
use tabrisk::balance::SmoteConfig;
use tabrisk::epi::{adjusted_or, contingency, crude_or};
use tabrisk::eval::{
    average_precision, basic_metrics, cohens_kappa, grid_search, make_cv_plan, roc_auc,
    ConfusionMatrix, SearchOptions,
};
use tabrisk::ingest::{
    encode, stratified_split, Dataset, DatasetSchema, FeatureKind, FeatureSpec, ImputeRule,
};
use tabrisk::learners::{irls, GbtModel, GbtParams, LearnerId, MlpModel};
use tabrisk::rng::{derive_seed_idx, rng_from_seed};
use tabrisk::select::{boruta, BorutaConfig, Verdict};
use tabrisk::synth::{FeatureGenerator, GeneratorSpec};
use tabrisk::Matrix;

// Tolerances and budgets.
const OR_TOL: f64 = 0.01;
const PREVALENCE_TOL_PP: f64 = 0.01;
const BAYES_AUC_GAP: f64 = 0.02;
const COEF_REL_TOL: f64 = 0.05;
const EXACT_TOL: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-6;
const COVERAGE_RANGE: (f64, f64) = (0.90, 0.98);
const NOISE_REJECT_MIN: f64 = 0.90;

const ONE_SECOND: Duration = Duration::from_secs(1);
const TWO_MINUTES: Duration = Duration::from_secs(120);
const TEN_SECONDS: Duration = Duration::from_secs(10);
const TEN_MINUTES: Duration = Duration::from_secs(600);

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (u8, &'static str, Option<Duration>, fn() -> Check);

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn demo_spec() -> GeneratorSpec {
    GeneratorSpec::from_path(manifest_dir().join("data/demo_spec.json")).expect("demo spec")
}

struct CountRow {
    feature: String,
    category: String,
    anemic: usize,
    not_anemic: usize,
    prevalence_pct: f64,
    crude_or: f64,
}

/// Published per-category counts, one block per factor with the reference
/// category first.
fn published_counts() -> Vec<CountRow> {
    let path = manifest_dir().join("../core/tests/fixtures/factor_counts.csv");
    let mut rdr = csv::Reader::from_path(path).expect("fixture");
    rdr.records()
        .map(|r| {
            let r = r.expect("record");
            CountRow {
                feature: r[0].to_string(),
                category: r[1].to_string(),
                anemic: r[2].parse().unwrap(),
                not_anemic: r[3].parse().unwrap(),
                prevalence_pct: r[4].parse().unwrap(),
                crude_or: r[5].parse().unwrap(),
            }
        })
        .collect()
}

/// Expand one factor's counts into individual records.
fn factor_dataset(rows: &[&CountRow]) -> Dataset {
    let spec = FeatureSpec {
        name: rows[0].feature.clone(),
        kind: FeatureKind::OneHot,
        levels: rows.iter().map(|r| r.category.clone()).collect(),
        reference_level: rows[0].category.clone(),
        impute: ImputeRule::None,
        cap: None,
    };
    let schema = Arc::new(DatasetSchema::new(vec![spec], "anemia").unwrap());
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    for (li, r) in rows.iter().enumerate() {
        for (count, y) in [(r.anemic, 1u8), (r.not_anemic, 0u8)] {
            cells.extend(std::iter::repeat_n(li as u32, count));
            labels.extend(std::iter::repeat_n(y, count));
        }
    }
    Dataset::from_indices(schema, cells, labels).unwrap()
}

fn by_factor(rows: &[CountRow]) -> BTreeMap<&str, Vec<&CountRow>> {
    let mut m: BTreeMap<&str, Vec<&CountRow>> = BTreeMap::new();
    for r in rows {
        m.entry(r.feature.as_str()).or_default().push(r);
    }
    m
}

fn c01_crude_or() -> Check {
    let rows = published_counts();
    let headline = [
        ("mother_anemia", "Anemic", 1.81),
        ("fever", "Yes", 1.42),
        ("parasite_deworm", "Yes", 0.34),
        ("child_age", "13-24", 0.52),
        ("amenorrhea", "Yes", 1.82),
        ("mother_deworm", "No", 2.04),
        ("ethnicity", "Other", 2.08),
    ];
    let mut worst = (0.0_f64, String::new());
    let mut computed = BTreeMap::new();
    for (feature, group) in by_factor(&rows) {
        let ds = factor_dataset(&group);
        let table = contingency(&ds, feature).unwrap();
        let ors = crude_or(&table, &group[0].category, false).unwrap();
        for (r, or) in group.iter().zip(ors) {
            let or = or.unwrap_or(f64::NAN);
            let err = (or - r.crude_or).abs();
            if err.is_nan() || err > worst.0 {
                worst = (err, format!("{}={}", r.feature, r.category));
            }
            computed.insert((r.feature.clone(), r.category.clone()), or);
        }
    }
    let headline_ok = headline.iter().all(|(f, c, want)| {
        computed
            .get(&(f.to_string(), c.to_string()))
            .is_some_and(|got| (got - want).abs() <= OR_TOL)
    });
    Check::new(
        headline_ok && worst.0 <= OR_TOL,
        format!(
            "{} rows, 7 headline ORs ok={headline_ok}, max |err| {:.4} at {}",
            computed.len(),
            worst.0,
            worst.1
        ),
    )
}

fn c02_prevalence() -> Check {
    let rows = published_counts();
    let mut worst = (0.0_f64, String::new());
    let mut n = 0;
    for (feature, group) in by_factor(&rows) {
        let ds = factor_dataset(&group);
        for (r, c) in group.iter().zip(contingency(&ds, feature).unwrap()) {
            let err = (c.prevalence().unwrap_or(f64::NAN) - r.prevalence_pct).abs();
            if err.is_nan() || err > worst.0 {
                worst = (err, format!("{}={}", r.feature, r.category));
            }
            n += 1;
        }
    }
    Check::new(
        worst.0 <= PREVALENCE_TOL_PP,
        format!("{n} rows, max |err| {:.4} pp at {}", worst.0, worst.1),
    )
}

fn c03_synthetic_lr() -> Check {
    let spec = demo_spec();
    let data = spec.generate(11).unwrap();
    let ds = &data.dataset;
    let split = stratified_split(ds, 0.2, 12).unwrap();
    let train = ds.subset(&split.train_indices);
    let test = ds.subset(&split.test_indices);
    let tx = encode(&train).unwrap().values;
    let vx = encode(&test).unwrap().values;
    let plan = make_cv_plan(train.labels(), 5, 3, 13).unwrap();
    let opts = SearchOptions {
        smote: Some(SmoteConfig {
            seed: 14,
            ..SmoteConfig::default()
        }),
        seed: 15,
    };
    let lr = LearnerId::Lr;
    let fit = grid_search(
        lr,
        &lr.default_grid(tx.ncols()),
        &plan,
        &tx,
        train.labels(),
        &opts,
    )
    .unwrap();
    let model_auc = roc_auc(&fit.model.predict_proba(&vx), test.labels()).unwrap();
    let bayes: Vec<f64> = split
        .test_indices
        .iter()
        .map(|&i| data.true_probability[i])
        .collect();
    let bayes_auc = roc_auc(&bayes, test.labels()).unwrap();
    let gap = (model_auc - bayes_auc).abs();

    let big = GeneratorSpec { n: 20_000, ..spec };
    let data = big.generate(16).unwrap();
    let x = encode(&data.dataset).unwrap().values;
    let est = irls(&x, data.dataset.labels(), 0.0).unwrap();
    let truth = &data.truth.coefficients;
    let num: f64 = est
        .coef
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    let rel = (num / den).sqrt();
    Check::new(
        gap <= BAYES_AUC_GAP && rel <= COEF_REL_TOL,
        format!(
            "test AUC {model_auc:.4} vs Bayes {bayes_auc:.4} (gap {gap:.4}); coefficient rel. error {rel:.4} at n=20000"
        ),
    )
}

fn brute_auc(s: &[f64], y: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in s.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

/// Mean precision at each positive, ranking by descending score with ties
/// broken by row index.
fn brute_ap(s: &[f64], y: &[u8]) -> f64 {
    let ahead = |j: usize, i: usize| s[j] > s[i] || (s[j] == s[i] && j <= i);
    let pos: Vec<usize> = (0..s.len()).filter(|&i| y[i] == 1).collect();
    let total: f64 = pos
        .iter()
        .map(|&i| {
            let rank = (0..s.len()).filter(|&j| ahead(j, i)).count();
            let hits = pos.iter().filter(|&&j| ahead(j, i)).count();
            hits as f64 / rank as f64
        })
        .sum();
    total / pos.len() as f64
}

fn c04_metric_oracles() -> Check {
    let mut worst_auc = 0.0_f64;
    let mut worst_ap = 0.0_f64;
    for inst in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed_idx(4, inst));
        let n = rng.random_range(2..=200);
        // every third instance uses a coarse score grid to force ties
        let coarse = inst % 3 == 0;
        let s: Vec<f64> = (0..n)
            .map(|_| {
                if coarse {
                    f64::from(rng.random_range(0..6u8)) / 5.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
        y[0] = 1;
        y[1] = 0;
        worst_auc = worst_auc.max((roc_auc(&s, &y).unwrap() - brute_auc(&s, &y)).abs());
        worst_ap = worst_ap.max((average_precision(&s, &y).unwrap() - brute_ap(&s, &y)).abs());
    }
    Check::new(
        worst_auc <= EXACT_TOL && worst_ap <= EXACT_TOL,
        format!("100 instances, max |AUC diff| {worst_auc:.2e}, max |AP diff| {worst_ap:.2e}"),
    )
}

fn c05_hand_fixtures() -> Check {
    let m = basic_metrics(&ConfusionMatrix::new(3, 4, 1, 2));
    let kappa = cohens_kappa(&ConfusionMatrix::new(3, 4, 1, 2)).unwrap();
    let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
    let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
    let pairs = [
        ("accuracy", m.accuracy, 0.7),
        ("precision", m.precision, 0.75),
        ("recall", m.recall, 0.6),
        ("f1", m.f1, 2.0 / 3.0),
        ("kappa", kappa, 0.4),
        ("ap", ap, 5.0 / 6.0),
        ("auc", auc, 0.75),
    ];
    let bad: Vec<String> = pairs
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > EXACT_TOL)
        .map(|(name, got, want)| format!("{name} {got} != {want}"))
        .collect();
    Check::new(
        bad.is_empty(),
        if bad.is_empty() {
            "7 fixture values exact".to_string()
        } else {
            bad.join("; ")
        },
    )
}

fn demo_train() -> (Matrix, Vec<u8>) {
    let data = demo_spec().generate(21).unwrap();
    let split = stratified_split(&data.dataset, 0.2, 22).unwrap();
    let train = data.dataset.subset(&split.train_indices);
    (encode(&train).unwrap().values, train.labels().to_vec())
}

fn c06_leakage() -> Check {
    let (x, y) = demo_train();
    let plan = make_cv_plan(&y, 5, 3, 23).unwrap();
    let opts = SearchOptions {
        smote: Some(SmoteConfig {
            seed: 24,
            ..SmoteConfig::default()
        }),
        seed: 25,
    };
    let mut folds = 0;
    let mut candidates = 0;
    let mut leaks = 0;
    let mut synthetic = 0;
    for learner in [LearnerId::Lr, LearnerId::Knn, LearnerId::Dt] {
        let r = grid_search(
            learner,
            &learner.default_grid(x.ncols()),
            &plan,
            &x,
            &y,
            &opts,
        )
        .unwrap();
        folds += r.audit.len();
        candidates += r.candidates.len();
        leaks += r
            .audit
            .iter()
            .map(|a| a.validation_synthetic + a.validation_parents + a.overlap)
            .sum::<usize>();
        synthetic += r.audit.iter().map(|a| a.train_synthetic).sum::<usize>();
        let complete = r.audit.len() == 15 && r.candidates.iter().all(|c| c.fold_f1.len() == 15);
        if !complete {
            return Check::new(false, format!("{learner}: audit or fold scores incomplete"));
        }
    }
    Check::new(
        leaks == 0 && synthetic > 0,
        format!("{folds} folds audited over {candidates} candidates, {synthetic} synthetic train rows, {leaks} leaks"),
    )
}

fn c07_cv_structure() -> Check {
    let (_, y) = demo_train();
    let plan = make_cv_plan(&y, 5, 3, 31).unwrap();
    let mut times = vec![0usize; y.len()];
    let rate = y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64;
    let mut worst = 0.0_f64;
    for f in plan.folds() {
        for &i in &f.validation {
            times[i] += 1;
        }
        let pos = f.validation.iter().filter(|&&i| y[i] == 1).count() as f64;
        worst = worst.max((pos - rate * f.validation.len() as f64).abs());
    }
    let exact = times.iter().all(|&t| t == 3);
    Check::new(
        exact && worst <= 1.0,
        format!(
            "{} rows, all validated 3 times: {exact}; max class deviation {worst:.3} samples",
            y.len()
        ),
    )
}

fn c08_boruta() -> Check {
    let (n, d_inf, d_noise) = (1000, 5, 15);
    let mut confirmed_all = true;
    let mut rejected = 0;
    let mut min_rejected = d_noise;
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(derive_seed_idx(8, seed));
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d_inf + d_noise)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let eta: f64 = 2.0 * row[..d_inf].iter().sum::<f64>();
            y.push(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
            rows.push(row);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = BorutaConfig {
            seed,
            ..BorutaConfig::default()
        };
        let r = boruta(&x, &y, &cfg).unwrap();
        confirmed_all &= r.verdicts[..d_inf].iter().all(|&v| v == Verdict::Confirmed);
        let rej = r.verdicts[d_inf..]
            .iter()
            .filter(|&&v| v == Verdict::Rejected)
            .count();
        rejected += rej;
        min_rejected = min_rejected.min(rej);
    }
    let frac = rejected as f64 / (10 * d_noise) as f64;
    Check::new(
        confirmed_all && frac >= NOISE_REJECT_MIN,
        format!(
            "informative all confirmed: {confirmed_all}; noise rejected {rejected}/{} ({:.1}%), worst seed {min_rejected}/{d_noise}",
            10 * d_noise,
            100.0 * frac
        ),
    )
}

fn c09_mlp_gradient() -> Check {
    let mut model = MlpModel::init(2, &[3], 9);
    let shifted: Vec<f64> = model.params_flat().iter().map(|p| p + 0.05).collect();
    model.set_params_flat(&shifted);
    let mut rng = rng_from_seed(90);
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            vec![
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            ]
        })
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
    let idx: Vec<usize> = (0..10).collect();
    let (_, grad) = model.loss_and_grad(&x, &y, &idx);
    let base = model.params_flat();
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for k in 0..base.len() {
        let mut m = model.clone();
        let mut p = base.clone();
        p[k] += h;
        m.set_params_flat(&p);
        let up = m.loss_and_grad(&x, &y, &idx).0;
        p[k] -= 2.0 * h;
        m.set_params_flat(&p);
        let down = m.loss_and_grad(&x, &y, &idx).0;
        worst = worst.max(((up - down) / (2.0 * h) - grad[k]).abs());
    }
    Check::new(
        worst <= GRAD_TOL && base.len() == 13,
        format!(
            "{} parameters, max |analytic - numeric| {worst:.2e}",
            base.len()
        ),
    )
}

fn c10_gbt_monotone() -> Check {
    let (x, y) = demo_train();
    let params = GbtParams {
        n_rounds: 100,
        eta: 0.1,
        ..GbtParams::default()
    };
    let m = GbtModel::fit(&x, &y, params).unwrap();
    let increases = m.train_loss.windows(2).filter(|w| w[1] > w[0]).count();
    Check::new(
        increases == 0 && m.train_loss.len() == 101,
        format!(
            "loss {:.5} -> {:.5} over {} rounds, {increases} increases",
            m.train_loss[0],
            m.train_loss.last().unwrap(),
            m.train_loss.len() - 1
        ),
    )
}

fn coverage_spec() -> GeneratorSpec {
    let binary = |name: &str, p: f64, effect: f64| FeatureGenerator {
        name: name.into(),
        kind: FeatureKind::Binary,
        levels: vec!["no".into(), "yes".into()],
        reference_level: "no".into(),
        probabilities: vec![1.0 - p, p],
        effects: Some(vec![0.0, effect]),
        slope: None,
    };
    GeneratorSpec {
        n: 5000,
        intercept: -0.6,
        label_name: "anemia".into(),
        features: vec![
            binary("a", 0.35, 0.6),
            binary("b", 0.2, -0.8),
            FeatureGenerator {
                name: "region".into(),
                kind: FeatureKind::OneHot,
                levels: vec!["r0".into(), "r1".into(), "r2".into()],
                reference_level: "r0".into(),
                probabilities: vec![0.4, 0.35, 0.25],
                effects: Some(vec![0.0, 0.3, 0.9]),
                slope: None,
            },
            FeatureGenerator {
                name: "age".into(),
                kind: FeatureKind::Ordinal,
                levels: vec!["young".into(), "mid".into(), "old".into()],
                reference_level: "young".into(),
                probabilities: vec![0.3, 0.4, 0.3],
                effects: None,
                slope: Some(-0.4),
            },
        ],
        forced_includes: Vec::new(),
    }
}

fn true_log_or(spec: &GeneratorSpec, feature: &str, category: &str) -> f64 {
    let f = spec.features.iter().find(|f| f.name == feature).unwrap();
    let li = f.levels.iter().position(|l| l == category).unwrap();
    let ri = f
        .levels
        .iter()
        .position(|l| *l == f.reference_level)
        .unwrap();
    match (&f.effects, f.slope) {
        (Some(e), _) => e[li] - e[ri],
        (None, Some(s)) => s * (li as f64 - ri as f64),
        (None, None) => 0.0,
    }
}

fn c11_wald_coverage() -> Check {
    let spec = coverage_spec();
    let mut covered = 0;
    let mut total = 0;
    for rep in 0..200u64 {
        let data = spec.generate(derive_seed_idx(11, rep)).unwrap();
        for a in adjusted_or(&data.dataset, &BTreeMap::new()).unwrap() {
            let truth = true_log_or(&spec, &a.feature, &a.category).exp();
            covered += usize::from(a.ci_low <= truth && truth <= a.ci_high);
            total += 1;
        }
    }
    let rate = covered as f64 / total as f64;
    Check::new(
        (COVERAGE_RANGE.0..=COVERAGE_RANGE.1).contains(&rate) && total == 200 * 6,
        format!(
            "{covered}/{total} intervals cover the true OR ({:.1}%)",
            100.0 * rate
        ),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tabrisk"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TABRISK_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn list_files(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            list_files(&p, base, out);
        } else {
            out.push(p.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

fn c12_determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let spec = manifest_dir().join("data/demo_spec.json");
    if let Err(e) = run_cli(
        &[
            "synth",
            "--spec",
            spec.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            "demo",
        ],
        root,
    ) {
        return Check::new(false, format!("synth failed: {e}"));
    }
    std::fs::copy(
        manifest_dir().join("data/demo_config.json"),
        root.join("config.json"),
    )
    .unwrap();
    let mut times = Vec::new();
    for run in ["first", "second"] {
        let t = Instant::now();
        if let Err(e) = run_cli(&["run", "--config", "config.json"], root) {
            return Check::new(false, format!("{run} run failed: {e}"));
        }
        times.push(t.elapsed());
        std::fs::rename(root.join("demo/out"), root.join(format!("out_{run}"))).unwrap();
    }
    let (a, b) = (root.join("out_first"), root.join("out_second"));
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    list_files(&a, &a, &mut fa);
    list_files(&b, &b, &mut fb);
    fa.sort();
    fb.sort();
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let n_models = manifest["models"].as_array().map_or(0, Vec::len);
    let mut required: Vec<String> = [
        "model_performance.csv",
        "factors.csv",
        "feature_scores.csv",
        "manifest.json",
    ]
    .map(String::from)
    .into();
    for id in LearnerId::ALL {
        required.push(format!("roc_{}.csv", id.id()));
        required.push(format!("pr_{}.csv", id.id()));
    }
    let missing = required.iter().filter(|f| !a.join(f).is_file()).count();
    let slowest = times.iter().max().copied().unwrap_or_default();
    Check::new(
        fa == fb && differing.is_empty() && missing == 0 && n_models == 9 && slowest < TEN_MINUTES,
        format!(
            "{} files ({missing} required missing), {} differ, {n_models} models, runs {:.0}s / {:.0}s",
            fa.len(),
            differing.len(),
            times[0].as_secs_f64(),
            times[1].as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (
            1,
            "crude odds ratios match published table",
            Some(ONE_SECOND),
            c01_crude_or,
        ),
        (
            2,
            "prevalence matches published table",
            Some(ONE_SECOND),
            c02_prevalence,
        ),
        (
            3,
            "LR near Bayes AUC; coefficients recovered",
            Some(TWO_MINUTES),
            c03_synthetic_lr,
        ),
        (
            4,
            "AUC/AP equal brute-force oracles",
            Some(TEN_SECONDS),
            c04_metric_oracles,
        ),
        (5, "hand-computed metric fixtures", None, c05_hand_fixtures),
        (
            6,
            "no synthetic rows in validation folds",
            None,
            c06_leakage,
        ),
        (
            7,
            "repeated stratified CV structure",
            None,
            c07_cv_structure,
        ),
        (
            8,
            "Boruta separates signal from noise",
            Some(TWO_MINUTES),
            c08_boruta,
        ),
        (
            9,
            "MLP gradient matches finite differences",
            None,
            c09_mlp_gradient,
        ),
        (
            10,
            "GBT training loss non-increasing",
            None,
            c10_gbt_monotone,
        ),
        (
            11,
            "Wald CI coverage of true odds ratios",
            None,
            c11_wald_coverage,
        ),
        (
            12,
            "CLI runs are byte-identical and timely",
            None,
            c12_determinism,
        ),
    ];
    let only: Option<Vec<u8>> = std::env::var("TABRISK_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let mut check = f();
        let elapsed = t.elapsed();
        if let Some(b) = budget {
            if elapsed > b {
                check.pass = false;
                check
                    .detail
                    .push_str(&format!("; over budget of {}s", b.as_secs()));
            }
        }
        let tag = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {id:>2} {name}: {} ({:.2}s)",
            check.detail,
            elapsed.as_secs_f64()
        );
        failed += usize::from(!check.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
