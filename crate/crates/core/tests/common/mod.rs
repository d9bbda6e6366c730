#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng as _;
use tabrisk::ingest::{Dataset, DatasetSchema, FeatureKind, FeatureSpec, ImputeRule};
use tabrisk::rng::rng_from_seed;
use tabrisk::synth::{FeatureGenerator, GeneratorSpec};
use tabrisk::Matrix;

pub struct CountRow {
    pub feature: String,
    pub category: String,
    pub anemic: usize,
    pub not_anemic: usize,
}

/// Published per-category counts; reference category first in each block.
pub fn published_counts() -> Vec<CountRow> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/factor_counts.csv"
    );
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            CountRow {
                feature: r[0].to_string(),
                category: r[1].to_string(),
                anemic: r[2].parse().unwrap(),
                not_anemic: r[3].parse().unwrap(),
            }
        })
        .collect()
}

/// Individual records for one factor's block of counts.
pub fn factor_dataset(rows: &[&CountRow]) -> Dataset {
    let spec = FeatureSpec {
        name: rows[0].feature.clone(),
        kind: if rows.len() == 2 {
            FeatureKind::Binary
        } else {
            FeatureKind::OneHot
        },
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

pub fn binary(name: &str, p: f64, effect: f64) -> FeatureGenerator {
    FeatureGenerator {
        name: name.into(),
        kind: FeatureKind::Binary,
        levels: vec!["no".into(), "yes".into()],
        reference_level: "no".into(),
        probabilities: vec![1.0 - p, p],
        effects: Some(vec![0.0, effect]),
        slope: None,
    }
}

/// One strong binary signal, one weak one, and three pure-noise features.
pub fn screening_spec(n: usize) -> GeneratorSpec {
    GeneratorSpec {
        n,
        intercept: -0.8,
        label_name: "anemia".into(),
        features: vec![
            binary("noise_a", 0.5, 0.0),
            binary("strong", 0.4, 2.0),
            binary("noise_b", 0.3, 0.0),
            binary("weak", 0.5, 0.4),
            FeatureGenerator {
                name: "noise_region".into(),
                kind: FeatureKind::OneHot,
                levels: vec!["r0".into(), "r1".into(), "r2".into()],
                reference_level: "r0".into(),
                probabilities: vec![0.4, 0.3, 0.3],
                effects: Some(vec![0.0, 0.0, 0.0]),
                slope: None,
            },
        ],
        forced_includes: Vec::new(),
    }
}

/// Continuous logistic data: `y ~ Bernoulli(σ(x·beta + b0))`, x ~ N-ish(0, 1).
pub fn logistic_data(n: usize, beta: &[f64], b0: f64, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        // sum of uniforms: cheap, bounded, roughly normal
        let row: Vec<f64> = beta
            .iter()
            .map(|_| (0..4).map(|_| rng.random::<f64>()).sum::<f64>() - 2.0)
            .collect();
        let eta = b0 + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        y.push(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        rows.push(row);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

pub fn accuracy(pred: &[u8], y: &[u8]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}
