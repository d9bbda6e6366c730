//! Feature screening by four methods and their consensus.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, EncodedMatrix};

pub mod boruta;
pub mod filter;

pub use boruta::{boruta, BorutaConfig, BorutaResult, Verdict};
pub use filter::{
    chi_square_feature, chi_square_table, contingency, mutual_information_feature,
    mutual_information_table, point_biserial, ChiSquare,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ChiSquare,
    MutualInfo,
    PointBiserial,
    Boruta,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ChiSquare,
        Method::MutualInfo,
        Method::PointBiserial,
        Method::Boruta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ChiSquare => "chi_square",
            Method::MutualInfo => "mutual_info",
            Method::PointBiserial => "point_biserial",
            Method::Boruta => "boruta",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub feature: String,
    pub method: Method,
    pub raw_score: f64,
    pub normalized: f64,
    pub selected: bool,
    /// Set when the method could not score the feature (score forced to 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Raw per-feature scores from every method, before consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub features: Vec<String>,
    pub chi_square: Vec<f64>,
    pub mutual_info: Vec<f64>,
    pub point_biserial: Vec<f64>,
    pub boruta: Vec<Verdict>,
    /// Best hit rate among a feature's encoded columns.
    pub boruta_hit_rate: Vec<f64>,
    pub flags: Vec<(String, Method, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub top_k: usize,
    pub min_methods: usize,
    pub boruta: BorutaConfig,
    /// Added to the schema's forced includes.
    #[serde(default)]
    pub forced_includes: Vec<String>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            top_k: 15,
            min_methods: 3,
            boruta: BorutaConfig::default(),
            forced_includes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreTable {
    pub features: Vec<String>,
    /// Ordered by feature, then method.
    pub scores: Vec<MethodScore>,
    pub consensus_count: Vec<usize>,
    pub final_set: Vec<String>,
}

impl FeatureScoreTable {
    pub fn count_for(&self, feature: &str) -> Option<usize> {
        self.features
            .iter()
            .position(|f| f == feature)
            .map(|i| self.consensus_count[i])
    }

    pub fn score(&self, feature: &str, method: Method) -> Option<&MethodScore> {
        self.scores
            .iter()
            .find(|s| s.feature == feature && s.method == method)
    }

    /// Columns: feature, method, raw_score, normalized, selected, consensus_count.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "feature",
            "method",
            "raw_score",
            "normalized",
            "selected",
            "consensus_count",
        ])?;
        for s in &self.scores {
            let count = self.count_for(&s.feature).unwrap_or(0);
            w.write_record([
                s.feature.clone(),
                s.method.to_string(),
                format!("{:.6}", s.raw_score),
                format!("{:.6}", s.normalized),
                s.selected.to_string(),
                count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Score every schema feature of `ds` with the three filter methods and
/// Boruta. `enc` must be the encoding of `ds`.
pub fn score_features(
    ds: &Dataset,
    enc: &EncodedMatrix,
    boruta_cfg: &BorutaConfig,
) -> Result<MethodScores> {
    if enc.n_rows() != ds.n_rows() {
        return Err(Error::LengthMismatch {
            expected: ds.n_rows(),
            got: enc.n_rows(),
        });
    }
    let y = ds.labels();
    let features = ds.schema().feature_names();
    let by_feature = enc.columns_by_feature();
    let mut flags = Vec::new();
    let mut chi = Vec::with_capacity(features.len());
    let mut mi = Vec::with_capacity(features.len());
    let mut pb = Vec::with_capacity(features.len());
    for (f, name) in features.iter().enumerate() {
        chi.push(match chi_square_feature(ds, f) {
            Ok(c) => c.statistic,
            Err(e) => {
                flags.push((name.clone(), Method::ChiSquare, e.to_string()));
                0.0
            }
        });
        mi.push(mutual_information_feature(ds, f));
        let mut best: f64 = 0.0;
        let mut undefined = None;
        for &c in by_feature.get(name).map(Vec::as_slice).unwrap_or(&[]) {
            match point_biserial(&enc.values.column(c), y) {
                Ok(r) => best = best.max(r.abs()),
                Err(e) => undefined = Some(e.to_string()),
            }
        }
        if best == 0.0 {
            if let Some(e) = undefined {
                flags.push((name.clone(), Method::PointBiserial, e));
            }
        }
        pb.push(best);
    }
    let b = boruta(&enc.values, y, boruta_cfg)?;
    let mut verdicts = vec![Verdict::Rejected; features.len()];
    let mut hit_rate = vec![0.0; features.len()];
    for (f, name) in features.iter().enumerate() {
        for &c in by_feature.get(name).map(Vec::as_slice).unwrap_or(&[]) {
            verdicts[f] = verdicts[f].max(b.verdicts[c]);
            hit_rate[f] = f64::max(hit_rate[f], b.hit_rate(c));
        }
    }
    Ok(MethodScores {
        features,
        chi_square: chi,
        mutual_info: mi,
        point_biserial: pb,
        boruta: verdicts,
        boruta_hit_rate: hit_rate,
        flags,
    })
}

/// Indices of the `top_k` highest positive scores; ties keep input order.
pub fn top_k(scores: &[f64], k: usize) -> BTreeSet<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > 0.0).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).collect()
}

fn max_scaled(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(0.0, f64::max);
    scores
        .iter()
        .map(|&s| if max > 0.0 { s / max } else { 0.0 })
        .collect()
}

/// Combine method scores: filters select their top `top_k`, Boruta selects
/// its confirmed set, and a feature survives with at least `min_methods`
/// votes or when listed in `forced`.
pub fn consensus(
    scores: &MethodScores,
    top_k_n: usize,
    min_methods: usize,
    forced: &[String],
) -> Result<FeatureScoreTable> {
    if let Some(f) = forced.iter().find(|f| !scores.features.contains(f)) {
        return Err(Error::InvalidConfig(format!(
            "forced include `{f}` is not a scored feature"
        )));
    }
    let d = scores.features.len();
    let filters = [
        (Method::ChiSquare, &scores.chi_square),
        (Method::MutualInfo, &scores.mutual_info),
        (Method::PointBiserial, &scores.point_biserial),
    ];
    let mut selected = vec![[false; 4]; d];
    let mut normalized = vec![[0.0; 4]; d];
    let mut raw = vec![[0.0; 4]; d];
    for (m, (_, vals)) in filters.iter().enumerate() {
        let top = top_k(vals, top_k_n);
        let norm = max_scaled(vals);
        for f in 0..d {
            selected[f][m] = top.contains(&f);
            normalized[f][m] = norm[f];
            raw[f][m] = vals[f];
        }
    }
    for f in 0..d {
        let confirmed = scores.boruta[f] == Verdict::Confirmed;
        selected[f][3] = confirmed;
        normalized[f][3] = if confirmed { 1.0 } else { 0.0 };
        raw[f][3] = scores.boruta_hit_rate[f];
    }
    let flag_for = |name: &str, m: Method| {
        scores
            .flags
            .iter()
            .find(|(f, fm, _)| f == name && *fm == m)
            .map(|(_, _, e)| e.clone())
    };
    let mut table_scores = Vec::with_capacity(d * 4);
    let mut consensus_count = Vec::with_capacity(d);
    let mut final_set = Vec::new();
    for (f, name) in scores.features.iter().enumerate() {
        for (m, method) in Method::ALL.into_iter().enumerate() {
            table_scores.push(MethodScore {
                feature: name.clone(),
                method,
                raw_score: raw[f][m],
                normalized: normalized[f][m],
                selected: selected[f][m],
                flag: flag_for(name, method),
            });
        }
        let count = selected[f].iter().filter(|&&s| s).count();
        consensus_count.push(count);
        if count >= min_methods || forced.contains(name) {
            final_set.push(name.clone());
        }
    }
    Ok(FeatureScoreTable {
        features: scores.features.clone(),
        scores: table_scores,
        consensus_count,
        final_set,
    })
}

/// Score and combine in one step, honouring the schema's forced includes.
pub fn select_features(
    ds: &Dataset,
    enc: &EncodedMatrix,
    cfg: &SelectionConfig,
) -> Result<FeatureScoreTable> {
    let scores = score_features(ds, enc, &cfg.boruta)?;
    let mut forced = ds.schema().forced_includes.clone();
    for f in &cfg.forced_includes {
        if !forced.contains(f) {
            forced.push(f.clone());
        }
    }
    consensus(&scores, cfg.top_k, cfg.min_methods, &forced)
}
