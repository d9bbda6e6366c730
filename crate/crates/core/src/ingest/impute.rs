use std::collections::HashMap;

use super::schema::{FeatureSpec, ImputeRule};
use crate::error::{Error, Result};

fn format_cap(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

/// Replace numeric values above `cap` by the cap itself.
fn apply_cap(value: &str, cap: Option<f64>) -> String {
    match (cap, value.trim().parse::<f64>()) {
        (Some(c), Ok(v)) if v > c => format_cap(c),
        _ => value.to_string(),
    }
}

/// Lower-middle element of the observed values. Values are ordered numerically
/// when every one of them parses as a number, otherwise by level rank.
fn lower_median(observed: &[String], spec: &FeatureSpec) -> String {
    let mut vals: Vec<&String> = observed.iter().collect();
    let numeric: Option<Vec<f64>> = vals.iter().map(|v| v.trim().parse::<f64>().ok()).collect();
    match numeric {
        Some(nums) => {
            let mut paired: Vec<(f64, &String)> = nums.into_iter().zip(vals).collect();
            paired.sort_by(|a, b| a.0.total_cmp(&b.0));
            paired[(paired.len() - 1) / 2].1.clone()
        }
        None => {
            vals.sort_by_key(|v| spec.level_index(v).unwrap_or(usize::MAX));
            vals[(vals.len() - 1) / 2].clone()
        }
    }
}

/// Most frequent value; ties go to the earliest level in schema order, then
/// to the value seen first.
fn mode(observed: &[String], spec: &FeatureSpec) -> String {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, v) in observed.iter().enumerate() {
        counts.entry(v.as_str()).or_insert((0, i)).0 += 1;
    }
    let mut best: Vec<(&str, (usize, usize))> = counts.into_iter().collect();
    best.sort_by(|a, b| {
        b.1 .0
            .cmp(&a.1 .0)
            .then_with(|| {
                let ra = spec.level_index(a.0).unwrap_or(usize::MAX);
                let rb = spec.level_index(b.0).unwrap_or(usize::MAX);
                ra.cmp(&rb)
            })
            .then(a.1 .1.cmp(&b.1 .1))
    });
    best[0].0.to_string()
}

/// Cap then fill missing cells of one column according to `spec.impute`.
pub fn impute_column(column: &[Option<String>], spec: &FeatureSpec) -> Result<Vec<String>> {
    let capped: Vec<Option<String>> = column
        .iter()
        .map(|c| c.as_deref().map(|v| apply_cap(v, spec.cap)))
        .collect();
    let observed: Vec<String> = capped.iter().flatten().cloned().collect();
    if observed.len() == capped.len() {
        return Ok(observed);
    }
    let fill = match spec.impute {
        ImputeRule::None => {
            return Err(Error::InvalidConfig(format!(
                "feature `{}` has missing values but no imputation rule",
                spec.name
            )))
        }
        _ if observed.is_empty() => return Err(Error::Unimputable(spec.name.clone())),
        ImputeRule::Median => lower_median(&observed, spec),
        ImputeRule::Mode => mode(&observed, spec),
    };
    Ok(capped
        .into_iter()
        .map(|c| c.unwrap_or_else(|| fill.clone()))
        .collect())
}
