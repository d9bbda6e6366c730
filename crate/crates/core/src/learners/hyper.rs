use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperparameter value as it appears in grids and config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Null,
    Num(f64),
    Text(String),
    List(Vec<f64>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Null => write!(f, "none"),
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Text(s) => write!(f, "{s}"),
            ParamValue::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(";"))
            }
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Num(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParams(pub BTreeMap<String, ParamValue>);

impl HyperParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<ParamValue>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<ParamValue>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.get(key)
    }

    pub fn check_keys(&self, learner: &str, allowed: &[&str]) -> Result<()> {
        for k in self.0.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::UnknownHyperParam {
                    learner: learner.to_string(),
                    key: k.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Num(v)) if v.is_finite() => Ok(*v),
            Some(other) => Err(Error::InvalidHyperParam {
                key: key.into(),
                detail: format!("expected a number, got {other}"),
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Num(v)) if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
            Some(other) => Err(Error::InvalidHyperParam {
                key: key.into(),
                detail: format!("expected a non-negative integer, got {other}"),
            }),
        }
    }

    /// Integer that may be `null` / absent (meaning "unbounded").
    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None | Some(ParamValue::Null) => Ok(None),
            Some(ParamValue::Text(s)) if s == "none" => Ok(None),
            _ => self.usize_or(key, 0).map(Some),
        }
    }

    pub fn text_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(other) => Err(Error::InvalidHyperParam {
                key: key.into(),
                detail: format!("expected text, got {other}"),
            }),
        }
    }

    pub fn sizes_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(ParamValue::List(v)) if v.iter().all(|x| *x >= 1.0 && x.fract() == 0.0) => {
                Ok(v.iter().map(|x| *x as usize).collect())
            }
            Some(ParamValue::Num(x)) if *x >= 1.0 && x.fract() == 0.0 => Ok(vec![*x as usize]),
            Some(other) => Err(Error::InvalidHyperParam {
                key: key.into(),
                detail: format!("expected a list of layer sizes, got {other}"),
            }),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Num(v)) => Ok(*v != 0.0),
            Some(ParamValue::Text(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(other) => Err(Error::InvalidHyperParam {
                key: key.into(),
                detail: format!("expected a boolean, got {other}"),
            }),
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Ordered grid: each dimension lists candidate values; expansion is the
/// cartesian product with the first dimension varying slowest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grid(pub Vec<(String, Vec<ParamValue>)>);

impl Grid {
    pub fn dim(mut self, key: &str, values: Vec<ParamValue>) -> Self {
        self.0.push((key.to_string(), values));
        self
    }

    pub fn expand(&self) -> Vec<HyperParams> {
        let mut out = vec![HyperParams::new()];
        for (key, values) in &self.0 {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for base in &out {
                for v in values {
                    let mut hp = base.clone();
                    hp.set(key, v.clone());
                    next.push(hp);
                }
            }
            out = next;
        }
        out
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(|(_, v)| v.len()).product()
    }
}
