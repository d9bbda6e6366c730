use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WHO hemoglobin cut-offs (g/dL) for children aged 6-59 months.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnemiaThresholds {
    pub no_anemia_min: f64,
    pub mild_min: f64,
    pub moderate_min: f64,
}

impl Default for AnemiaThresholds {
    fn default() -> Self {
        AnemiaThresholds {
            no_anemia_min: 11.0,
            mild_min: 10.0,
            moderate_min: 7.0,
        }
    }
}

impl AnemiaThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.moderate_min > 0.0
            && self.moderate_min < self.mild_min
            && self.mild_min < self.no_anemia_min
            && self.no_anemia_min.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "anemia thresholds must satisfy 0 < moderate < mild < none, got {self:?}"
            )))
        }
    }
}

/// Binary anemia status: any severity counts as anemic.
pub fn label_from_hemoglobin(hb: f64, t: &AnemiaThresholds) -> Result<u8> {
    if !hb.is_finite() || hb <= 0.0 {
        return Err(Error::InvalidMeasurement(format!(
            "hemoglobin must be a positive finite g/dL value, got {hb}"
        )));
    }
    Ok(u8::from(hb < t.no_anemia_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NutritionStatus {
    Nourished,
    Malnourished,
}

impl NutritionStatus {
    pub fn label(self) -> &'static str {
        match self {
            NutritionStatus::Nourished => "nourished",
            NutritionStatus::Malnourished => "malnourished",
        }
    }
}

/// Composite nutrition flag from anthropometric z-scores. A child is
/// nourished iff every available score lies in the closed band [-2, +2].
/// NaN entries are treated as unmeasured and skipped.
pub fn derive_nutrition_status(z_scores: &[f64]) -> Result<NutritionStatus> {
    if z_scores.iter().any(|z| z.is_infinite()) {
        return Err(Error::MissingAnthropometry("infinite z-score".to_string()));
    }
    let mut seen = false;
    let mut inside = true;
    for &z in z_scores.iter().filter(|z| z.is_finite()) {
        seen = true;
        inside &= (-2.0..=2.0).contains(&z);
    }
    if !seen {
        return Err(Error::MissingAnthropometry(
            "no finite z-score available".to_string(),
        ));
    }
    Ok(if inside {
        NutritionStatus::Nourished
    } else {
        NutritionStatus::Malnourished
    })
}
