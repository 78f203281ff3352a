use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-scenario subjective scores feeding the challenge metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInputs {
    /// Far-end single talk echo DMOS.
    pub fe_echo_dmos: f64,
    /// Near-end single talk signal MOS.
    pub ne_sig_mos: f64,
    /// Near-end single talk background MOS.
    pub ne_bak_mos: f64,
    pub dt_echo_dmos: f64,
    pub dt_other_dmos: f64,
    /// Word accuracy; raw values outside `[0, 1]` are clamped.
    pub wacc: f64,
}

impl MetricInputs {
    fn mos(&self) -> [(&'static str, f64); 5] {
        [
            ("fe_echo_dmos", self.fe_echo_dmos),
            ("ne_sig_mos", self.ne_sig_mos),
            ("ne_bak_mos", self.ne_bak_mos),
            ("dt_echo_dmos", self.dt_echo_dmos),
            ("dt_other_dmos", self.dt_other_dmos),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.mos() {
            if !(1.0..=5.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} = {v} outside [1, 5]")));
            }
        }
        if !self.wacc.is_finite() {
            return Err(Error::NonFinite("wacc"));
        }
        Ok(())
    }
}

/// The overall score: the five MOS terms each mapped to `[0, 1]` by
/// `(x - 1) / 4`, plus word accuracy, averaged with equal weight.
pub fn challenge_metric(m: &MetricInputs) -> Result<f64> {
    m.validate()?;
    let mos_sum: f64 = m.mos().iter().map(|(_, v)| v - 1.0).sum();
    Ok((mos_sum / 4.0 + m.wacc.clamp(0.0, 1.0)) / 6.0)
}

/// Improvement left before a score hits the top of its scale.
pub fn headroom(score: f64, scale_max: f64) -> f64 {
    scale_max - score
}

/// Headroom of a word accuracy (scale maximum 1).
pub fn wacc_headroom(wacc: f64) -> f64 {
    headroom(wacc, 1.0)
}

/// Entry of a ratings file; `wacc` may be filled in later from transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingEntry {
    pub fe_echo_dmos: f64,
    pub ne_sig_mos: f64,
    pub ne_bak_mos: f64,
    pub dt_echo_dmos: f64,
    pub dt_other_dmos: f64,
    #[serde(default)]
    pub wacc: Option<f64>,
}

impl RatingEntry {
    pub fn with_wacc(&self, wacc: f64) -> MetricInputs {
        MetricInputs {
            fe_echo_dmos: self.fe_echo_dmos,
            ne_sig_mos: self.ne_sig_mos,
            ne_bak_mos: self.ne_bak_mos,
            dt_echo_dmos: self.dt_echo_dmos,
            dt_other_dmos: self.dt_other_dmos,
            wacc,
        }
    }
}

/// JSON object mapping scenario id to ratings.
pub fn read_ratings(path: &Path) -> Result<BTreeMap<String, RatingEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
