//! Latency accounting for block-based audio pipelines and the real-time gate.
//!
//! Algorithmic latency is the output offset caused by the processing chain
//! itself (window minus hop, lookahead frames, non-causal kernels) and adds up
//! over stages. Buffering latency is the block size at which input is consumed;
//! a chain releases samples at the pace of its coarsest stage, so the chain
//! value is the maximum over stages.

mod rtf;

pub use rtf::{host_cpu, measure_rtf, RtfMeasurement, WARMUP_STEPS};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Combined latency budget in milliseconds (inclusive).
pub const MAX_TOTAL_LATENCY_MS: f64 = 20.0;
/// Real-time factor budget (inclusive).
pub const MAX_RTF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageKind {
    StftBlock {
        window_ms: f64,
        hop_ms: f64,
        #[serde(default)]
        lookahead_frames: u32,
    },
    OverlapSave {
        frame_ms: f64,
    },
    TimeConv {
        kernel_samples: u32,
        #[serde(default = "one")]
        stride_samples: u32,
        #[serde(default)]
        left_padded: bool,
    },
    Passthrough,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineStage {
    #[serde(flatten)]
    pub kind: StageKind,
    /// Overrides the descriptor's rate for this stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
}

impl PipelineStage {
    pub fn new(kind: StageKind) -> Self {
        Self {
            kind,
            sample_rate: None,
        }
    }

    pub fn stft(window_ms: f64, hop_ms: f64, lookahead_frames: u32) -> Self {
        Self::new(StageKind::StftBlock {
            window_ms,
            hop_ms,
            lookahead_frames,
        })
    }

    pub fn overlap_save(frame_ms: f64) -> Self {
        Self::new(StageKind::OverlapSave { frame_ms })
    }

    pub fn time_conv(kernel_samples: u32, stride_samples: u32, left_padded: bool) -> Self {
        Self::new(StageKind::TimeConv {
            kernel_samples,
            stride_samples,
            left_padded,
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.kind {
            StageKind::StftBlock { window_ms, hop_ms, .. } => {
                if !(hop_ms > 0.0 && window_ms >= hop_ms && window_ms.is_finite()) {
                    return bad(format!("stft window {window_ms} ms / hop {hop_ms} ms"));
                }
            }
            StageKind::OverlapSave { frame_ms } => {
                if !(frame_ms > 0.0 && frame_ms.is_finite()) {
                    return bad(format!("overlap-save frame {frame_ms} ms"));
                }
            }
            StageKind::TimeConv {
                kernel_samples,
                stride_samples,
                ..
            } => {
                if kernel_samples < 1 || stride_samples < 1 {
                    return bad("time_conv kernel and stride must be at least 1".into());
                }
            }
            StageKind::Passthrough => {}
        }
        if self.sample_rate == Some(0) {
            return bad("stage sample_rate must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineDescriptor {
    pub sample_rate: u32,
    pub stages: Vec<PipelineStage>,
}

impl PipelineDescriptor {
    pub fn new(sample_rate: u32, stages: Vec<PipelineStage>) -> Result<Self> {
        let p = Self { sample_rate, stages };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("pipeline has no stages".into()));
        }
        self.stages.iter().try_for_each(PipelineStage::validate)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("pipeline descriptor: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Concatenation: `self` feeds `other`.
    pub fn then(&self, other: &PipelineDescriptor) -> PipelineDescriptor {
        let pin = |s: &PipelineStage, rate| PipelineStage {
            sample_rate: Some(s.sample_rate.unwrap_or(rate)),
            ..*s
        };
        PipelineDescriptor {
            sample_rate: self.sample_rate,
            stages: self
                .stages
                .iter()
                .map(|s| pin(s, self.sample_rate))
                .chain(other.stages.iter().map(|s| pin(s, other.sample_rate)))
                .collect(),
        }
    }

    fn stage_rate(&self, s: &PipelineStage) -> f64 {
        s.sample_rate.unwrap_or(self.sample_rate) as f64
    }
}

fn stage_algorithmic_ms(stage: &PipelineStage, rate: f64) -> f64 {
    match stage.kind {
        StageKind::StftBlock {
            window_ms,
            hop_ms,
            lookahead_frames,
        } => (window_ms - hop_ms) + lookahead_frames as f64 * hop_ms,
        StageKind::OverlapSave { .. } => 0.0,
        StageKind::TimeConv {
            kernel_samples,
            left_padded,
            ..
        } => {
            if left_padded {
                0.0
            } else {
                (kernel_samples - 1) as f64 * 1000.0 / rate
            }
        }
        StageKind::Passthrough => 0.0,
    }
}

fn stage_buffering_ms(stage: &PipelineStage, rate: f64) -> f64 {
    match stage.kind {
        StageKind::StftBlock { hop_ms, .. } => hop_ms,
        StageKind::OverlapSave { frame_ms } => frame_ms,
        StageKind::TimeConv { stride_samples, .. } => stride_samples as f64 * 1000.0 / rate,
        StageKind::Passthrough => 0.0,
    }
}

/// Sum of per-stage algorithmic latencies, in ms.
pub fn algorithmic_latency(p: &PipelineDescriptor) -> f64 {
    p.stages
        .iter()
        .map(|s| stage_algorithmic_ms(s, p.stage_rate(s)))
        .sum()
}

/// Largest per-stage buffering latency, in ms.
pub fn buffering_latency(p: &PipelineDescriptor) -> f64 {
    p.stages
        .iter()
        .map(|s| stage_buffering_ms(s, p.stage_rate(s)))
        .fold(0.0, f64::max)
}

/// True when any stage looks at future frames.
pub fn uses_future(p: &PipelineDescriptor) -> bool {
    p.stages.iter().any(|s| {
        matches!(s.kind, StageKind::StftBlock { lookahead_frames, .. } if lookahead_frames > 0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub algorithmic_latency_ms: f64,
    pub buffering_latency_ms: f64,
    pub total_ms: f64,
    pub rtf: f64,
    /// 95th-percentile step RTF when the value came from a measurement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtf_p95: Option<f64>,
    pub passes_latency: bool,
    pub passes_rtf: bool,
    pub uses_future: bool,
    pub host_cpu: String,
}

impl ComplianceReport {
    /// All three requirements: latency budget, RTF budget, no lookahead.
    pub fn passes(&self) -> bool {
        self.passes_latency && self.passes_rtf && !self.uses_future
    }
}

pub fn check_compliance(p: &PipelineDescriptor, rtf: f64) -> Result<ComplianceReport> {
    p.validate()?;
    if !(rtf >= 0.0 && rtf.is_finite()) {
        return Err(Error::Parameter(format!("rtf {rtf}")));
    }
    let algorithmic = algorithmic_latency(p);
    let buffering = buffering_latency(p);
    let total = algorithmic + buffering;
    Ok(ComplianceReport {
        algorithmic_latency_ms: algorithmic,
        buffering_latency_ms: buffering,
        total_ms: total,
        rtf,
        rtf_p95: None,
        passes_latency: total <= MAX_TOTAL_LATENCY_MS,
        passes_rtf: rtf <= MAX_RTF,
        uses_future: uses_future(p),
        host_cpu: host_cpu(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pipe(stages: Vec<PipelineStage>) -> PipelineDescriptor {
        PipelineDescriptor::new(16000, stages).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::stft(20.0, 10.0, 0)])), 10.0);
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::stft(32.0, 8.0, 0)])), 24.0);
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::overlap_save(8.0)])), 0.0);
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::time_conv(16, 1, false)])), 0.9375);
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::time_conv(16, 1, true)])), 0.0);
        assert_eq!(algorithmic_latency(&pipe(vec![PipelineStage::stft(20.0, 10.0, 2)])), 30.0);
    }

    #[test]
    fn buffering_examples() {
        assert_eq!(buffering_latency(&pipe(vec![PipelineStage::stft(20.0, 10.0, 0)])), 10.0);
        assert_eq!(buffering_latency(&pipe(vec![PipelineStage::time_conv(16, 1, false)])), 0.0625);
        assert_eq!(buffering_latency(&pipe(vec![PipelineStage::overlap_save(8.0)])), 8.0);
        let chain = pipe(vec![PipelineStage::stft(20.0, 10.0, 0), PipelineStage::overlap_save(4.0)]);
        assert_eq!(buffering_latency(&chain), 10.0);
    }

    #[test]
    fn compliance_examples() {
        let r = check_compliance(&pipe(vec![PipelineStage::stft(20.0, 10.0, 0)]), 0.3).unwrap();
        assert_eq!(r.total_ms, 20.0);
        assert!(r.passes_latency && r.passes_rtf && !r.uses_future && r.passes());
        let r = check_compliance(&pipe(vec![PipelineStage::stft(32.0, 8.0, 0)]), 0.3).unwrap();
        assert_eq!(r.total_ms, 32.0);
        assert!(!r.passes_latency);
        let r = check_compliance(&pipe(vec![PipelineStage::stft(20.0, 10.0, 2)]), 0.3).unwrap();
        assert!(r.uses_future && !r.passes());
    }

    #[test]
    fn boundaries_are_inclusive() {
        let r = check_compliance(&pipe(vec![PipelineStage::stft(20.0, 10.0, 0)]), 0.5).unwrap();
        assert!(r.passes_latency && r.passes_rtf);
        let r = check_compliance(&pipe(vec![PipelineStage::stft(20.0001, 10.0, 0)]), 0.5000001).unwrap();
        assert!(!r.passes_latency && !r.passes_rtf);
    }

    #[test]
    fn descriptor_json() {
        let text = r#"{"sample_rate": 16000, "stages": [
            {"kind": "stft_block", "window_ms": 20, "hop_ms": 10},
            {"kind": "time_conv", "kernel_samples": 16, "sample_rate": 8000},
            {"kind": "passthrough"}
        ]}"#;
        let p = PipelineDescriptor::from_json(text).unwrap();
        assert_eq!(p.stages[1].sample_rate, Some(8000));
        assert_eq!(algorithmic_latency(&p), 10.0 + 15.0 / 8.0);
        let back = PipelineDescriptor::from_json(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn malformed_descriptors() {
        assert!(PipelineDescriptor::from_json("{}").is_err());
        assert!(PipelineDescriptor::from_json(r#"{"sample_rate":16000,"stages":[]}"#).is_err());
        assert!(PipelineDescriptor::from_json(
            r#"{"sample_rate":16000,"stages":[{"kind":"stft_block","window_ms":5,"hop_ms":10}]}"#
        )
        .is_err());
        assert!(PipelineDescriptor::from_json(
            r#"{"sample_rate":16000,"stages":[{"kind":"warp_drive"}]}"#
        )
        .is_err());
    }

    fn arb_stage() -> impl Strategy<Value = PipelineStage> {
        prop_oneof![
            (1u32..64, 1u32..64, 0u32..4).prop_map(|(w, h, l)| PipelineStage::stft(
                (w.max(h)) as f64 * 0.5,
                h as f64 * 0.5,
                l
            )),
            (1u32..64).prop_map(|f| PipelineStage::overlap_save(f as f64)),
            (1u32..64, 1u32..8, any::<bool>()).prop_map(|(k, s, p)| PipelineStage::time_conv(k, s, p)),
            Just(PipelineStage::new(StageKind::Passthrough)),
        ]
    }

    proptest! {
        #[test]
        fn algorithmic_latency_is_additive(
            a in proptest::collection::vec(arb_stage(), 1..5),
            b in proptest::collection::vec(arb_stage(), 1..5),
        ) {
            let pa = pipe(a);
            let pb = PipelineDescriptor::new(48000, b).unwrap();
            let joined = pa.then(&pb);
            let lhs = algorithmic_latency(&joined);
            let rhs = algorithmic_latency(&pa) + algorithmic_latency(&pb);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}
