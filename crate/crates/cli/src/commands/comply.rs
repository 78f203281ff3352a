use aeckit::baseline::{load_model, GruMaskModel, StreamingEnhancer, BASELINE_RATE};
use aeckit::latency::{check_compliance, measure_rtf, PipelineDescriptor};
use aeckit::sim::rng::scenario_rng;
use aeckit::SampleBuffer;
use rand::Rng;

use crate::args::{required, resolve, ComplyArgs};
use crate::failure::Failure;
use crate::Outcome;

/// Block size fed to the streaming model while timing.
const STEP_MS: f64 = 10.0;

pub(crate) fn run(args: ComplyArgs) -> Result<Outcome, Failure> {
    let args = resolve(args.clone(), args.common.config.as_deref())?;
    let pipeline_path = required(&args.pipeline, "pipeline")?;
    let pipeline = PipelineDescriptor::from_file(&pipeline_path)?;

    let (rtf, p95) = match args.rtf {
        Some(r) => (r, None),
        None => {
            let model = match &args.model {
                Some(path) => load_model(path)?,
                None => GruMaskModel::baseline(args.common.seed.unwrap_or(0)),
            };
            let m = measure(&model, args.measure_seconds.unwrap_or(3.0), args.common.seed.unwrap_or(0))?;
            (m.median, Some(m.p95))
        }
    };
    let mut report = check_compliance(&pipeline, rtf).map_err(|e| Failure::Usage(e.to_string()))?;
    report.rtf_p95 = p95;

    let verdict = if report.passes() { "PASS" } else { "FAIL" };
    let summary = format!(
        "{verdict}: latency {} ms (algorithmic {} + buffering {}), RTF {:.4}{} on {}",
        report.total_ms,
        report.algorithmic_latency_ms,
        report.buffering_latency_ms,
        report.rtf,
        if report.uses_future { ", uses lookahead" } else { "" },
        report.host_cpu
    );
    let outcome = Outcome {
        summary,
        report: serde_json::to_value(&report).map_err(|e| Failure::Data(e.to_string()))?,
        report_path: args.common.report.clone(),
    };
    if report.passes() {
        Ok(outcome)
    } else {
        Err(Failure::Compliance(Box::new(outcome)))
    }
}

/// Streams random microphone and far-end audio through the model hop by hop.
fn measure(model: &GruMaskModel, seconds: f64, seed: u64) -> Result<aeckit::latency::RtfMeasurement, Failure> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Failure::Usage(format!("--measure-seconds {seconds}")));
    }
    let len = (seconds * BASELINE_RATE as f64).round() as usize;
    let mut rng = scenario_rng(seed, 0);
    let mic: Vec<f64> = (0..len).map(|_| rng.random_range(-0.5..0.5)).collect();
    let far: Vec<f64> = (0..len).map(|_| rng.random_range(-0.5..0.5)).collect();
    let audio = SampleBuffer::new(mic, BASELINE_RATE)?;
    let mut enhancer = StreamingEnhancer::new(model)?;
    let hop = enhancer.hop_length();
    let mut offset = 0;
    let mut out = Vec::with_capacity(hop);
    let mut failed = None;
    let m = measure_rtf(
        |block: &[f64]| {
            for (mic_hop, far_hop) in block.chunks_exact(hop).zip(far[offset..offset + block.len()].chunks_exact(hop)) {
                out.clear();
                if let Err(e) = enhancer.process_hop(mic_hop, far_hop, &mut out) {
                    failed.get_or_insert(e);
                }
            }
            offset += block.len();
        },
        &audio,
        STEP_MS,
    )?;
    match failed {
        Some(e) => Err(e.into()),
        None => Ok(m),
    }
}
