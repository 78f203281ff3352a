//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each and exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use aeckit::audio::{istft, stft, StftConfig};
use aeckit::baseline::{enhance, gradient_check, train, GruMaskModel, ModelDims, TrainConfig, TrainingExample};
use aeckit::latency::{algorithmic_latency, check_compliance, PipelineDescriptor, PipelineStage};
use aeckit::metrics::{challenge_metric, erle, segment_select, wacc_headroom, MetricInputs, TalkScenario};
use aeckit::par::Execution;
use aeckit::sim::rng::scenario_rng;
use aeckit::sim::{
    estimate_rt60, generate_batch, measured_ratio_db, mix_at_ser, mix_at_snr, Rir, ScenarioKind, ScenarioSpec, Sources,
};
use aeckit::SampleBuffer;
use ndarray::{s, Array2};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(detail: String, elapsed: Duration, budget_s: f64) -> Check {
    let secs = elapsed.as_secs_f64();
    ensure(secs < budget_s, format!("{detail}; {secs:.2} s of {budget_s} s"))
}

fn pipe(stage: PipelineStage) -> PipelineDescriptor {
    PipelineDescriptor::new(16000, vec![stage]).expect("valid pipeline")
}

fn latency_golden() -> Check {
    let t = Instant::now();
    let cases = [
        (PipelineStage::stft(20.0, 10.0, 0), 10.0),
        (PipelineStage::stft(32.0, 8.0, 0), 24.0),
        (PipelineStage::overlap_save(8.0), 0.0),
        (PipelineStage::time_conv(16, 1, false), 15.0 / 16.0),
        (PipelineStage::stft(20.0, 10.0, 2), 30.0),
    ];
    let got: Vec<f64> = cases.iter().map(|(s, _)| algorithmic_latency(&pipe(*s))).collect();
    let exact = got.iter().zip(&cases).all(|(g, (_, want))| g == want);
    let detail = format!("latencies {got:?} ms");
    if !exact {
        return Err(detail);
    }
    within_budget(detail, t.elapsed(), 1.0)
}

fn compliance_boundary() -> Check {
    let at = |ms: f64| {
        // overlap-save buffers one frame and adds no algorithmic latency
        check_compliance(&pipe(PipelineStage::overlap_save(ms)), 0.5).map_err(|e| e.to_string())
    };
    let edge = at(20.0)?;
    let over = at(20.0001)?;
    ensure(
        edge.total_ms == 20.0 && edge.passes() && over.total_ms > 20.0 && !over.passes_latency,
        format!(
            "20.0 ms / RTF 0.5 passes={}, 20.0001 ms passes={}",
            edge.passes(),
            over.passes()
        ),
    )
}

fn parameter_count() -> Check {
    let closed = ModelDims::BASELINE.param_count();
    let counted: usize = GruMaskModel::zeros(ModelDims::BASELINE).slices().iter().map(|s| s.len()).sum();
    // three gates, each with input weights, recurrent weights and one bias
    let by_hand = 3 * (322 * 322 + 322 * 322 + 322) * 2 + 161 * 322 + 161;
    ensure(
        closed == 1_298_143 && counted == closed && by_hand == closed,
        format!("closed form {closed}, tensor sum {counted}"),
    )
}

fn stft_reconstruction() -> Check {
    let t = Instant::now();
    let config = StftConfig::baseline();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut rng = scenario_rng(404, i);
        let x: Vec<f64> = (0..16000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let buffer = SampleBuffer::new(x, 16000).map_err(|e| e.to_string())?;
        let y = istft(&stft(&buffer, &config).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        // interior: samples covered by a full complement of overlapping frames
        let (lo, hi) = (config.window_length, y.len() - config.window_length);
        let num: f64 = (lo..hi).map(|n| (y.samples()[n] - buffer.samples()[n]).powi(2)).sum();
        let den: f64 = (lo..hi).map(|n| buffer.samples()[n].powi(2)).sum();
        worst = worst.max((num / den).sqrt());
    }
    if worst >= 1e-6 {
        return Err(format!("worst interior relative L2 error {worst:.3e}"));
    }
    within_budget(format!("worst interior relative L2 error {worst:.3e}"), t.elapsed(), 10.0)
}

fn gradients() -> Check {
    let t = Instant::now();
    let dims = ModelDims {
        input: 6,
        hidden: 4,
        bins: 3,
        layers: 2,
    };
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let model = GruMaskModel::init(dims, seed);
        let mut rng = scenario_rng(seed, 1);
        let feats = Array2::from_shape_simple_fn((4, 6), || rng.random_range(-2.0..2.0));
        let mic = Array2::from_shape_simple_fn((4, 3), || rng.random_range(0.1..3.0));
        let clean = Array2::from_shape_simple_fn((4, 3), || rng.random_range(0.0..2.0));
        let r = gradient_check(&model, feats.view(), mic.view(), clean.view(), 1e-5).map_err(|e| e.to_string())?;
        if r.checked != dims.param_count() {
            return Err(format!("checked {} of {} parameters", r.checked, dims.param_count()));
        }
        worst = worst.max(r.max_relative_error);
    }
    if worst >= 1e-4 {
        return Err(format!("max relative error {worst:.3e}"));
    }
    within_budget(format!("max relative error {worst:.3e} over 5 models"), t.elapsed(), 30.0)
}

fn erle_closed_forms() -> Check {
    let mut rng = scenario_rng(6, 0);
    let x: Vec<f64> = (0..16000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = SampleBuffer::new(x, 16000).map_err(|e| e.to_string())?;
    let tenth = x.with_samples(x.samples().iter().map(|v| v / 10.0).collect());
    let same = erle(&x, &x).map_err(|e| e.to_string())?.db;
    let twenty = erle(&x, &tenth).map_err(|e| e.to_string())?.db;
    ensure(
        same.abs() < 1e-9 && (twenty - 20.0).abs() < 1e-9,
        format!("erle(x, x) = {same} dB, erle(x, x/10) = {twenty} dB"),
    )
}

fn challenge_endpoints() -> Check {
    let uniform = |mos: f64, wacc: f64| MetricInputs {
        fe_echo_dmos: mos,
        ne_sig_mos: mos,
        ne_bak_mos: mos,
        dt_echo_dmos: mos,
        dt_other_dmos: mos,
        wacc,
    };
    let top = challenge_metric(&uniform(5.0, 1.0)).map_err(|e| e.to_string())?;
    let bottom = challenge_metric(&uniform(1.0, 0.0)).map_err(|e| e.to_string())?;
    let mixed = challenge_metric(&MetricInputs {
        fe_echo_dmos: 4.65,
        ne_sig_mos: 4.0,
        ne_bak_mos: 4.0,
        dt_echo_dmos: 4.68,
        dt_other_dmos: 4.26,
        wacc: 0.8,
    })
    .map_err(|e| e.to_string())?;
    // by hand: (3.65 + 3 + 3 + 3.68 + 3.26) / 4 + 0.8 = 4.9475, over 6
    let exact = 4.9475 / 6.0;
    ensure(
        top == 1.0 && bottom == 0.0 && (mixed - exact).abs() < 1e-6 && format!("{mixed:.5}") == "0.82458",
        format!("M = {top} / {bottom}; mixed {mixed:.7} (4.9475/6, rounds to {mixed:.5})"),
    )
}

fn generator_distributions() -> Check {
    let t = Instant::now();
    let spec = ScenarioSpec {
        seed: 2024,
        ..ScenarioSpec::default()
    };
    let sources = Sources::synthetic(20, spec.sample_rate, 2024);
    let n = 1000;
    let mut nonlinear = 0usize;
    let mut noisy = 0usize;
    let mut sers = Vec::with_capacity(n);
    for first in (0..n).step_by(100) {
        let batch = generate_batch(&spec, &sources, first as u64, 100, Execution::Auto).map_err(|e| e.to_string())?;
        for r in batch {
            nonlinear += r.metadata.nonlinear.is_some() as usize;
            noisy += r.metadata.snr_db.is_some() as usize;
            // empirical SER of the stored signals, measured where the near end talks
            sers.push(measured_ratio_db(r.nearend.samples(), r.echo.samples()));
        }
    }
    let nl = nonlinear as f64 / n as f64;
    let nz = noisy as f64 / n as f64;
    let min = sers.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = sers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = sers.iter().sum::<f64>() / n as f64;
    let detail = format!("nonlinear {nl:.3}, noisy {nz:.3}, SER min {min:.3} max {max:.3} mean {mean:.3} dB");
    let ok = (nl - 0.8).abs() <= 0.03
        && (nz - 0.5).abs() <= 0.04
        && min >= -10.0 - 1e-9
        && max <= 10.0 + 1e-9
        && mean.abs() <= 0.5;
    if !ok {
        return Err(detail);
    }
    within_budget(detail, t.elapsed(), 120.0)
}

fn mixing_exactness() -> Check {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut rng = scenario_rng(909, i);
        let len = rng.random_range(1000..8000);
        // reference active on a random sub-range only, like a padded near end
        let start = rng.random_range(0..len / 2);
        let active = rng.random_range(100..len - start);
        let reference: Vec<f64> = (0..len)
            .map(|n| if n >= start && n < start + active { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let other: Vec<f64> = (0..len).map(|_| rng.random_range(-0.3..0.3)).collect();
        let reference = SampleBuffer::new(reference, 16000).map_err(|e| e.to_string())?;
        let other = SampleBuffer::new(other, 16000).map_err(|e| e.to_string())?;
        let target: f64 = rng.random_range(-10.0..40.0);

        let (mic, scale) = mix_at_ser(&reference, &other, target).map_err(|e| e.to_string())?;
        let echo: Vec<f64> = mic.samples().iter().zip(reference.samples()).map(|(m, r)| m - r).collect();
        let scaled: Vec<f64> = other.samples().iter().map(|o| scale * o).collect();
        worst = worst.max((measured_ratio_db(reference.samples(), &scaled) - target).abs());
        worst = worst.max((measured_ratio_db(reference.samples(), &echo) - target).abs());

        let noisy = mix_at_snr(&reference, &other, target).map_err(|e| e.to_string())?;
        let noise: Vec<f64> = noisy.samples().iter().zip(reference.samples()).map(|(m, r)| m - r).collect();
        worst = worst.max((measured_ratio_db(reference.samples(), &noise) - target).abs());
    }
    ensure(worst < 1e-6, format!("worst SER/SNR deviation {worst:.3e} dB over 100 cases"))
}

fn rt60_estimator() -> Check {
    let fs = 16000.0;
    let mut details = Vec::new();
    let mut ok = true;
    for (k, tau) in [0.05, 0.1, 0.15].into_iter().enumerate() {
        let mut rng = scenario_rng(1010, k as u64);
        let len = (12.0 * tau * fs) as usize;
        let taps: Vec<f64> = (0..len)
            .map(|n| {
                let g: f64 = rng.random_range(-1.0..1.0);
                g * (-(n as f64) / fs / tau).exp()
            })
            .collect();
        let rir = Rir::new(taps, 16000).map_err(|e| e.to_string())?;
        let est = estimate_rt60(&rir).map_err(|e| e.to_string())?;
        let want = 6.9078 * tau;
        let rel = (est - want).abs() / want;
        ok &= rel < 0.05;
        details.push(format!("tau {tau}: {est:.4} s vs {want:.4} s ({:.2}%)", 100.0 * rel));
    }
    ensure(ok, details.join(", "))
}

fn causality() -> Check {
    let frames = 12;
    for m in 0..20u64 {
        let mut rng = scenario_rng(1111, m);
        let dims = ModelDims {
            input: rng.random_range(2..12),
            hidden: rng.random_range(2..10),
            bins: rng.random_range(1..8),
            layers: rng.random_range(0..4),
        };
        let model = GruMaskModel::init(dims, m);
        let feats = Array2::from_shape_simple_fn((frames, dims.input), || rng.random_range(-3.0..3.0));
        let base = model.forward(feats.view()).map_err(|e| e.to_string())?;
        for t in 0..frames - 1 {
            let mut changed = feats.clone();
            changed
                .slice_mut(s![t + 1.., ..])
                .mapv_inplace(|v| v + rng.random_range(-5.0..5.0));
            let out = model.forward(changed.view()).map_err(|e| e.to_string())?;
            let same = base
                .slice(s![..=t, ..])
                .iter()
                .zip(out.slice(s![..=t, ..]))
                .all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(format!("model {m} {dims:?}: frame {t} changed after perturbing later frames"));
            }
        }
    }
    Ok(format!("20 random models x {} cut points, earlier outputs bit-identical", frames - 1))
}

fn toy_training() -> Check {
    let t = Instant::now();
    let spec = ScenarioSpec {
        seed: 42,
        farend_duration_s: 4.0,
        nearend_duration_range_s: [1.2, 2.8],
        validation_count: 0,
        ..ScenarioSpec::default()
    };
    let sources = Sources::synthetic(20, 16000, 1);
    let clips = generate_batch(&spec, &sources, 0, 50, Execution::Auto).map_err(|e| e.to_string())?;
    let examples = clips
        .iter()
        .map(|r| TrainingExample::from_audio(&r.mic, &r.farend, &r.nearend))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let config = TrainConfig {
        epochs: 10,
        seed: 42,
        ..TrainConfig::default()
    };
    let untrained = GruMaskModel::init(ModelDims::BASELINE, 42);
    let mut model = untrained.clone();
    let curve = train(&mut model, &examples, &config).map_err(|e| e.to_string())?;
    let ratio = curve[curve.len() - 1] / curve[0];

    // held out: a different seed, far-end single talk, no background noise
    let held_spec = ScenarioSpec {
        seed: 4242,
        kind: ScenarioKind::FarEndSingleTalk,
        noisy_probability: 0.0,
        ..spec
    };
    let held = generate_batch(&held_spec, &sources, 0, 10, Execution::Auto).map_err(|e| e.to_string())?;
    let mean_erle = |m: &GruMaskModel| -> Result<f64, String> {
        let mut total = 0.0;
        for r in &held {
            let out = enhance(m, &r.mic, &r.farend).map_err(|e| e.to_string())?;
            let mic = r.mic.slice(0, out.len());
            let e = erle(
                &segment_select(&mic, TalkScenario::FeSingleTalk),
                &segment_select(&out, TalkScenario::FeSingleTalk),
            )
            .map_err(|e| e.to_string())?;
            total += e.db;
        }
        Ok(total / held.len() as f64)
    };
    let trained_erle = mean_erle(&model)?;
    let before_erle = mean_erle(&untrained)?;
    let detail = format!(
        "loss {:.4e} -> {:.4e} (ratio {ratio:.3}); held-out FE ERLE {trained_erle:.2} dB (untrained {before_erle:.2} dB); 4 s clips",
        curve[0],
        curve[curve.len() - 1]
    );
    if !(ratio < 0.8 && trained_erle > 5.0) {
        return Err(detail);
    }
    within_budget(detail, t.elapsed(), 600.0)
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_aeckit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    for run in ["a", "b"] {
        let gen = format!("{run}/gen");
        let model = format!("{run}/model");
        run_cli(
            &[
                "generate", "--seed", "13", "--count", "4", "--farend-duration-s", "2",
                "--nearend-duration-range-s", "0.6,1.4", "--out", &gen,
            ],
            d,
        )?;
        run_cli(
            &[
                "train", "--seed", "13", "--manifest", &format!("{gen}/manifest.jsonl"), "--epochs", "2", "--hidden",
                "16", "--out", &model,
            ],
            d,
        )?;
    }
    let mut compared = 0;
    for rel in ["gen/manifest.jsonl", "gen/mic/fileid_2.wav", "model/model.bin", "model/loss.csv"] {
        let a = std::fs::read(d.join("a").join(rel)).map_err(|e| e.to_string())?;
        let b = std::fs::read(d.join("b").join(rel)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{rel} differs between runs"));
        }
        compared += a.len();
    }
    Ok(format!("manifest, audio, model and loss files byte-identical ({compared} bytes)"))
}

fn wacc_spot_check() -> Check {
    let h = wacc_headroom(0.82);
    ensure((h - 0.18).abs() < 1e-12, format!("headroom(0.82) = {h}"))
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("latency worked examples", latency_golden),
        ("compliance boundary", compliance_boundary),
        ("baseline parameter count", parameter_count),
        ("stft reconstruction", stft_reconstruction),
        ("bptt gradient check", gradients),
        ("erle closed forms", erle_closed_forms),
        ("challenge metric endpoints", challenge_endpoints),
        ("generator distributions", generator_distributions),
        ("mixing exactness", mixing_exactness),
        ("rt60 estimator", rt60_estimator),
        ("causality", causality),
        ("toy training progress", toy_training),
        ("determinism", determinism),
        ("wacc headroom", wacc_spot_check),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.2} s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.2} s]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
