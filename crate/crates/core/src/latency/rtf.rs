use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;
use crate::error::{Error, Result};

/// Leading steps excluded from the statistics (caches, allocator, page faults).
pub const WARMUP_STEPS: usize = 10;
const MIN_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtfMeasurement {
    /// Median over measured steps of compute time / step duration.
    pub median: f64,
    pub p95: f64,
    pub steps: usize,
    pub step_ms: f64,
    pub host_cpu: String,
}

/// Feeds `audio` to `processor` one `step_ms` block at a time on a single,
/// dedicated thread (pinned to one core where the OS allows) and times each call.
pub fn measure_rtf<P>(mut processor: P, audio: &SampleBuffer, step_ms: f64) -> Result<RtfMeasurement>
where
    P: FnMut(&[f64]) + Send,
{
    if !(step_ms > 0.0 && step_ms.is_finite()) {
        return Err(Error::Parameter(format!("step of {step_ms} ms")));
    }
    let step_len = (step_ms * audio.sample_rate() as f64 / 1000.0).round() as usize;
    if step_len == 0 {
        return Err(Error::Parameter(format!("step of {step_ms} ms is under one sample")));
    }
    let steps = audio.len() / step_len;
    if steps < MIN_STEPS {
        return Err(Error::InsufficientData(format!(
            "{steps} steps of {step_ms} ms, need at least {MIN_STEPS}"
        )));
    }
    let step_seconds = step_len as f64 / audio.sample_rate() as f64;
    let mut ratios = std::thread::scope(|scope| {
        scope
            .spawn(|| {
                pin_current_thread();
                audio
                    .samples()
                    .chunks_exact(step_len)
                    .map(|chunk| {
                        let t = Instant::now();
                        processor(chunk);
                        t.elapsed().as_secs_f64() / step_seconds
                    })
                    .skip(WARMUP_STEPS)
                    .collect::<Vec<f64>>()
            })
            .join()
            .expect("rtf worker panicked")
    });
    ratios.sort_by(f64::total_cmp);
    Ok(RtfMeasurement {
        median: quantile(&ratios, 0.5),
        p95: quantile(&ratios, 0.95),
        steps: ratios.len(),
        step_ms,
        host_cpu: host_cpu(),
    })
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(target_os = "linux")]
fn pin_current_thread() {
    // best effort: stay on whichever core we were scheduled on
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return;
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_current_thread() {}

/// CPU model string of the host, for interpreting RTF numbers.
pub fn host_cpu() -> String {
    #[cfg(target_os = "linux")]
    if let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") {
        if let Some(name) = info
            .lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split(':').nth(1))
        {
            return name.trim().to_string();
        }
    }
    std::env::consts::ARCH.to_string()
}
