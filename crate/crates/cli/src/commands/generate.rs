use std::sync::Arc;

use aeckit::par::Execution;
use aeckit::sim::{
    generate_batch, write_manifest, write_record, NoiseSource, RirSource, ScenarioKind, Sources, Split,
    SyntheticSpeech, WavCorpus,
};
use serde_json::json;

use super::out_dir;
use crate::args::{required, resolve, GenerateArgs};
use crate::failure::Failure;
use crate::Outcome;

const DEFAULT_SPEAKERS: usize = 20;
/// Scenarios synthesised per batch; bounds memory for large counts.
const CHUNK: usize = 64;

pub(crate) fn run(args: GenerateArgs) -> Result<Outcome, Failure> {
    let args = resolve(args.clone(), args.common.config.as_deref())?;
    let seed = required(&args.common.seed, "seed")?;
    let count = required(&args.count, "count")?;
    let first = args.first_index.unwrap_or(0);

    let mut spec = args.scenario.clone().unwrap_or_default();
    spec.seed = seed;
    if let Some(rate) = args.sample_rate {
        spec.sample_rate = rate;
    }
    if let Some(d) = args.farend_duration_s {
        spec.farend_duration_s = d;
    }
    if let Some(range) = &args.nearend_duration_range_s {
        let [lo, hi] = range[..] else {
            return Err(Failure::Usage("--nearend-duration-range-s takes MIN,MAX".into()));
        };
        spec.nearend_duration_range_s = [lo, hi];
    }
    if let Some(v) = args.validation_count {
        spec.validation_count = v;
    }
    if args.far_end_only {
        spec.kind = ScenarioKind::FarEndSingleTalk;
    }
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let speech: Arc<dyn aeckit::sim::SpeechCorpus> = match &args.corpus {
        Some(dir) => Arc::new(WavCorpus::open(dir)?),
        None => Arc::new(SyntheticSpeech::new(
            args.speakers.unwrap_or(DEFAULT_SPEAKERS),
            3,
            (spec.farend_duration_s + 2.0).max(12.0),
            spec.sample_rate,
            seed,
        )),
    };
    let sources = Sources {
        speech,
        noise: match &args.noise {
            Some(dir) => NoiseSource::from_dir(dir)?,
            None => NoiseSource::Synthetic,
        },
        rirs: match &args.rirs {
            Some(dir) => RirSource::from_dir(dir)?,
            None => RirSource::Synthetic,
        },
    };

    let out = out_dir(&args.common)?;
    let mut entries = Vec::with_capacity(count as usize);
    let mut clipped = 0usize;
    let mut nonlinear = 0usize;
    let mut noisy = 0usize;
    let mut done = 0u64;
    while done < count {
        let n = CHUNK.min((count - done) as usize);
        for record in generate_batch(&spec, &sources, first + done, n, Execution::Auto)? {
            nonlinear += record.metadata.nonlinear.is_some() as usize;
            noisy += record.metadata.snr_db.is_some() as usize;
            let (entry, c) = write_record(&record, &out)?;
            clipped += c;
            entries.push(entry);
        }
        done += n as u64;
        log::info!("generated {done}/{count}");
    }
    let manifest = out.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;

    let validation = entries.iter().filter(|e| e.split == Split::Validation).count();
    let frac = |k: usize| if count == 0 { 0.0 } else { k as f64 / count as f64 };
    if clipped > 0 {
        log::warn!("{clipped} samples clipped while writing WAVs");
    }
    Ok(Outcome {
        summary: format!(
            "wrote {count} scenarios ({validation} validation) to {}",
            manifest.display()
        ),
        report: json!({
            "command": "generate",
            "manifest": manifest,
            "count": count,
            "first_index": first,
            "validation": validation,
            "nonlinear_fraction": frac(nonlinear),
            "noisy_fraction": frac(noisy),
            "clipped_samples": clipped,
            "spec": spec,
        }),
        report_path: args.common.report.clone(),
    })
}
