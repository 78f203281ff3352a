use std::path::Path;

use aeckit::audio::write_wav;
use aeckit::baseline::{enhance, load_model, GruMaskModel, BASELINE_RATE};
use aeckit::sim::read_manifest;
use serde_json::json;

use super::out_dir;
use crate::args::{required, resolve, EnhanceArgs};
use crate::failure::Failure;
use crate::media::{fit_length, read_at_model_rate};
use crate::Outcome;

pub(crate) fn run(args: EnhanceArgs) -> Result<Outcome, Failure> {
    let args = resolve(args.clone(), args.common.config.as_deref())?;
    let model_path = required(&args.model, "model")?;
    let jobs: Vec<(String, std::path::PathBuf, std::path::PathBuf)> = match (&args.manifest, &args.mic, &args.farend) {
        (Some(manifest), None, None) => {
            let (entries, root) = read_manifest(manifest)?;
            entries
                .into_iter()
                .take(args.limit.unwrap_or(usize::MAX))
                .map(|e| (e.id, root.join(e.mic_path), root.join(e.farend_path)))
                .collect()
        }
        (None, Some(mic), Some(far)) => {
            let id = mic
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("enhanced")
                .to_string();
            vec![(id, mic.clone(), far.clone())]
        }
        _ => return Err(Failure::Usage("give either --manifest or both --mic and --farend".into())),
    };
    let model = load_model(&model_path)?;
    let out = out_dir(&args.common)?;

    let mut clips = Vec::with_capacity(jobs.len());
    let mut clipped = 0;
    for (id, mic, far) in &jobs {
        let path = out.join(format!("{id}.wav"));
        let (len, c) = enhance_pair(&model, mic, far, &path)?;
        clipped += c;
        clips.push(json!({"id": id, "path": path, "samples": len}));
    }
    Ok(Outcome {
        summary: format!("enhanced {} clips into {}", clips.len(), out.display()),
        report: json!({
            "command": "enhance",
            "model": model_path,
            "sample_rate": BASELINE_RATE,
            "clipped_samples": clipped,
            "clips": clips,
        }),
        report_path: args.common.report.clone(),
    })
}

/// Enhances one pair and writes a clip as long as the microphone input
/// (the unframed tail is zero).
fn enhance_pair(model: &GruMaskModel, mic: &Path, far: &Path, out: &Path) -> Result<(usize, usize), Failure> {
    let mic = read_at_model_rate(mic)?;
    let far = read_at_model_rate(far)?;
    let far = fit_length(far, mic.len());
    let enhanced = fit_length(enhance(model, &mic, &far)?, mic.len());
    let report = write_wav(&enhanced, out)?;
    Ok((enhanced.len(), report.clipped))
}
