use aeckit::baseline::{save_model, train, write_loss_csv, AdamConfig, GruMaskModel, ModelDims, TrainConfig, TrainingExample};
use aeckit::sim::{read_manifest, Split};
use serde_json::json;

use super::out_dir;
use crate::args::{required, resolve, SplitChoice, TrainArgs};
use crate::failure::Failure;
use crate::media::read_at_model_rate;
use crate::Outcome;

pub(crate) fn run(args: TrainArgs) -> Result<Outcome, Failure> {
    let args = resolve(args.clone(), args.common.config.as_deref())?;
    let seed = required(&args.common.seed, "seed")?;
    let manifest = required(&args.manifest, "manifest")?;
    let base = ModelDims::BASELINE;
    let dims = ModelDims {
        hidden: args.hidden.unwrap_or(base.hidden),
        layers: args.layers.unwrap_or(base.layers),
        ..base
    };
    if dims.hidden == 0 {
        return Err(Failure::Usage("--hidden must be positive".into()));
    }
    let config = TrainConfig {
        epochs: args.epochs.unwrap_or(10),
        seed,
        adam: AdamConfig {
            lr: args.lr.unwrap_or(AdamConfig::default().lr),
            ..AdamConfig::default()
        },
    };
    config.adam.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let (entries, root) = read_manifest(&manifest)?;
    let wanted = |s: Split| match args.split.unwrap_or(SplitChoice::All) {
        SplitChoice::All => true,
        SplitChoice::Train => s == Split::Train,
        SplitChoice::Validation => s == Split::Validation,
    };
    let selected: Vec<_> = entries
        .iter()
        .filter(|e| wanted(e.split))
        .take(args.limit.unwrap_or(usize::MAX))
        .collect();
    let mut examples = Vec::with_capacity(selected.len());
    for e in &selected {
        let mic = read_at_model_rate(&root.join(&e.mic_path))?;
        let far = read_at_model_rate(&root.join(&e.farend_path))?;
        let near = read_at_model_rate(&root.join(&e.nearend_path))?;
        examples.push(TrainingExample::from_audio(&mic, &far, &near)?);
    }

    let out = out_dir(&args.common)?;
    let mut model = GruMaskModel::init(dims, seed);
    let curve = if config.epochs == 0 {
        Vec::new()
    } else {
        train(&mut model, &examples, &config)?
    };
    let model_path = out.join("model.bin");
    let loss_path = out.join("loss.csv");
    save_model(&model, &model_path)?;
    write_loss_csv(&loss_path, &curve)?;

    let summary = match (curve.first(), curve.last()) {
        (Some(a), Some(b)) => format!(
            "trained {} parameters on {} clips for {} epochs: loss {a:.4e} -> {b:.4e}; model at {}",
            model.param_count(),
            examples.len(),
            config.epochs,
            model_path.display()
        ),
        _ => format!("saved initial model ({} parameters) to {}", model.param_count(), model_path.display()),
    };
    Ok(Outcome {
        summary,
        report: json!({
            "command": "train",
            "model": model_path,
            "loss_csv": loss_path,
            "clips": examples.len(),
            "epochs": config.epochs,
            "seed": seed,
            "lr": config.adam.lr,
            "dims": {"input": dims.input, "hidden": dims.hidden, "bins": dims.bins, "layers": dims.layers},
            "param_count": model.param_count(),
            "loss": curve,
        }),
        report_path: args.common.report.clone(),
    })
}
