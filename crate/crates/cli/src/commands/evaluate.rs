use std::collections::BTreeMap;
use std::path::Path;

use aeckit::metrics::{
    challenge_metric, erle, pearson, read_ratings, read_transcripts, segment_bounds, segment_select, spearman, wacc,
    TalkScenario,
};
use aeckit::sim::{read_manifest, ManifestEntry};
use serde_json::{json, Value};

use crate::args::{resolve, EvaluateArgs, ScenarioChoice};
use crate::failure::Failure;
use crate::media::{fit_length, read_at_model_rate};
use crate::Outcome;

pub(crate) fn run(args: EvaluateArgs) -> Result<Outcome, Failure> {
    let args = resolve(args.clone(), args.common.config.as_deref())?;
    if args.manifest.is_none() && args.ratings.is_none() && args.scores.is_none() {
        return Err(Failure::Usage("nothing to evaluate: give --manifest, --ratings or --scores".into()));
    }
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("evaluate"));
    let mut summary = Vec::new();

    match (&args.manifest, &args.enhanced) {
        (Some(manifest), Some(enhanced)) => {
            let choice = args.scenario.unwrap_or(ScenarioChoice::Auto);
            let (rows, mean) = erle_table(manifest, enhanced, choice)?;
            match mean {
                Some(m) => summary.push(format!("mean ERLE {m:.2} dB over {} clips", rows.len())),
                None => summary.push("no clip could be scored for ERLE".to_string()),
            }
            report.insert("clips".into(), Value::Array(rows));
            report.insert("mean_erle_db".into(), json!(mean));
        }
        (None, None) => {}
        _ => return Err(Failure::Usage("--manifest and --enhanced go together".into())),
    }

    if let Some(ratings) = &args.ratings {
        let table = metric_table(ratings, args.transcripts.as_deref(), args.hypotheses.as_deref())?;
        if let Some(m) = table.get("mean_m").and_then(Value::as_f64) {
            summary.push(format!("challenge metric M = {m:.5}"));
        }
        report.insert("challenge".into(), table);
    }

    if let Some(scores) = &args.scores {
        let table = correlation_table(scores)?;
        summary.push(format!("{} correlation pairs", table.len()));
        report.insert("correlations".into(), Value::Array(table));
    }

    Ok(Outcome {
        summary: summary.join("\n"),
        report: Value::Object(report),
        report_path: args.common.report.clone(),
    })
}

fn scenario_of(entry: &ManifestEntry, choice: ScenarioChoice) -> TalkScenario {
    choice.fixed().unwrap_or(if entry.ser_db.is_none() {
        TalkScenario::FeSingleTalk
    } else {
        TalkScenario::DoubleTalk
    })
}

/// Per-clip ERLE rows plus the mean over the clips that could be scored.
fn erle_table(manifest: &Path, enhanced: &Path, choice: ScenarioChoice) -> Result<(Vec<Value>, Option<f64>), Failure> {
    let (entries, root) = read_manifest(manifest)?;
    let mut rows = Vec::with_capacity(entries.len());
    let mut scored = Vec::new();
    for e in &entries {
        let scenario = scenario_of(e, choice);
        let mic = read_at_model_rate(&root.join(&e.mic_path))?;
        let out = read_at_model_rate(&enhanced.join(format!("{}.wav", e.id)))?;
        let out = fit_length(out, mic.len());
        let (start, end) = segment_bounds(mic.len(), scenario);
        let mut row = json!({
            "id": e.id,
            "scenario": scenario,
            "segment": [start, end],
            "sample_rate": mic.sample_rate(),
        });
        match erle(&segment_select(&mic, scenario), &segment_select(&out, scenario)) {
            Ok(v) => {
                scored.push(v.db);
                row["erle_db"] = json!(v.db);
                row["capped"] = json!(v.capped);
            }
            Err(err) => {
                row["erle_db"] = Value::Null;
                row["skipped"] = json!(err.to_string());
            }
        }
        rows.push(row);
    }
    let mean = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    Ok((rows, mean))
}

fn metric_table(ratings: &Path, transcripts: Option<&Path>, hypotheses: Option<&Path>) -> Result<Value, Failure> {
    let ratings = read_ratings(ratings)?;
    let references = transcripts.map(read_transcripts).transpose()?;
    let hyps = hypotheses.map(read_transcripts).transpose()?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (id, entry) in &ratings {
        let measured = match (&references, &hyps) {
            (Some(r), Some(h)) => match (r.get(id), h.get(id)) {
                (Some(r), Some(_)) if r.is_empty() => Err("empty reference transcript".to_string()),
                (Some(r), Some(h)) => Ok(Some(wacc(r, h)?)),
                (None, _) => Err("no reference transcript".to_string()),
                (_, None) => Err("no hypothesis transcript".to_string()),
            },
            _ => Ok(None),
        };
        let raw = match (measured, entry.wacc) {
            (Ok(Some(w)), _) => w,
            (Ok(None), Some(w)) => w,
            (Ok(None), None) => {
                rows.push(json!({"id": id, "m": null, "skipped": "no word accuracy"}));
                continue;
            }
            (Err(reason), _) => {
                rows.push(json!({"id": id, "m": null, "skipped": reason}));
                continue;
            }
        };
        let m = challenge_metric(&entry.with_wacc(raw))?;
        values.push(m);
        rows.push(json!({"id": id, "m": m, "wacc": raw, "wacc_clamped": raw.clamp(0.0, 1.0)}));
    }
    let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    Ok(json!({"mean_m": mean, "clips": rows}))
}

/// Pearson and Spearman for every pair of numeric columns of a CSV with a header.
fn correlation_table(path: &Path) -> Result<Vec<Value>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    if let Some(values) = col {
                        values.push(v);
                    }
                }
                _ => *col = None,
            }
        }
    }
    let numeric: BTreeMap<usize, Vec<f64>> = columns
        .into_iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .collect();
    if numeric.len() < 2 {
        return Err(Failure::Data(format!("{}: need two numeric columns", path.display())));
    }
    let mut out = Vec::new();
    for (&a, x) in &numeric {
        for (&b, y) in numeric.range(a + 1..) {
            out.push(json!({
                "x": headers[a],
                "y": headers[b],
                "n": x.len(),
                "pearson": pearson(x, y)?,
                "spearman": spearman(x, y)?,
            }));
        }
    }
    Ok(out)
}
