use std::path::{Path, PathBuf};

use aeckit::metrics::TalkScenario;
use aeckit::sim::ScenarioSpec;
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Options every subcommand accepts. Any of them may also be set in the
/// `--config` file except `--config` itself.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// JSON file of option values for this command; flags take precedence.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write the machine-readable JSON report here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Number of scenarios.
    #[arg(long)]
    pub count: Option<u64>,
    /// Index of the first scenario (ids and splits follow the index).
    #[arg(long)]
    pub first_index: Option<u64>,
    /// Directory of speech WAVs named `<speaker>_<anything>.wav`; synthetic voices when absent.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Number of synthetic speakers when no corpus is given.
    #[arg(long)]
    pub speakers: Option<usize>,
    /// Directory of noise WAVs; coloured synthetic noise when absent.
    #[arg(long, value_name = "DIR")]
    pub noise: Option<PathBuf>,
    /// Directory of room impulse response WAVs; synthetic decays when absent.
    #[arg(long, value_name = "DIR")]
    pub rirs: Option<PathBuf>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// Far-end single talk only (no near-end speaker).
    #[arg(long)]
    pub far_end_only: bool,
    #[arg(long)]
    pub farend_duration_s: Option<f64>,
    /// Shortest and longest near-end segment, e.g. `3,7`.
    #[arg(long, value_delimiter = ',', value_name = "MIN,MAX")]
    pub nearend_duration_range_s: Option<Vec<f64>>,
    /// Indices below this count form the validation split.
    #[arg(long)]
    pub validation_count: Option<u64>,
    /// Full scenario settings (config file only).
    #[arg(skip)]
    pub scenario: Option<ScenarioSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    All,
    Train,
    Validation,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Which manifest entries to train on (default all).
    #[arg(long, value_enum)]
    pub split: Option<SplitChoice>,
    /// Use at most this many entries.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Recurrent layer width (default 322).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of recurrent layers (default 2).
    #[arg(long)]
    pub layers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Enhance every entry of this manifest.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["mic", "farend"])]
    pub manifest: Option<PathBuf>,
    /// Single microphone recording (with --farend).
    #[arg(long, value_name = "FILE", requires = "farend")]
    pub mic: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "mic")]
    pub farend: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioChoice {
    /// Far-end single talk when the entry has no SER, double talk otherwise.
    Auto,
    FeSingleTalk,
    DoubleTalk,
    NeSingleTalk,
}

impl ScenarioChoice {
    pub fn fixed(self) -> Option<TalkScenario> {
        match self {
            ScenarioChoice::Auto => None,
            ScenarioChoice::FeSingleTalk => Some(TalkScenario::FeSingleTalk),
            ScenarioChoice::DoubleTalk => Some(TalkScenario::DoubleTalk),
            ScenarioChoice::NeSingleTalk => Some(TalkScenario::NeSingleTalk),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Directory holding `<id>.wav` outputs for the manifest entries.
    #[arg(long, value_name = "DIR")]
    pub enhanced: Option<PathBuf>,
    /// Which evaluation segment to score.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioChoice>,
    /// JSON object of per-clip subjective scores.
    #[arg(long, value_name = "FILE")]
    pub ratings: Option<PathBuf>,
    /// Reference transcripts, `id<TAB>words` per line.
    #[arg(long, value_name = "FILE", requires = "hypotheses")]
    pub transcripts: Option<PathBuf>,
    /// Recognised transcripts of the enhanced clips, same format.
    #[arg(long, value_name = "FILE", requires = "transcripts")]
    pub hypotheses: Option<PathBuf>,
    /// CSV with a header row; every pair of numeric columns is correlated.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Pipeline descriptor JSON.
    #[arg(long, value_name = "FILE")]
    pub pipeline: Option<PathBuf>,
    /// Use this real-time factor instead of measuring one.
    #[arg(long)]
    pub rtf: Option<f64>,
    /// Model whose streaming inference is timed (a seeded untrained baseline when absent).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Seconds of audio streamed for the RTF measurement.
    #[arg(long)]
    pub measure_seconds: Option<f64>,
}

/// Overlays the values set on the command line onto the config file at
/// `config`. Unset flags (`None`, or `false` switches) take the file's value.
pub(crate) fn resolve<T>(flags: T, config: Option<&Path>) -> Result<T, Failure>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let file: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(file) = file else {
        return Err(Failure::Data(format!("{}: config must be a JSON object", path.display())));
    };
    let serde_json::Value::Object(mut merged) =
        serde_json::to_value(&flags).map_err(|e| Failure::Data(e.to_string()))?
    else {
        unreachable!("option structs serialise to objects");
    };
    for (key, value) in file {
        match merged.get(&key) {
            None => {
                return Err(Failure::Usage(format!(
                    "{}: unknown option {key:?}",
                    path.display()
                )))
            }
            Some(serde_json::Value::Null) | Some(serde_json::Value::Bool(false)) => {
                merged.insert(key, value);
            }
            Some(_) => {}
        }
    }
    serde_json::from_value(serde_json::Value::Object(merged))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, Failure> {
    value.clone().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}
