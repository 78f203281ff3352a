//! Scenario manifests: one JSON object per line, audio paths relative to the
//! manifest's directory.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::nonlinear::NonlinearKind;
use super::scenario::{ScenarioRecord, Split};
use crate::audio::{read_wav, write_wav, SampleBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub index: u64,
    pub split: Split,
    pub ser_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub rt60_s: Option<f64>,
    pub nonlinear_kind: Option<NonlinearKind>,
    pub nonlinear_params: serde_json::Value,
    pub delay_samples: usize,
    pub farend_path: PathBuf,
    pub echo_path: PathBuf,
    pub nearend_path: PathBuf,
    pub mic_path: PathBuf,
}

/// The four signals of a manifest entry, loaded from disk.
#[derive(Debug, Clone)]
pub struct ScenarioAudio {
    pub farend: SampleBuffer,
    pub echo: SampleBuffer,
    pub nearend: SampleBuffer,
    pub mic: SampleBuffer,
}

impl ManifestEntry {
    pub fn load_audio(&self, base: &Path) -> Result<ScenarioAudio> {
        Ok(ScenarioAudio {
            farend: read_wav(base.join(&self.farend_path))?,
            echo: read_wav(base.join(&self.echo_path))?,
            nearend: read_wav(base.join(&self.nearend_path))?,
            mic: read_wav(base.join(&self.mic_path))?,
        })
    }
}

/// Writes the record's four WAVs under `root/{farend,echo,nearend,mic}/` and
/// returns its manifest line. Returns the number of clipped samples as well.
pub fn write_record(record: &ScenarioRecord, root: &Path) -> Result<(ManifestEntry, usize)> {
    let mut clipped = 0;
    let mut write = |dir: &str, buf: &SampleBuffer| -> Result<PathBuf> {
        let rel = PathBuf::from(dir).join(format!("{}.wav", record.id));
        let full = root.join(&rel);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        clipped += write_wav(buf, &full)?.clipped;
        Ok(rel)
    };
    let farend_path = write("farend", &record.farend)?;
    let echo_path = write("echo", &record.echo)?;
    let nearend_path = write("nearend", &record.nearend)?;
    let mic_path = write("mic", &record.mic)?;
    let m = &record.metadata;
    let entry = ManifestEntry {
        id: record.id.clone(),
        seed: record.seed,
        index: record.index,
        split: m.split,
        ser_db: m.ser_db,
        snr_db: m.snr_db,
        rt60_s: m.rt60_s,
        nonlinear_kind: m.nonlinear.map(|n| n.kind()),
        nonlinear_params: m
            .nonlinear
            .map(|n| n.params_json())
            .unwrap_or_else(|| serde_json::json!({})),
        delay_samples: m.delay_samples,
        farend_path,
        echo_path,
        nearend_path,
        mic_path,
    };
    Ok((entry, clipped))
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a manifest; returns the entries and the directory their paths are relative to.
pub fn read_manifest(path: &Path) -> Result<(Vec<ManifestEntry>, PathBuf)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        entries.push(entry);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((entries, base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::corpus::Sources;
    use crate::sim::scenario::{generate_scenario, ScenarioSpec};

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ScenarioSpec { seed: 12, ..Default::default() };
        let rec = generate_scenario(&spec, &Sources::synthetic(4, 16000, 1), 3).unwrap();
        let (entry, clipped) = write_record(&rec, dir.path()).unwrap();
        assert_eq!(clipped, 0);
        let mpath = dir.path().join("manifest.jsonl");
        write_manifest(&mpath, std::slice::from_ref(&entry)).unwrap();
        let (back, base) = read_manifest(&mpath).unwrap();
        assert_eq!(back, vec![entry.clone()]);
        let audio = back[0].load_audio(&base).unwrap();
        assert_eq!(audio.mic.len(), rec.mic.len());
        for (a, b) in audio.mic.samples().iter().zip(rec.mic.samples()) {
            assert!((a - b).abs() <= 0.5 / 32768.0 + 1e-12);
        }

        let line = std::fs::read_to_string(&mpath).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in [
            "id", "seed", "index", "split", "ser_db", "snr_db", "rt60_s", "nonlinear_kind",
            "nonlinear_params", "delay_samples", "farend_path", "echo_path", "nearend_path", "mic_path",
        ] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert_eq!(v["split"], "validation");
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "{not json}\n").unwrap();
        let err = read_manifest(&p).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }
}
