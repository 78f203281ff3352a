//! Word accuracy from reference and hypothesis transcripts.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Normalised word sequence: lowercase, punctuation removed, whitespace collapsed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    words: Vec<String>,
}

impl Transcript {
    pub fn from_text(text: &str) -> Self {
        let cleaned: String = text
            .chars()
            .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
            .flat_map(char::to_lowercase)
            .collect();
        Self {
            words: cleaned.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn is_unicode_punct(c: char) -> bool {
    matches!(c, '\u{2018}'..='\u{201f}' | '\u{2026}' | '\u{00ab}' | '\u{00bb}' | '\u{00bf}' | '\u{00a1}')
}

/// Substitution, deletion and insertion counts of a minimum-edit alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Word-level Levenshtein alignment with unit costs. Ties prefer
/// substitution, then deletion, then insertion when backtracking.
pub fn align(reference: &[String], hypothesis: &[String]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let diff = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if d[i][j] == d[i - 1][j - 1] + diff {
                counts.substitutions += diff;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// Raw word accuracy `1 - (S + D + I) / N`; may be negative.
pub fn wacc(reference: &Transcript, hypothesis: &Transcript) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Parameter("reference transcript is empty".into()));
    }
    let e = align(reference.words(), hypothesis.words());
    Ok(1.0 - e.total() as f64 / reference.len() as f64)
}

/// `id<TAB>words` per line.
pub fn parse_transcripts(text: &str) -> Result<BTreeMap<String, Transcript>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, words) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format(format!("transcript line {} has no tab", n + 1)))?;
        out.insert(id.trim().to_string(), Transcript::from_text(words));
    }
    Ok(out)
}

pub fn read_transcripts(path: &Path) -> Result<BTreeMap<String, Transcript>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcripts(&text)
}
