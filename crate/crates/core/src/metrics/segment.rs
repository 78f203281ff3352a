use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;

/// Which part of a clip is scored depends on the talk condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TalkScenario {
    /// Second half, after the canceller has had time to converge.
    FeSingleTalk,
    /// Final third.
    DoubleTalk,
    /// Whole clip.
    NeSingleTalk,
}

/// `[start, end)` sample range scored for a clip of `len` samples.
pub fn segment_bounds(len: usize, scenario: TalkScenario) -> (usize, usize) {
    let start = match scenario {
        TalkScenario::FeSingleTalk => len / 2,
        TalkScenario::DoubleTalk => 2 * len / 3,
        TalkScenario::NeSingleTalk => 0,
    };
    (start, len)
}

pub fn segment_select(clip: &SampleBuffer, scenario: TalkScenario) -> SampleBuffer {
    let (start, end) = segment_bounds(clip.len(), scenario);
    clip.slice(start, end)
}
