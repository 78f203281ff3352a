//! Objective scoring: ERLE, the challenge score, word accuracy, evaluation
//! segments, rank/product-moment correlation and headroom.

mod challenge;
mod correlation;
mod erle;
mod segment;
mod wacc;

pub use challenge::{
    challenge_metric, headroom, read_ratings, wacc_headroom, MetricInputs, RatingEntry,
};
pub use correlation::{average_ranks, pearson, spearman};
pub use erle::{erle, Erle, ERLE_CAP_DB};
pub use segment::{segment_bounds, segment_select, TalkScenario};
pub use wacc::{align, parse_transcripts, read_transcripts, wacc, EditCounts, Transcript};
