//! Toolkit for acoustic echo cancellation experiments: synthetic echo
//! scenarios, a recurrent spectral-mask echo canceller trained from scratch,
//! objective scoring, and latency / real-time-factor compliance checks.

pub mod audio;
pub mod baseline;
pub mod error;
pub mod latency;
pub mod metrics;
pub mod par;
pub mod sim;

pub use audio::SampleBuffer;
pub use error::{Error, Result};
