//! Analysis core for an instrumented care living space: EDA decomposition,
//! correlation statistics, force-plate COP features, vitals and survey
//! aggregation, and rule-based spatial event detection.

pub mod eda;
pub mod error;
pub mod forceplate;
pub mod model;
pub mod spatial;
pub mod stats;
pub mod surveys;
pub mod vitals;

pub use error::{CoreError, Result};
pub use model::{
    align_timestamps, segment_signal, ActivityId, ActivityTimeline, IndexRange, Millis, SampledSignal, Segment,
    SegmentChunk, SessionRecord, Stream, TimedSeries, Unit,
};
