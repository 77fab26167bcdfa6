//! Shared domain types: sampled signals, the study timeline and session records.
//!
//! Timestamps are integer milliseconds since the session epoch. Segments use
//! half-open `[start, end)` intervals, so a sample that falls exactly on a
//! boundary belongs to the later segment.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::forceplate::ForcePlateSample;
use crate::spatial::SensorEvent;
use crate::surveys::{PostStudyResponse, PresentationResponse};
use crate::vitals::VitalsReading;

/// Milliseconds since the session epoch.
pub type Millis = i64;

/// Half-open range of sample indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Microsiemens,
    Newtons,
    NewtonMeters,
    Volts,
    Lux,
    Dimensionless,
}

/// Uniformly sampled series with explicit missing-data annotations.
///
/// Samples inside a gap carry placeholder values (`NaN` unless filled) and
/// must not be used by analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    sample_rate_hz: f64,
    start_ms: Millis,
    values: Vec<f64>,
    gaps: Vec<IndexRange>,
    unit: Unit,
}

impl SampledSignal {
    pub fn new(sample_rate_hz: f64, start_ms: Millis, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(CoreError::InvalidSignal(format!(
                "sample rate must be positive (got {sample_rate_hz})"
            )));
        }
        Ok(Self {
            sample_rate_hz,
            start_ms,
            values,
            gaps: Vec::new(),
            unit,
        })
    }

    /// Attach gap annotations. Ranges must be non-empty, sorted, disjoint and in bounds.
    pub fn with_gaps(mut self, gaps: Vec<IndexRange>) -> Result<Self> {
        validate_ranges(&gaps, self.values.len())?;
        self.gaps = gaps;
        Ok(self)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn start_ms(&self) -> Millis {
        self.start_ms
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn gaps(&self) -> &[IndexRange] {
        &self.gaps
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total duration covered by the samples, `len / rate`.
    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate_hz
    }

    /// Number of samples not covered by a gap.
    pub fn valid_len(&self) -> usize {
        self.len() - self.gaps.iter().map(IndexRange::len).sum::<usize>()
    }

    pub fn timestamp_at(&self, index: usize) -> Millis {
        self.start_ms + offset_ms(index, self.sample_rate_hz)
    }

    /// First index whose timestamp is `>= t` (may equal `len`).
    pub fn index_at_or_after(&self, t: Millis) -> usize {
        let (mut lo, mut hi) = (0usize, self.values.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.timestamp_at(mid) < t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn is_gap(&self, index: usize) -> bool {
        self.gaps.iter().any(|g| g.contains(index))
    }

    /// Maximal runs of samples outside every gap.
    pub fn valid_runs(&self) -> Vec<IndexRange> {
        let mut runs = Vec::new();
        let mut cursor = 0;
        for g in &self.gaps {
            if g.start > cursor {
                runs.push(IndexRange::new(cursor, g.start));
            }
            cursor = g.end;
        }
        if cursor < self.values.len() {
            runs.push(IndexRange::new(cursor, self.values.len()));
        }
        runs
    }

    /// Copy of `range` with gap annotations re-based to the slice.
    pub fn slice(&self, range: IndexRange) -> SampledSignal {
        let gaps = self
            .gaps
            .iter()
            .filter_map(|g| {
                let s = g.start.max(range.start);
                let e = g.end.min(range.end);
                (s < e).then(|| IndexRange::new(s - range.start, e - range.start))
            })
            .collect();
        SampledSignal {
            sample_rate_hz: self.sample_rate_hz,
            start_ms: self.timestamp_at(range.start),
            values: self.values[range.start..range.end].to_vec(),
            gaps,
            unit: self.unit,
        }
    }

    /// Same timing and gaps, new values.
    pub fn with_values(&self, values: Vec<f64>) -> SampledSignal {
        debug_assert_eq!(values.len(), self.values.len());
        SampledSignal {
            sample_rate_hz: self.sample_rate_hz,
            start_ms: self.start_ms,
            values,
            gaps: self.gaps.clone(),
            unit: self.unit,
        }
    }

    /// Same signal re-based in time by `delta_ms`.
    pub fn shifted(&self, delta_ms: Millis) -> SampledSignal {
        let mut out = self.clone();
        out.start_ms += delta_ms;
        out
    }
}

fn offset_ms(index: usize, rate_hz: f64) -> Millis {
    (index as f64 * 1000.0 / rate_hz).round() as Millis
}

pub(crate) fn validate_ranges(ranges: &[IndexRange], len: usize) -> Result<()> {
    let mut prev_end = 0usize;
    for (i, r) in ranges.iter().enumerate() {
        if r.is_empty() {
            return Err(CoreError::InvalidSignal(format!("gap {i} is empty")));
        }
        if r.end > len {
            return Err(CoreError::InvalidSignal(format!(
                "gap {i} [{}, {}) exceeds signal length {len}",
                r.start, r.end
            )));
        }
        if i > 0 && r.start < prev_end {
            return Err(CoreError::InvalidSignal(format!(
                "gap {i} overlaps or precedes the previous gap"
            )));
        }
        prev_end = r.end;
    }
    Ok(())
}

/// A scalar stream with one raw timestamp per sample, as recorded by a device
/// before any resampling onto a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSeries {
    pub t_ms: Vec<Millis>,
    pub values: Vec<f64>,
    pub unit: Unit,
}

impl TimedSeries {
    pub fn new(t_ms: Vec<Millis>, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if t_ms.len() != values.len() {
            return Err(CoreError::LengthMismatch(t_ms.len(), values.len()));
        }
        Ok(Self { t_ms, values, unit })
    }

    pub fn len(&self) -> usize {
        self.t_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_ms.is_empty()
    }

    /// Indices `i` where `t[i] <= t[i - 1]`.
    pub fn non_monotonic_indices(&self) -> Vec<usize> {
        strictly_increasing_violations(&self.t_ms)
    }
}

pub(crate) fn strictly_increasing_violations(t: &[Millis]) -> Vec<usize> {
    t.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] <= w[0])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Label of one study activity. The canonical labels live in [`canonical`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityId(pub String);

impl ActivityId {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActivityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActivityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// The fifteen activities of the study session, in timeline order, with
/// their scheduled durations.
pub mod canonical {
    pub const BASELINE: &str = "baseline";
    pub const DATA_COLLECTION_1: &str = "data_collection_1";
    pub const PILL_ADMINISTRATION: &str = "pill_administration";
    pub const BRUCE_STAGE_1: &str = "bruce_stage_1";
    pub const BRUCE_STAGE_2: &str = "bruce_stage_2";
    pub const BRUCE_STAGE_3: &str = "bruce_stage_3";
    pub const BRUCE_STAGE_4: &str = "bruce_stage_4";
    pub const DATA_COLLECTION_2: &str = "data_collection_2";
    pub const PUZZLES: &str = "puzzles";
    pub const WANDERING_DOORS: &str = "wandering_doors";
    pub const HOUSEHOLD_TASKS: &str = "household_tasks";
    pub const DATA_COLLECTION_3: &str = "data_collection_3";
    pub const PRESENTATION: &str = "iaps_iads_presentation";
    pub const DATA_COLLECTION_4: &str = "data_collection_4";
    pub const PEPPER_INTERVIEW: &str = "pepper_interview";

    /// `(label, minutes)`; 90 minutes in total.
    pub const LAYOUT: [(&str, u32); 15] = [
        (BASELINE, 3),
        (DATA_COLLECTION_1, 3),
        (PILL_ADMINISTRATION, 5),
        (BRUCE_STAGE_1, 3),
        (BRUCE_STAGE_2, 3),
        (BRUCE_STAGE_3, 3),
        (BRUCE_STAGE_4, 3),
        (DATA_COLLECTION_2, 3),
        (PUZZLES, 10),
        (WANDERING_DOORS, 8),
        (HOUSEHOLD_TASKS, 15),
        (DATA_COLLECTION_3, 3),
        (PRESENTATION, 12),
        (DATA_COLLECTION_4, 3),
        (PEPPER_INTERVIEW, 13),
    ];

    pub const BRUCE_STAGES: [&str; 4] = [BRUCE_STAGE_1, BRUCE_STAGE_2, BRUCE_STAGE_3, BRUCE_STAGE_4];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub activity: ActivityId,
    pub start_ms: Millis,
    pub end_ms: Millis,
}

impl Segment {
    pub fn new(activity: impl Into<ActivityId>, start_ms: Millis, end_ms: Millis) -> Self {
        Self {
            activity: activity.into(),
            start_ms,
            end_ms,
        }
    }

    pub fn duration_ms(&self) -> Millis {
        self.end_ms - self.start_ms
    }

    pub fn contains(&self, t: Millis) -> bool {
        t >= self.start_ms && t < self.end_ms
    }
}

/// Ordered, non-overlapping labeled segments of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct ActivityTimeline {
    segments: Vec<Segment>,
}

impl TryFrom<Vec<Segment>> for ActivityTimeline {
    type Error = CoreError;
    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<ActivityTimeline> for Vec<Segment> {
    fn from(t: ActivityTimeline) -> Self {
        t.segments
    }
}

impl ActivityTimeline {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(CoreError::InvalidTimeline("no segments".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.end_ms <= s.start_ms {
                return Err(CoreError::InvalidTimeline(format!(
                    "segment {i} `{}` has end {} <= start {}",
                    s.activity, s.end_ms, s.start_ms
                )));
            }
            if i > 0 && s.start_ms < segments[i - 1].end_ms {
                return Err(CoreError::InvalidTimeline(format!(
                    "segment {i} `{}` starts at {} before segment {} ends at {}",
                    s.activity,
                    s.start_ms,
                    i - 1,
                    segments[i - 1].end_ms
                )));
            }
            if segments[..i].iter().any(|p| p.activity == s.activity) {
                return Err(CoreError::InvalidTimeline(format!(
                    "activity `{}` appears more than once",
                    s.activity
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Contiguous timeline from `(label, duration_s)` pairs starting at `start_ms`.
    pub fn from_layout<'a, I>(start_ms: Millis, layout: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut t = start_ms;
        let mut segments = Vec::new();
        for (label, dur_s) in layout {
            let end = t + (dur_s * 1000.0).round() as Millis;
            segments.push(Segment::new(label, t, end));
            t = end;
        }
        Self::new(segments)
    }

    /// The 15-segment, 90-minute study timeline.
    pub fn canonical(start_ms: Millis) -> Self {
        Self::from_layout(
            start_ms,
            canonical::LAYOUT.iter().map(|(l, m)| (*l, *m as f64 * 60.0)),
        )
        .expect("canonical layout is valid")
    }

    /// True when the labels follow the canonical fifteen-activity order.
    pub fn is_canonical(&self) -> bool {
        self.segments.len() == canonical::LAYOUT.len()
            && self
                .segments
                .iter()
                .zip(canonical::LAYOUT.iter())
                .all(|(s, (l, _))| s.activity.as_str() == *l)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start_ms(&self) -> Millis {
        self.segments[0].start_ms
    }

    pub fn end_ms(&self) -> Millis {
        self.segments[self.segments.len() - 1].end_ms
    }

    pub fn get(&self, activity: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.activity.as_str() == activity)
    }

    /// Segment containing `t` under the half-open convention.
    pub fn activity_at(&self, t: Millis) -> Option<&Segment> {
        let i = self.segments.partition_point(|s| s.end_ms <= t);
        self.segments.get(i).filter(|s| s.contains(t))
    }

    pub fn shifted(&self, delta_ms: Millis) -> ActivityTimeline {
        ActivityTimeline {
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.activity.clone(), s.start_ms + delta_ms, s.end_ms + delta_ms))
                .collect(),
        }
    }
}

/// One segment's portion of a signal. `signal` is `None` when no samples
/// fall inside the segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChunk {
    pub activity: ActivityId,
    pub range: IndexRange,
    pub signal: Option<SampledSignal>,
}

/// Split `signal` along `timeline`; each chunk holds exactly the samples whose
/// timestamps lie in its `[start, end)` window.
pub fn segment_signal(signal: &SampledSignal, timeline: &ActivityTimeline) -> Result<Vec<SegmentChunk>> {
    // re-check in case the timeline was assembled without the constructor
    let timeline = ActivityTimeline::new(timeline.segments.clone())?;
    Ok(timeline
        .segments
        .iter()
        .map(|seg| {
            let start = signal.index_at_or_after(seg.start_ms);
            let end = signal.index_at_or_after(seg.end_ms);
            let range = IndexRange::new(start, end.max(start));
            let chunk = (!range.is_empty()).then(|| signal.slice(range));
            SegmentChunk {
                activity: seg.activity.clone(),
                range,
                signal: chunk,
            }
        })
        .collect())
}

/// A stream channel as stored in a session.
#[derive(Debug, Clone, PartialEq)]
pub enum Stream {
    Scalar(TimedSeries),
    ForcePlate(Vec<ForcePlateSample>),
}

impl Stream {
    fn timestamps(&self) -> Vec<Millis> {
        match self {
            Stream::Scalar(s) => s.t_ms.clone(),
            Stream::ForcePlate(v) => v.iter().map(|s| s.t).collect(),
        }
    }

    fn shift(&mut self, delta: Millis) {
        match self {
            Stream::Scalar(s) => s.t_ms.iter_mut().for_each(|t| *t += delta),
            Stream::ForcePlate(v) => v.iter_mut().for_each(|s| s.t += delta),
        }
    }
}

/// Everything recorded for one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub participant_id: u32,
    pub timeline: ActivityTimeline,
    pub streams: BTreeMap<String, Stream>,
    pub events: Vec<SensorEvent>,
    pub vitals: Vec<VitalsReading>,
    pub post_study: Option<PostStudyResponse>,
    pub presentation: Vec<PresentationResponse>,
    /// Device clock minus session epoch, keyed by channel name or event device id.
    pub clock_offsets_ms: BTreeMap<String, Millis>,
}

impl SessionRecord {
    pub fn new(participant_id: u32, timeline: ActivityTimeline) -> Self {
        Self {
            participant_id,
            timeline,
            streams: BTreeMap::new(),
            events: Vec::new(),
            vitals: Vec::new(),
            post_study: None,
            presentation: Vec::new(),
            clock_offsets_ms: BTreeMap::new(),
        }
    }

    /// Channels or devices with a timestamp outside the timeline span.
    pub fn out_of_span(&self) -> Vec<String> {
        let (lo, hi) = (self.timeline.start_ms(), self.timeline.end_ms());
        let mut out: Vec<String> = self
            .streams
            .iter()
            .filter(|(_, s)| s.timestamps().iter().any(|&t| t < lo || t > hi))
            .map(|(n, _)| n.clone())
            .collect();
        for e in &self.events {
            if (e.t < lo || e.t > hi) && !out.contains(&e.device_id) {
                out.push(e.device_id.clone());
            }
        }
        out
    }
}

/// Re-base every channel and event log onto the session epoch and verify
/// per-device monotonicity. Offsets are consumed (reset to empty).
pub fn align_timestamps(record: SessionRecord) -> Result<SessionRecord> {
    let mut record = record;
    let offsets = std::mem::take(&mut record.clock_offsets_ms);

    for (name, stream) in record.streams.iter_mut() {
        let bad = strictly_increasing_violations(&stream.timestamps());
        if !bad.is_empty() {
            return Err(CoreError::NonMonotonic {
                source_name: name.clone(),
                indices: bad,
            });
        }
        if let Some(&off) = offsets.get(name) {
            stream.shift(-off);
        }
    }

    // per-device order must be non-decreasing within the log
    let mut last: BTreeMap<&str, Millis> = BTreeMap::new();
    let mut bad = Vec::new();
    for (i, e) in record.events.iter().enumerate() {
        if let Some(&prev) = last.get(e.device_id.as_str()) {
            if e.t < prev {
                bad.push(i);
                continue;
            }
        }
        last.insert(&e.device_id, e.t);
    }
    if !bad.is_empty() {
        return Err(CoreError::NonMonotonic {
            source_name: "events".into(),
            indices: bad,
        });
    }
    for e in record.events.iter_mut() {
        if let Some(&off) = offsets.get(&e.device_id) {
            e.t -= off;
        }
    }
    // stable: equal timestamps keep log order
    record.events.sort_by_key(|e| e.t);
    Ok(record)
}
