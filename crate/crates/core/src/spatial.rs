//! Door, motion and seat-pressure event decoding with rule-based behavior
//! detection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DoorReed,
    PirMotion,
    SeatPressure,
    Light,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::DoorReed => "door_reed",
            EventKind::PirMotion => "pir_motion",
            EventKind::SeatPressure => "seat_pressure",
            EventKind::Light => "light",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "door_reed" => EventKind::DoorReed,
            "pir_motion" => EventKind::PirMotion,
            "seat_pressure" => EventKind::SeatPressure,
            "light" => EventKind::Light,
            _ => return None,
        })
    }
}

/// One record of a device log. Binary sensors report 0 or 1; seat pads
/// report volts and light sensors lux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub device_id: String,
    pub kind: EventKind,
    pub t: Millis,
    pub value: f64,
}

impl SensorEvent {
    pub fn new(device_id: impl Into<String>, kind: EventKind, t: Millis, value: f64) -> Self {
        Self {
            device_id: device_id.into(),
            kind,
            t,
            value,
        }
    }

    fn is_on(&self) -> bool {
        self.value >= 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorTransition {
    pub state: DoorState,
    pub t: Millis,
    /// Index of the sample that began the stable state, in the decoded slice.
    pub event_index: usize,
}

/// Debounced transitions of one reed switch (1 = open). The state implied by
/// the first sample is the starting state. A change is accepted once the new
/// value holds for `debounce_ms` or until the stream ends; the transition is
/// timed at the first sample of the new value.
pub fn decode_door(samples: &[SensorEvent], debounce_ms: Millis) -> Vec<DoorTransition> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let mut state = first.is_on();
    let mut out = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].is_on();
        let mut j = i + 1;
        while j < samples.len() && samples[j].is_on() == v {
            j += 1;
        }
        let stable = j == samples.len() || samples[j].t - samples[i].t >= debounce_ms;
        if stable && v != state {
            state = v;
            out.push(DoorTransition {
                state: if v { DoorState::Open } else { DoorState::Closed },
                t: samples[i].t,
                event_index: i,
            });
        }
        i = j;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    Exit,
    Wandering,
    Seated,
}

impl BehaviorKind {
    pub fn label(&self) -> &'static str {
        match self {
            BehaviorKind::Exit => "exit",
            BehaviorKind::Wandering => "wandering",
            BehaviorKind::Seated => "seated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEpisode {
    pub kind: BehaviorKind,
    pub start: Millis,
    pub end: Millis,
    /// Indices of the contributing events in the log given to the detector.
    pub evidence: Vec<usize>,
}

/// A door opening with no interior motion during `(t_open, t_open + window]`
/// is an exit anchored at the opening. `motion` times are in any order.
pub fn detect_exit(doors: &[DoorTransition], motion: &[Millis], quiet_window_ms: Millis) -> Vec<BehaviorEpisode> {
    let mut sorted = motion.to_vec();
    sorted.sort_unstable();
    doors
        .iter()
        .filter(|d| d.state == DoorState::Open)
        .filter(|d| {
            let k = sorted.partition_point(|&t| t <= d.t);
            sorted.get(k).map_or(true, |&t| t > d.t + quiet_window_ms)
        })
        .map(|d| BehaviorEpisode {
            kind: BehaviorKind::Exit,
            start: d.t,
            end: d.t + quiet_window_ms,
            evidence: vec![d.event_index],
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WanderingParams {
    pub min_transitions: usize,
    pub window_s: f64,
    pub dwell_s: f64,
}

impl Default for WanderingParams {
    fn default() -> Self {
        Self {
            min_transitions: 4,
            window_s: 120.0,
            dwell_s: 20.0,
        }
    }
}

/// Zone changes chained while each stay is shorter than the dwell limit. A
/// chain holding `min_transitions` changes inside `window_s` is one episode
/// from its first to its last change. Only motion events (value 1) from
/// mapped devices count.
pub fn detect_wandering(
    pir: &[SensorEvent],
    zone_map: &BTreeMap<String, String>,
    params: &WanderingParams,
) -> Vec<BehaviorEpisode> {
    let mut transitions: Vec<(Millis, usize)> = Vec::new();
    let mut zone: Option<&str> = None;
    for (i, e) in pir.iter().enumerate() {
        if e.kind != EventKind::PirMotion || !e.is_on() {
            continue;
        }
        let Some(z) = zone_map.get(&e.device_id) else { continue };
        if let Some(prev) = zone {
            if prev != z {
                transitions.push((e.t, i));
            }
        }
        zone = Some(z);
    }

    let dwell = (params.dwell_s * 1000.0).round() as Millis;
    let window = (params.window_s * 1000.0).round() as Millis;
    let need = params.min_transitions.max(1);
    let mut out = Vec::new();
    let mut s = 0;
    while s < transitions.len() {
        let mut e = s + 1;
        while e < transitions.len() && transitions[e].0 - transitions[e - 1].0 < dwell {
            e += 1;
        }
        let chain = &transitions[s..e];
        let dense = chain.len() >= need && chain.windows(need).any(|w| w[need - 1].0 - w[0].0 <= window);
        if dense {
            out.push(BehaviorEpisode {
                kind: BehaviorKind::Wandering,
                start: chain[0].0,
                end: chain[chain.len() - 1].0,
                evidence: chain.iter().map(|c| c.1).collect(),
            });
        }
        s = e;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeatParams {
    /// Pad voltage with the resident seated.
    pub calibrated_v: f64,
    pub on_fraction: f64,
    pub off_fraction: f64,
}

impl Default for SeatParams {
    fn default() -> Self {
        Self {
            calibrated_v: 3.0,
            on_fraction: 0.6,
            off_fraction: 0.4,
        }
    }
}

/// Seated intervals by hysteresis: on at the first sample at or above the
/// on-threshold, off at the first later sample below the off-threshold, or
/// at the last sample if still seated.
pub fn seat_occupancy(samples: &[SensorEvent], params: &SeatParams) -> Vec<BehaviorEpisode> {
    let on = params.on_fraction * params.calibrated_v;
    let off = params.off_fraction * params.calibrated_v;
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, s) in samples.iter().enumerate() {
        match start {
            None if s.value >= on => start = Some(i),
            Some(b) if s.value < off => {
                out.push(BehaviorEpisode {
                    kind: BehaviorKind::Seated,
                    start: samples[b].t,
                    end: s.t,
                    evidence: vec![b, i],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        let last = samples.len() - 1;
        out.push(BehaviorEpisode {
            kind: BehaviorKind::Seated,
            start: samples[b].t,
            end: samples[last].t,
            evidence: if b == last { vec![b] } else { vec![b, last] },
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialConfig {
    pub debounce_ms: Millis,
    pub quiet_window_s: f64,
    pub wandering: WanderingParams,
    pub seat: SeatParams,
    /// PIR device to zone label. Unmapped PIR devices still count as
    /// interior motion for exit detection.
    pub zone_map: BTreeMap<String, String>,
    /// Door devices that lead outside; all doors when empty.
    pub exit_doors: Vec<String>,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            debounce_ms: 200,
            quiet_window_s: 30.0,
            wandering: WanderingParams::default(),
            seat: SeatParams::default(),
            zone_map: BTreeMap::new(),
            exit_doors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialReport {
    /// Sorted by start, then kind.
    pub episodes: Vec<BehaviorEpisode>,
    pub door_transitions: BTreeMap<String, Vec<DoorTransition>>,
}

impl SpatialReport {
    pub fn of_kind(&self, kind: BehaviorKind) -> impl Iterator<Item = &BehaviorEpisode> {
        self.episodes.iter().filter(move |e| e.kind == kind)
    }
}

/// Run every detector over a merged, time-ordered log. Evidence and
/// transition indices refer to positions in `events`.
pub fn detect_behaviors(events: &[SensorEvent], config: &SpatialConfig) -> SpatialReport {
    let mut by_device: BTreeMap<(&str, EventKind), Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        by_device.entry((&e.device_id, e.kind)).or_default().push(i);
    }
    let gather = |idx: &[usize]| -> Vec<SensorEvent> { idx.iter().map(|&i| events[i].clone()).collect() };

    let mut report = SpatialReport::default();
    let mut exits_from = Vec::new();
    for ((device, kind), idx) in &by_device {
        match kind {
            EventKind::DoorReed => {
                let mut tr = decode_door(&gather(idx), config.debounce_ms);
                tr.iter_mut().for_each(|t| t.event_index = idx[t.event_index]);
                if config.exit_doors.is_empty() || config.exit_doors.iter().any(|d| d == device) {
                    exits_from.extend(tr.iter().copied());
                }
                report.door_transitions.insert(device.to_string(), tr);
            }
            EventKind::SeatPressure => {
                for mut ep in seat_occupancy(&gather(idx), &config.seat) {
                    ep.evidence.iter_mut().for_each(|k| *k = idx[*k]);
                    report.episodes.push(ep);
                }
            }
            _ => {}
        }
    }
    exits_from.sort_by_key(|d| (d.t, d.event_index));

    let motion: Vec<Millis> = events
        .iter()
        .filter(|e| e.kind == EventKind::PirMotion && e.is_on())
        .map(|e| e.t)
        .collect();
    let window = (config.quiet_window_s * 1000.0).round() as Millis;
    report.episodes.extend(detect_exit(&exits_from, &motion, window));
    report
        .episodes
        .extend(detect_wandering(events, &config.zone_map, &config.wandering));
    report
        .episodes
        .sort_by(|a, b| (a.start, a.kind, a.end).cmp(&(b.start, b.kind, b.end)));
    report
}
