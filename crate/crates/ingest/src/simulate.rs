//! Deterministic synthetic corpus generator.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the scenario seed,
//! the participant and the modality, so changing one modality's settings
//! leaves the others' data untouched.

use std::collections::BTreeMap;
use std::path::Path;

use carespace_core::eda::Bateman;
use carespace_core::forceplate::{ForcePlateSample, PlateId, BRUCE_PROTOCOL};
use carespace_core::model::canonical;
use carespace_core::spatial::{EventKind, SensorEvent};
use carespace_core::surveys::{ActivityScores, PillCondition, PostStudyResponse, PresentationResponse};
use carespace_core::vitals::{format_vitals_table, VitalsReading, VitalsStage};
use carespace_core::{ActivityTimeline, Millis, TimedSeries, Unit};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{IngestError, Result};
use crate::format::{self, SCHEMA_VERSION};
use crate::scenario::ScenarioSpec;
use crate::session::{ChannelDescriptor, ChannelKind, CorpusManifest, RoomLayout, SessionManifest, CORPUS_MANIFEST};
use crate::store::{store_results, BundleManifest};

pub const SESSION_TRUTH: &str = "truth.json";
pub const CORPUS_TRUTH: &str = "truth.json";

pub const EXIT_DOOR: &str = "door_main";
pub const CLOSET_DOOR: &str = "door_closet";
pub const SEAT_PAD: &str = "chair_living";
pub const LIGHT_SENSOR: &str = "light_living";
pub const ZONES: [&str; 4] = ["living", "kitchen", "bedroom", "hall"];
pub const PRESENTATION_STIMULI: [&str; 6] = [
    "iaps_positive",
    "iaps_neutral",
    "iaps_negative",
    "iads_positive",
    "iads_neutral",
    "iads_negative",
];

const SEAT_RATE_MS: Millis = 1000;
const LIGHT_RATE_MS: Millis = 60_000;

#[derive(Debug, Clone, Copy)]
enum Modality {
    Eda = 1,
    Dropout = 2,
    ForcePlate = 3,
    Vitals = 4,
    Surveys = 5,
    Spatial = 6,
    Clocks = 7,
    Presentation = 8,
}

fn rng_for(seed: u64, participant: u32, m: Modality) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(participant) * 16 + m as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScr {
    pub onset_ms: Millis,
    pub peak_ms: Millis,
    pub amplitude_us: f64,
    pub activity: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthInterval {
    pub start_ms: Millis,
    pub end_ms: Millis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTruth {
    pub participant_id: u32,
    pub tau1_s: f64,
    pub tau2_s: f64,
    pub tonic_levels_us: BTreeMap<String, f64>,
    pub max_tonic_activity: String,
    pub scrs: Vec<TruthScr>,
    /// Spans with no EDA samples.
    pub eda_gaps: Vec<TruthInterval>,
    /// Heel-to-toe COP excursion per treadmill stage.
    pub stage_excursion_m: Vec<f64>,
    /// Start is the debounced door opening; end is the re-entry opening.
    pub exits: Vec<TruthInterval>,
    /// First to last zone change of each episode.
    pub wandering: Vec<TruthInterval>,
    pub seated: Vec<TruthInterval>,
    pub condition: PillCondition,
    pub clock_offsets_ms: BTreeMap<String, Millis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusTruth {
    pub seed: u64,
    pub participants: Vec<u32>,
    /// Participants with the planted interview maximum.
    pub pepper_max: Vec<u32>,
}

/// Generated corpus: the written file set plus the parsed truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCorpus {
    pub manifest: CorpusManifest,
    pub truth: CorpusTruth,
    pub sessions: Vec<SessionTruth>,
    pub bundle: BundleManifest,
}

pub fn session_dir(participant: u32) -> String {
    format!("sessions/p{participant:03}")
}

pub fn room_layout() -> RoomLayout {
    RoomLayout {
        zone_map: ZONES.iter().map(|z| (format!("pir_{z}"), z.to_string())).collect(),
        exit_doors: vec![EXIT_DOOR.to_string()],
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s.into_bytes()
}

/// Render every corpus file in memory, keyed by relative path.
pub fn render_corpus(spec: &ScenarioSpec) -> Result<(BTreeMap<String, Vec<u8>>, CorpusTruth, Vec<SessionTruth>)> {
    spec.validate()?;
    let ids: Vec<u32> = (1..=spec.participants).collect();

    let mut corpus_rng = rng_for(spec.seed, 0, Modality::Eda);
    let mut shuffled = ids.clone();
    shuffled.shuffle(&mut corpus_rng);
    let mut pepper_max: Vec<u32> = shuffled[..spec.pepper_max_participants as usize].to_vec();
    pepper_max.sort_unstable();
    shuffled.shuffle(&mut corpus_rng);
    let friendly: Vec<u32> = shuffled[..ids.len() / 2].to_vec();

    let mut files = BTreeMap::new();
    let mut truths = Vec::new();
    let mut vitals = Vec::new();
    let mut post = Vec::new();
    let mut presentation = Vec::new();
    let mut sessions = Vec::new();

    for &pid in &ids {
        let condition = if friendly.contains(&pid) {
            PillCondition::Friendly
        } else {
            PillCondition::Authoritative
        };
        let (session_files, truth) = render_session(spec, pid, pepper_max.contains(&pid), condition)?;
        let dir = session_dir(pid);
        for (name, bytes) in session_files {
            files.insert(format!("{dir}/{name}"), bytes);
        }
        sessions.push(format!("{dir}/manifest.json"));
        truths.push(truth);
        vitals.extend(simulate_vitals(spec, pid));
        post.push(simulate_post_study(spec, pid, condition));
        presentation.extend(simulate_presentation(spec, pid));
    }

    files.insert("vitals.csv".into(), format_vitals_table(&vitals).into_bytes());
    files.insert("post_study.csv".into(), format::format_post_study(&post).into_bytes());
    files.insert("presentation.csv".into(), format::format_presentation(&presentation).into_bytes());
    let manifest = CorpusManifest {
        schema_version: SCHEMA_VERSION,
        seed: Some(spec.seed),
        sessions,
        vitals: Some("vitals.csv".into()),
        post_study: Some("post_study.csv".into()),
        presentation: Some("presentation.csv".into()),
        room: room_layout(),
    };
    files.insert(CORPUS_MANIFEST.into(), json_bytes(&manifest));
    let truth = CorpusTruth {
        seed: spec.seed,
        participants: ids,
        pepper_max,
    };
    files.insert(CORPUS_TRUTH.into(), json_bytes(&truth));
    Ok((files, truth, truths))
}

/// Generate the corpus described by `spec` into `out_dir`, replacing any
/// previous contents atomically.
pub fn simulate_corpus(spec: &ScenarioSpec, out_dir: &Path) -> Result<SimulatedCorpus> {
    let (files, truth, sessions) = render_corpus(spec)?;
    let manifest: CorpusManifest =
        serde_json::from_slice(&files[CORPUS_MANIFEST]).expect("manifest was just rendered");
    let bundle = store_results(&files, out_dir)?;
    Ok(SimulatedCorpus {
        manifest,
        truth,
        sessions,
        bundle,
    })
}

pub fn read_session_truth(session_dir: &Path) -> Result<SessionTruth> {
    let path = session_dir.join(SESSION_TRUTH);
    let text = format::read_text(&path)?;
    serde_json::from_str(&text).map_err(|e| IngestError::Schema {
        path,
        message: e.to_string(),
    })
}

pub fn read_corpus_truth(corpus_dir: &Path) -> Result<CorpusTruth> {
    let path = corpus_dir.join(CORPUS_TRUTH);
    let text = format::read_text(&path)?;
    serde_json::from_str(&text).map_err(|e| IngestError::Schema {
        path,
        message: e.to_string(),
    })
}

fn render_session(
    spec: &ScenarioSpec,
    pid: u32,
    pepper_max: bool,
    condition: PillCondition,
) -> Result<(BTreeMap<String, Vec<u8>>, SessionTruth)> {
    let timeline = ActivityTimeline::canonical(0);
    let mut clocks = rng_for(spec.seed, pid, Modality::Clocks);
    let max_off = spec.clock_offset_max_ms;
    let mut offset = || if max_off == 0 { 0 } else { clocks.random_range(-max_off..=max_off) };
    let mut offsets = BTreeMap::new();
    offsets.insert("eda".to_string(), offset());
    offsets.insert("forceplate_left".to_string(), offset());
    offsets.insert("forceplate_right".to_string(), offset());
    offsets.insert("events".to_string(), offset());

    let eda = simulate_eda(spec, pid, pepper_max, &timeline);
    let mut files = BTreeMap::new();
    let rate = spec.eda.sample_rate_hz;
    let mut channels = vec![ChannelDescriptor {
        name: "eda".into(),
        kind: ChannelKind::Eda,
        rate_hz: Some(rate),
        path: "eda.csv".into(),
        clock_offset_ms: offsets["eda"],
        plate: None,
        dz_m: None,
    }];
    files.insert("eda.csv".to_string(), format::format_scalar(&shift_series(&eda.series, offsets["eda"])).into_bytes());

    let mut stage_excursion = Vec::new();
    if spec.forceplate.enabled {
        let (plates, excursion) = simulate_forceplates(spec, pid, &timeline);
        stage_excursion = excursion;
        for (plate, samples) in plates {
            let name = format!("forceplate_{}", plate.as_str());
            let off = offsets[&name];
            let shifted: Vec<ForcePlateSample> = samples.iter().map(|s| ForcePlateSample { t: s.t + off, ..*s }).collect();
            let file = format!("{name}.csv");
            files.insert(file.clone(), format::format_forceplate(&shifted).into_bytes());
            channels.push(ChannelDescriptor {
                name,
                kind: ChannelKind::ForcePlate,
                rate_hz: Some(spec.forceplate.sample_rate_hz),
                path: file,
                clock_offset_ms: off,
                plate: Some(plate),
                dz_m: Some(spec.forceplate.dz_m),
            });
        }
    }

    let spatial = if spec.spatial.enabled {
        simulate_spatial(spec, pid, &timeline)
    } else {
        SpatialScript::default()
    };
    let off = offsets["events"];
    let shifted: Vec<SensorEvent> = spatial
        .events
        .iter()
        .map(|e| SensorEvent { t: e.t + off, ..e.clone() })
        .collect();
    files.insert("events.csv".to_string(), format::format_events(&shifted).into_bytes());
    channels.push(ChannelDescriptor {
        name: "events".into(),
        kind: ChannelKind::Events,
        rate_hz: None,
        path: "events.csv".into(),
        clock_offset_ms: off,
        plate: None,
        dz_m: None,
    });

    let manifest = SessionManifest {
        schema_version: SCHEMA_VERSION,
        participant_id: pid,
        custom_timeline: false,
        timeline,
        channels,
        config_overrides: Default::default(),
    };
    files.insert("manifest.json".to_string(), json_bytes(&manifest));

    let truth = SessionTruth {
        participant_id: pid,
        tau1_s: eda.kernel.tau1,
        tau2_s: eda.kernel.tau2,
        tonic_levels_us: eda.levels,
        max_tonic_activity: eda.max_activity,
        scrs: eda.scrs,
        eda_gaps: eda.gaps,
        stage_excursion_m: stage_excursion,
        exits: spatial.exits,
        wandering: spatial.wandering,
        seated: spatial.seated,
        condition,
        clock_offsets_ms: offsets,
    };
    files.insert(SESSION_TRUTH.to_string(), json_bytes(&truth));
    Ok((files, truth))
}

fn shift_series(s: &TimedSeries, off: Millis) -> TimedSeries {
    TimedSeries {
        t_ms: s.t_ms.iter().map(|t| t + off).collect(),
        values: s.values.clone(),
        unit: s.unit,
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.1 > r.0 {
        rng.random_range(r.0..r.1)
    } else {
        r.0
    }
}

struct EdaTruth {
    series: TimedSeries,
    kernel: Bateman,
    levels: BTreeMap<String, f64>,
    max_activity: String,
    scrs: Vec<TruthScr>,
    gaps: Vec<TruthInterval>,
}

/// Tonic level at `t`: per-activity plateaus joined by raised-cosine ramps
/// centred on each boundary.
fn tonic_at(t: Millis, timeline: &ActivityTimeline, levels: &[f64], width_ms: f64) -> f64 {
    let segs = timeline.segments();
    let k = segs
        .iter()
        .position(|s| t < s.end_ms)
        .unwrap_or(segs.len() - 1);
    let half = width_ms / 2.0;
    let (prev, next, b) = if k > 0 && ((t - segs[k].start_ms) as f64) < half {
        (levels[k - 1], levels[k], segs[k].start_ms)
    } else if k + 1 < segs.len() && ((segs[k].end_ms - t) as f64) <= half {
        (levels[k], levels[k + 1], segs[k].end_ms)
    } else {
        return levels[k];
    };
    let u = ((t - b) as f64 + half) / width_ms;
    let w = 0.5 - 0.5 * (std::f64::consts::PI * u).cos();
    prev + (next - prev) * w
}

fn simulate_eda(spec: &ScenarioSpec, pid: u32, pepper_max: bool, timeline: &ActivityTimeline) -> EdaTruth {
    let e = &spec.eda;
    let mut rng = rng_for(spec.seed, pid, Modality::Eda);
    let tau1 = uniform(&mut rng, e.tau1_range_s);
    let tau2 = uniform(&mut rng, e.tau2_range_s);
    let kernel = Bateman::new(tau1, tau2).expect("validated tau ranges");

    let segs = timeline.segments();
    let base = uniform(&mut rng, e.tonic_base_range_us);
    let mut offsets: Vec<f64> = segs.iter().map(|_| rng.random_range(0.0..=e.tonic_spread_us)).collect();
    let pepper = segs
        .iter()
        .position(|s| s.activity.as_str() == canonical::PEPPER_INTERVIEW)
        .expect("canonical timeline");
    let target = if pepper_max {
        pepper
    } else {
        let k = rng.random_range(0..segs.len() - 1);
        if k >= pepper {
            k + 1
        } else {
            k
        }
    };
    let runner_up = offsets
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    offsets[target] = runner_up + e.max_margin_us;
    let levels: Vec<f64> = offsets.iter().map(|o| base + o).collect();

    let period = (1000.0 / e.sample_rate_hz).round() as Millis;
    let end = timeline.end_ms();
    let sep = (e.min_scr_separation_s * 1000.0).round() as Millis;
    let margin = (e.boundary_margin_s * 1000.0).round() as Millis;
    let edge = (e.edge_margin_s * 1000.0).round() as Millis;
    let mut scrs: Vec<TruthScr> = Vec::new();
    let mut last = Millis::MIN / 2;
    for seg in segs {
        let rate = spec.script(seg.activity.as_str()).scr_rate_per_min;
        if rate <= 0.0 {
            continue;
        }
        let extra_ms = (60_000.0 / rate - sep as f64).max(1000.0);
        let gap = Exp::new(1.0 / extra_ms).expect("positive rate");
        let lo = (seg.start_ms + margin).max(edge);
        let hi = (seg.end_ms - margin).min(end - edge);
        let mut t = lo as f64 + gap.sample(&mut rng);
        loop {
            let earliest = t.max(lo as f64).max((last + sep) as f64);
            let onset = (earliest / period as f64).ceil() as Millis * period;
            if onset >= hi {
                break;
            }
            let amplitude = uniform(&mut rng, e.scr_amplitude_range_us);
            scrs.push(TruthScr {
                onset_ms: onset,
                peak_ms: onset + (kernel.peak_time() * 1000.0).round() as Millis,
                amplitude_us: amplitude,
                activity: seg.activity.as_str().to_string(),
            });
            last = onset;
            t = (onset + sep) as f64 + gap.sample(&mut rng);
        }
    }

    let n = (end / period) as usize;
    let width_ms = e.transition_s * 1000.0;
    let mut values: Vec<f64> = (0..n)
        .map(|i| tonic_at(i as Millis * period, timeline, &levels, width_ms))
        .collect();
    let peak = kernel.peak_value();
    let reach = ((12.0 * tau1) * 1000.0) as Millis / period;
    for s in &scrs {
        let i0 = (s.onset_ms / period) as usize;
        for i in i0..(i0 + reach as usize + 1).min(n) {
            let dt = (i as Millis * period - s.onset_ms) as f64 / 1000.0;
            values[i] += s.amplitude_us * kernel.eval(dt) / peak;
        }
    }
    if e.noise_sd_us > 0.0 {
        let noise = Normal::new(0.0, e.noise_sd_us).expect("validated noise");
        for v in values.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }

    let gaps = plan_gaps(spec, pid, end);
    let mut t_ms = Vec::with_capacity(n);
    let mut kept = Vec::with_capacity(n);
    for (i, v) in values.into_iter().enumerate() {
        let t = i as Millis * period;
        if gaps.iter().any(|g| t >= g.start_ms && t < g.end_ms) {
            continue;
        }
        t_ms.push(t);
        kept.push(v);
    }

    let max_activity = segs[target].activity.as_str().to_string();
    EdaTruth {
        series: TimedSeries {
            t_ms,
            values: kept,
            unit: Unit::Microsiemens,
        },
        kernel,
        levels: segs
            .iter()
            .zip(&levels)
            .map(|(s, l)| (s.activity.as_str().to_string(), *l))
            .collect(),
        max_activity,
        scrs,
        gaps,
    }
}

fn plan_gaps(spec: &ScenarioSpec, pid: u32, end: Millis) -> Vec<TruthInterval> {
    let d = &spec.dropout;
    let mut rng = rng_for(spec.seed, pid, Modality::Dropout);
    let mut gaps: Vec<TruthInterval> = d
        .forced
        .iter()
        .filter(|g| g.participant == pid)
        .map(|g| {
            let s = (g.start_s * 1000.0).round() as Millis;
            TruthInterval {
                start_ms: s,
                end_ms: s + (g.length_s * 1000.0).round() as Millis,
            }
        })
        .collect();
    if d.gaps_per_hour > 0.0 {
        let arrivals = Exp::new(d.gaps_per_hour / 3_600_000.0).expect("positive rate");
        let mut t = arrivals.sample(&mut rng);
        while (t as Millis) < end {
            let start = t as Millis;
            let len = (uniform(&mut rng, d.gap_length_s) * 1000.0).round() as Millis;
            let g = TruthInterval {
                start_ms: start,
                end_ms: (start + len).min(end),
            };
            let clear = gaps
                .iter()
                .all(|o| g.end_ms + 1000 < o.start_ms || o.end_ms + 1000 < g.start_ms);
            if clear {
                gaps.push(g);
            }
            t += len as f64 + arrivals.sample(&mut rng);
        }
    }
    gaps.sort_by_key(|g| g.start_ms);
    gaps
}

fn simulate_forceplates(
    spec: &ScenarioSpec,
    pid: u32,
    timeline: &ActivityTimeline,
) -> (Vec<(PlateId, Vec<ForcePlateSample>)>, Vec<f64>) {
    let f = &spec.forceplate;
    let mut rng = rng_for(spec.seed, pid, Modality::ForcePlate);
    let weight = uniform(&mut rng, f.body_weight_range_n);
    let phase0: f64 = rng.random_range(0.0..1.0);
    let jitter = Normal::new(0.0, f.excursion_jitter_m.max(f64::MIN_POSITIVE)).expect("finite");
    let cop_noise = Normal::new(0.0, f.cop_noise_m.max(f64::MIN_POSITIVE)).expect("finite");
    let couple = Normal::new(0.0, f.couple_noise_nm.max(f64::MIN_POSITIVE)).expect("finite");
    let swing = Normal::new(0.0, 1.5).expect("finite");
    let period = (1000.0 / f.sample_rate_hz).round() as Millis;
    let stance = 0.62;
    let dz = f.dz_m;

    let stages: Vec<_> = canonical::BRUCE_STAGES
        .iter()
        .zip(BRUCE_PROTOCOL.iter())
        .map(|(label, st)| {
            let seg = timeline.get(label).expect("canonical timeline has every stage");
            let a = (f.excursion_base_m + f.excursion_per_mps * st.speed_mps + jitter.sample(&mut rng)).max(0.01);
            (seg.start_ms, seg.end_ms, st.speed_mps, a)
        })
        .collect();

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut phase = phase0;
    for &(start, end, speed, a) in &stages {
        let cadence = 0.9 + 0.5 * speed;
        let mut t = start;
        while t < end {
            for (offset, side, out) in [(0.0, -1.0, &mut left), (0.5, 1.0, &mut right)] {
                let p = (phase + offset).fract();
                let sample = if p < stance {
                    let s = p / stance;
                    let fz = weight * (std::f64::consts::PI * s).sin().powf(0.7)
                        * (1.0 + 0.08 * (2.0 * std::f64::consts::PI * s).sin());
                    let xp = a * (s - 0.5) + cop_noise.sample(&mut rng);
                    let yp = side * 0.12 * a * (std::f64::consts::PI * s).sin() + cop_noise.sample(&mut rng);
                    let fx = 0.12 * fz * (std::f64::consts::PI * s).cos();
                    let fy = 0.03 * fz * (2.0 * std::f64::consts::PI * s).sin();
                    let tz = couple.sample(&mut rng);
                    ForcePlateSample {
                        t,
                        fx,
                        fy,
                        fz,
                        mx: yp * fz - fy * dz,
                        my: fx * dz - xp * fz,
                        mz: tz + xp * fy - yp * fx,
                    }
                } else {
                    ForcePlateSample {
                        t,
                        fx: swing.sample(&mut rng) * 0.3,
                        fy: swing.sample(&mut rng) * 0.3,
                        fz: swing.sample(&mut rng),
                        mx: swing.sample(&mut rng) * 0.03,
                        my: swing.sample(&mut rng) * 0.03,
                        mz: swing.sample(&mut rng) * 0.03,
                    }
                };
                out.push(sample);
            }
            phase = (phase + cadence * period as f64 / 1000.0).fract();
            t += period;
        }
    }
    let excursion = stages.iter().map(|s| s.3).collect();
    (vec![(PlateId::Left, left), (PlateId::Right, right)], excursion)
}

#[derive(Debug, Clone, Default)]
struct SpatialScript {
    events: Vec<SensorEvent>,
    exits: Vec<TruthInterval>,
    wandering: Vec<TruthInterval>,
    seated: Vec<TruthInterval>,
}

/// Reed samples for one door movement; returns the debounced transition time.
fn door_move(rng: &mut ChaCha8Rng, out: &mut Vec<SensorEvent>, door: &str, t: Millis, open: bool, chatter: bool) -> Millis {
    let (on, off) = if open { (1.0, 0.0) } else { (0.0, 1.0) };
    out.push(SensorEvent::new(door, EventKind::DoorReed, t, on));
    if !chatter {
        return t;
    }
    let a = rng.random_range(10..40);
    let b = a + rng.random_range(10..60);
    out.push(SensorEvent::new(door, EventKind::DoorReed, t + a, off));
    out.push(SensorEvent::new(door, EventKind::DoorReed, t + b, on));
    t + b
}

fn simulate_spatial(spec: &ScenarioSpec, pid: u32, timeline: &ActivityTimeline) -> SpatialScript {
    let mut rng = rng_for(spec.seed, pid, Modality::Spatial);
    let chatter = spec.spatial.chatter;
    let distractors = spec.spatial.distractors;
    let s = |label: &str| timeline.get(label).expect("canonical").start_ms;
    let sec = |x: f64| (x * 1000.0).round() as Millis;
    let end = timeline.end_ms();
    let w = s(canonical::WANDERING_DOORS);
    let h = s(canonical::HOUSEHOLD_TASKS);
    let p = s(canonical::PUZZLES);

    let mut script = SpatialScript::default();
    let mut doors = Vec::new();
    for d in [EXIT_DOOR, CLOSET_DOOR] {
        doors.push(SensorEvent::new(d, EventKind::DoorReed, 0, 0.0));
    }

    // presence change points; None while outside
    let mut moves: Vec<(Millis, Option<&str>)> = vec![(0, Some("living"))];

    // wandering burst
    let mut t = w + sec(60.0);
    let mut zone = "living";
    let n = rng.random_range(6..=8);
    let mut changes = Vec::new();
    for _ in 0..n {
        let choices: Vec<&str> = ZONES.iter().copied().filter(|z| *z != zone).collect();
        zone = choices[rng.random_range(0..choices.len())];
        moves.push((t, Some(zone)));
        changes.push(t);
        t += rng.random_range(80..150) * 100;
    }
    script.wandering.push(TruthInterval {
        start_ms: changes[0],
        end_ms: *changes.last().expect("at least one change"),
    });
    moves.push((w + sec(240.0), Some("hall")));

    // exit and re-entry through the main door
    let open_raw = w + sec(290.0) + rng.random_range(0..100) * 100;
    let away = rng.random_range(600..1200) * 100;
    let reentry_raw = open_raw + away;
    let open = door_move(&mut rng, &mut doors, EXIT_DOOR, open_raw, true, chatter);
    door_move(&mut rng, &mut doors, EXIT_DOOR, open_raw + 3000, false, chatter);
    let back = door_move(&mut rng, &mut doors, EXIT_DOOR, reentry_raw, true, chatter);
    door_move(&mut rng, &mut doors, EXIT_DOOR, reentry_raw + 4000, false, chatter);
    script.exits.push(TruthInterval {
        start_ms: open,
        end_ms: back,
    });
    moves.push((open_raw, None));
    moves.push((reentry_raw + 2000, Some("hall")));
    moves.push((w + sec(440.0), Some("living")));

    if distractors {
        door_move(&mut rng, &mut doors, CLOSET_DOOR, w + sec(20.0), true, chatter);
        door_move(&mut rng, &mut doors, CLOSET_DOOR, w + sec(28.0), false, chatter);
    }

    // household routine with a non-exit opening of the main door
    moves.push((h + sec(60.0), Some("kitchen")));
    moves.push((h + sec(200.0), Some("living")));
    moves.push((h + sec(450.0), Some("hall")));
    if distractors {
        door_move(&mut rng, &mut doors, EXIT_DOOR, h + sec(500.0), true, chatter);
        door_move(&mut rng, &mut doors, EXIT_DOOR, h + sec(506.0), false, chatter);
    }
    moves.push((h + sec(560.0), Some("living")));
    moves.push((h + sec(700.0), Some("kitchen")));
    moves.push((h + sec(800.0), Some("living")));
    moves.sort_by_key(|m| m.0);

    let mut events = Vec::new();
    for (k, &(start, z)) in moves.iter().enumerate() {
        let stop = moves.get(k + 1).map_or(end, |m| m.0);
        let Some(z) = z else { continue };
        let device = format!("pir_{z}");
        let mut t = start;
        while t < stop {
            events.push(SensorEvent::new(device.as_str(), EventKind::PirMotion, t, 1.0));
            t += rng.random_range(40..70) * 100;
        }
    }

    // seat pad: two sittings plus sub-threshold loads
    let mut sittings = vec![
        (p + sec(30.0), p + sec(30.0) + rng.random_range(240..400) * 1000),
        (h + sec(260.0), h + sec(260.0) + rng.random_range(60..120) * 1000),
    ];
    sittings.sort_unstable();
    let mut loads: Vec<(Millis, Millis, f64)> = Vec::new();
    if distractors {
        let bag = h + sec(650.0);
        loads.push((bag, bag + rng.random_range(20..40) * 1000, rng.random_range(1.3..1.7)));
        let lean = p + sec(500.0);
        loads.push((lean, lean + 3000, 1.4));
    }
    let seat_noise = Normal::<f64>::new(0.0, 0.05).expect("finite");
    let mut t = 0;
    while t < end {
        let v = if sittings.iter().any(|&(a, b)| t >= a && t < b) {
            (3.0 + seat_noise.sample(&mut rng)).max(2.5)
        } else if let Some(l) = loads.iter().find(|&&(a, b, _)| t >= a && t < b) {
            l.2 + 0.2 * seat_noise.sample(&mut rng)
        } else {
            (0.05 + 0.4 * seat_noise.sample(&mut rng)).abs()
        };
        events.push(SensorEvent::new(SEAT_PAD, EventKind::SeatPressure, t, v));
        t += SEAT_RATE_MS;
    }
    script.seated = sittings
        .iter()
        .map(|&(a, b)| TruthInterval { start_ms: a, end_ms: b })
        .collect();

    if distractors {
        let lux = Normal::<f64>::new(300.0, 10.0).expect("finite");
        let mut t = 0;
        while t < end {
            events.push(SensorEvent::new(LIGHT_SENSOR, EventKind::Light, t, lux.sample(&mut rng).round()));
            t += LIGHT_RATE_MS;
        }
    }

    events.extend(doors);
    events.sort_by(|a, b| (a.t, &a.device_id).cmp(&(b.t, &b.device_id)));
    script.events = events;
    script
}

fn clamp_round(x: f64, lo: f64, hi: f64) -> f64 {
    x.round().clamp(lo, hi)
}

fn simulate_vitals(spec: &ScenarioSpec, pid: u32) -> Vec<VitalsReading> {
    let mut rng = rng_for(spec.seed, pid, Modality::Vitals);
    let g = |rng: &mut ChaCha8Rng, m: f64, s: f64| Normal::new(m, s).expect("finite").sample(rng);
    let sys0 = g(&mut rng, 115.0, 14.0);
    let dia0 = g(&mut rng, 72.0, 9.0);
    let pulse0 = g(&mut rng, 80.0, 12.0);
    let effects = [(0.0, 0.0, 0.0), (8.0, 3.0, 8.0), (3.0, 1.0, -3.0), (1.0, 0.0, -5.0)];
    let miss = spec.vitals.missing_probability;
    VitalsStage::ALL
        .iter()
        .zip(effects)
        .map(|(&stage, (ds, dd, dp))| {
            let sys = clamp_round(sys0 + ds + g(&mut rng, 0.0, 4.0), 70.0, 220.0);
            let dia = clamp_round(dia0 + dd + g(&mut rng, 0.0, 3.0), 40.0, sys - 10.0);
            let pulse = clamp_round(pulse0 + dp + g(&mut rng, 0.0, 4.0), 40.0, 200.0);
            let bp_missing = rng.random_bool(miss);
            let pulse_missing = rng.random_bool(miss);
            VitalsReading {
                participant_id: pid,
                stage,
                systolic: (!bp_missing).then_some(sys),
                diastolic: (!bp_missing).then_some(dia),
                pulse: (!pulse_missing).then_some(pulse),
            }
        })
        .collect()
}

fn simulate_post_study(spec: &ScenarioSpec, pid: u32, condition: PillCondition) -> PostStudyResponse {
    let mut rng = rng_for(spec.seed, pid, Modality::Surveys);
    let miss = spec.surveys.missing_probability;
    let mut scores = |v: (u8, u8), a: (u8, u8), c: (u8, u8)| {
        let mut pick = |r: (u8, u8)| {
            let x = rng.random_range(r.0..=r.1);
            (!rng.random_bool(miss)).then_some(x)
        };
        ActivityScores {
            valence: pick(v),
            arousal: pick(a),
            control: pick(c),
        }
    };
    let pill = match condition {
        PillCondition::Friendly => scores((1, 2), (1, 3), (1, 2)),
        PillCondition::Authoritative => scores((3, 5), (3, 5), (2, 4)),
    };
    PostStudyResponse {
        participant_id: pid,
        condition,
        pill,
        treadmill: scores((1, 3), (3, 5), (1, 3)),
        presentation: scores((2, 4), (2, 4), (1, 3)),
        interview: scores((1, 3), (1, 4), (1, 3)),
    }
}

fn simulate_presentation(spec: &ScenarioSpec, pid: u32) -> Vec<PresentationResponse> {
    let mut rng = rng_for(spec.seed, pid, Modality::Presentation);
    let miss = spec.surveys.missing_probability;
    let centres = [(3, 6), (5, 3), (7, 7), (3, 5), (5, 3), (7, 6)];
    PRESENTATION_STIMULI
        .iter()
        .zip(centres)
        .map(|(stim, (v, a))| {
            let mut pick = |c: i32| {
                let x = (c + rng.random_range(-1..=1)).clamp(1, 9) as u8;
                (!rng.random_bool(miss)).then_some(x)
            };
            let valence = pick(v);
            let arousal = pick(a);
            PresentationResponse {
                participant_id: pid,
                stimulus: stim.to_string(),
                valence,
                arousal,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tonic_ramp_is_continuous() {
        let tl = ActivityTimeline::canonical(0);
        let levels: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let b = tl.segments()[1].start_ms;
        let before = tonic_at(b - 1, &tl, &levels, 60_000.0);
        let after = tonic_at(b, &tl, &levels, 60_000.0);
        assert!((before - after).abs() < 1e-3);
        assert!((tonic_at(b, &tl, &levels, 60_000.0) - 0.5).abs() < 1e-9);
        assert_eq!(tonic_at(b + 40_000, &tl, &levels, 60_000.0), 1.0);
        assert_eq!(tonic_at(b - 40_000, &tl, &levels, 60_000.0), 0.0);
    }

    #[test]
    fn planted_scrs_respect_spacing_and_margins() {
        let spec = ScenarioSpec::new(3);
        let tl = ActivityTimeline::canonical(0);
        let eda = simulate_eda(&spec, 1, false, &tl);
        assert!(!eda.scrs.is_empty());
        for w in eda.scrs.windows(2) {
            assert!(w[1].onset_ms - w[0].onset_ms >= 10_000);
        }
        for s in &eda.scrs {
            let seg = tl.activity_at(s.onset_ms).unwrap();
            assert_eq!(seg.activity.as_str(), s.activity);
            assert!(s.onset_ms - seg.start_ms >= 5000 && seg.end_ms - s.onset_ms > 5000);
        }
    }

    #[test]
    fn planted_maximum() {
        let spec = ScenarioSpec::new(3);
        let tl = ActivityTimeline::canonical(0);
        let eda = simulate_eda(&spec, 2, true, &tl);
        assert_eq!(eda.max_activity, canonical::PEPPER_INTERVIEW);
        let top = eda
            .levels
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_eq!(top.0, canonical::PEPPER_INTERVIEW);
    }

    #[test]
    fn forced_gap_removes_samples() {
        let mut spec = ScenarioSpec::new(3);
        spec.dropout.forced.push(crate::scenario::ForcedGap {
            participant: 1,
            start_s: 100.0,
            length_s: 3.0,
        });
        let tl = ActivityTimeline::canonical(0);
        let eda = simulate_eda(&spec, 1, false, &tl);
        assert_eq!(eda.gaps, vec![TruthInterval { start_ms: 100_000, end_ms: 103_000 }]);
        assert_eq!(eda.series.len(), 21_600 - 12);
        assert!(!eda.series.t_ms.iter().any(|t| (100_000..103_000).contains(t)));
    }
}
