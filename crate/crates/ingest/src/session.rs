//! Session and corpus manifests, loading and raw re-serialization.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use carespace_core::forceplate::{PlateGeometry, PlateId};
use carespace_core::spatial::SensorEvent;
use carespace_core::surveys::{PostStudyResponse, PresentationResponse};
use carespace_core::vitals::{parse_vitals_table, VitalsReading};
use carespace_core::{align_timestamps, ActivityTimeline, Millis, SessionRecord, Stream, TimedSeries};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{IngestError, Result};
use crate::format::{self, read_text, SCHEMA_VERSION};

/// Allowed relative deviation between declared and observed sample spacing.
pub const RATE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Eda,
    Scalar,
    ForcePlate,
    Events,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDescriptor {
    pub name: String,
    pub kind: ChannelKind,
    /// Required for sampled channels, absent for event logs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    /// Relative to the manifest's directory.
    pub path: String,
    /// Device clock minus session epoch.
    #[serde(default)]
    pub clock_offset_ms: Millis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plate: Option<PlateId>,
    /// Plate surface to sensor origin distance in metres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub schema_version: u32,
    pub participant_id: u32,
    /// Set when the timeline deliberately departs from the canonical layout.
    #[serde(default)]
    pub custom_timeline: bool,
    pub timeline: ActivityTimeline,
    pub channels: Vec<ChannelDescriptor>,
    /// Partial analysis configuration merged over the run configuration.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub config_overrides: Map<String, Value>,
}

impl SessionManifest {
    pub fn channel(&self, name: &str) -> Option<&ChannelDescriptor> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Force-plate channels with their geometry, in manifest order.
    pub fn plates(&self) -> Vec<(String, PlateGeometry)> {
        self.channels
            .iter()
            .filter(|c| c.kind == ChannelKind::ForcePlate)
            .filter_map(|c| {
                let g = PlateGeometry::new(c.plate?, c.dz_m.unwrap_or(0.0)).ok()?;
                Some((c.name.clone(), g))
            })
            .collect()
    }
}

/// Room layout shared by every session of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomLayout {
    pub zone_map: BTreeMap<String, String>,
    pub exit_doors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Session manifest paths relative to the corpus directory.
    pub sessions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vitals: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_study: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presentation: Option<String>,
    #[serde(default)]
    pub room: RoomLayout,
}

pub const CORPUS_MANIFEST: &str = "corpus.json";

fn check_version(path: &Path, v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: format!("unsupported schema_version {v}"),
        });
    }
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        if e.is_data() {
            IngestError::Schema {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", e.line()),
            }
        } else {
            IngestError::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            }
        }
    })
}

pub fn read_session_manifest(path: &Path) -> Result<SessionManifest> {
    let m: SessionManifest = parse_json(path)?;
    check_version(path, m.schema_version)?;
    if !m.custom_timeline && !m.timeline.is_canonical() {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: "timeline is not canonical and custom_timeline is not set".into(),
        });
    }
    let mut names = std::collections::BTreeSet::new();
    for c in &m.channels {
        if !names.insert(c.name.as_str()) {
            return Err(IngestError::Schema {
                path: path.to_path_buf(),
                message: format!("duplicate channel '{}'", c.name),
            });
        }
        let sampled = c.kind != ChannelKind::Events;
        match c.rate_hz {
            Some(r) if sampled && !(r.is_finite() && r > 0.0) => {
                return Err(IngestError::Schema {
                    path: path.to_path_buf(),
                    message: format!("channel '{}' has invalid rate {r}", c.name),
                })
            }
            None if sampled => {
                return Err(IngestError::Schema {
                    path: path.to_path_buf(),
                    message: format!("channel '{}' needs rate_hz", c.name),
                })
            }
            _ => {}
        }
        if c.kind == ChannelKind::ForcePlate {
            let plate = c.plate.ok_or_else(|| IngestError::Schema {
                path: path.to_path_buf(),
                message: format!("force plate channel '{}' needs plate", c.name),
            })?;
            PlateGeometry::new(plate, c.dz_m.unwrap_or(0.0)).map_err(|e| IngestError::core(path, e))?;
        }
    }
    Ok(m)
}

pub fn read_corpus_manifest(dir: &Path) -> Result<CorpusManifest> {
    let path = dir.join(CORPUS_MANIFEST);
    let m: CorpusManifest = parse_json(&path)?;
    check_version(&path, m.schema_version)?;
    Ok(m)
}

fn check_rate(path: &Path, t: &[Millis], declared_hz: f64) -> Result<()> {
    if t.len() < 2 {
        return Ok(());
    }
    let mut dt: Vec<Millis> = t.windows(2).map(|w| w[1] - w[0]).collect();
    dt.sort_unstable();
    let median = dt[dt.len() / 2] as f64;
    let period = 1000.0 / declared_hz;
    if median <= 0.0 || (median - period).abs() > RATE_TOLERANCE * period {
        return Err(IngestError::RateMismatch {
            path: path.to_path_buf(),
            declared_hz,
            observed_hz: if median > 0.0 { 1000.0 / median } else { f64::INFINITY },
        });
    }
    Ok(())
}

/// A session record plus the manifest it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSession {
    pub manifest_path: PathBuf,
    pub manifest: SessionManifest,
    pub record: SessionRecord,
    /// Event device id to the events channel that logged it.
    pub event_sources: BTreeMap<String, String>,
}

/// Load, validate and align every channel of one session.
pub fn load_session(manifest_path: &Path) -> Result<LoadedSession> {
    let manifest = read_session_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut record = SessionRecord::new(manifest.participant_id, manifest.timeline.clone());
    let mut event_sources = BTreeMap::new();

    for c in &manifest.channels {
        let path = base.join(&c.path);
        let text = read_text(&path)?;
        match c.kind {
            ChannelKind::Eda | ChannelKind::Scalar => {
                let s = format::parse_scalar(&path, &text)?;
                check_monotonic(&path, &s.t_ms)?;
                check_rate(&path, &s.t_ms, c.rate_hz.unwrap_or(0.0))?;
                record.streams.insert(c.name.clone(), Stream::Scalar(s));
                record.clock_offsets_ms.insert(c.name.clone(), c.clock_offset_ms);
            }
            ChannelKind::ForcePlate => {
                let s = format::parse_forceplate(&path, &text)?;
                let t: Vec<Millis> = s.iter().map(|x| x.t).collect();
                check_monotonic(&path, &t)?;
                check_rate(&path, &t, c.rate_hz.unwrap_or(0.0))?;
                record.streams.insert(c.name.clone(), Stream::ForcePlate(s));
                record.clock_offsets_ms.insert(c.name.clone(), c.clock_offset_ms);
            }
            ChannelKind::Events => {
                let events = format::parse_events(&path, &text)?;
                for e in &events {
                    match event_sources.get(&e.device_id) {
                        Some(src) if src != &c.name => {
                            return Err(IngestError::Schema {
                                path: path.clone(),
                                message: format!("device '{}' also logged by channel '{src}'", e.device_id),
                            })
                        }
                        Some(_) => {}
                        None => {
                            event_sources.insert(e.device_id.clone(), c.name.clone());
                            record.clock_offsets_ms.insert(e.device_id.clone(), c.clock_offset_ms);
                        }
                    }
                }
                record.events.extend(events);
            }
        }
    }

    let record = align_timestamps(record).map_err(|e| IngestError::core(manifest_path, e))?;
    Ok(LoadedSession {
        manifest_path: manifest_path.to_path_buf(),
        manifest,
        record,
        event_sources,
    })
}

fn check_monotonic(path: &Path, t: &[Millis]) -> Result<()> {
    if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
        // header is line 1, sample i is on line i + 2
        return Err(IngestError::Parse {
            path: path.to_path_buf(),
            line: i + 3,
            message: format!("timestamp {} does not increase", t[i + 1]),
        });
    }
    Ok(())
}

/// Rendered channel files of a loaded session, keyed by manifest-relative
/// path. Clock offsets are re-applied so the output mirrors the input.
pub fn render_session_files(session: &LoadedSession) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for c in &session.manifest.channels {
        let off = c.clock_offset_ms;
        let text = match c.kind {
            ChannelKind::Eda | ChannelKind::Scalar => match session.record.streams.get(&c.name) {
                Some(Stream::Scalar(s)) => {
                    let shifted = TimedSeries {
                        t_ms: s.t_ms.iter().map(|t| t + off).collect(),
                        values: s.values.clone(),
                        unit: s.unit,
                    };
                    format::format_scalar(&shifted)
                }
                _ => return Err(missing_channel(session, &c.name)),
            },
            ChannelKind::ForcePlate => match session.record.streams.get(&c.name) {
                Some(Stream::ForcePlate(v)) => {
                    let shifted: Vec<_> = v
                        .iter()
                        .map(|s| carespace_core::forceplate::ForcePlateSample { t: s.t + off, ..*s })
                        .collect();
                    format::format_forceplate(&shifted)
                }
                _ => return Err(missing_channel(session, &c.name)),
            },
            ChannelKind::Events => {
                let events: Vec<SensorEvent> = session
                    .record
                    .events
                    .iter()
                    .filter(|e| session.event_sources.get(&e.device_id) == Some(&c.name))
                    .map(|e| SensorEvent { t: e.t + off, ..e.clone() })
                    .collect();
                format::format_events(&events)
            }
        };
        out.insert(c.path.clone(), text);
    }
    Ok(out)
}

fn missing_channel(session: &LoadedSession, name: &str) -> IngestError {
    IngestError::Schema {
        path: session.manifest_path.clone(),
        message: format!("channel '{name}' not present in record"),
    }
}

/// Corpus-level tables shared by all sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusTables {
    pub vitals: Vec<VitalsReading>,
    pub post_study: Vec<PostStudyResponse>,
    pub presentation: Vec<PresentationResponse>,
}

impl CorpusTables {
    /// Copy this participant's rows into the record.
    pub fn attach(&self, record: &mut SessionRecord) {
        let id = record.participant_id;
        record.vitals = self.vitals.iter().filter(|r| r.participant_id == id).copied().collect();
        record.post_study = self.post_study.iter().find(|r| r.participant_id == id).cloned();
        record.presentation = self
            .presentation
            .iter()
            .filter(|r| r.participant_id == id)
            .cloned()
            .collect();
    }
}

/// Corpus manifest plus shared tables; sessions load separately so that
/// one bad session does not prevent the others from loading.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    pub root: PathBuf,
    pub manifest: CorpusManifest,
    pub tables: CorpusTables,
}

impl CorpusIndex {
    pub fn session_paths(&self) -> Vec<PathBuf> {
        self.manifest.sessions.iter().map(|s| self.root.join(s)).collect()
    }
}

pub fn load_corpus_index(dir: &Path) -> Result<CorpusIndex> {
    let manifest = read_corpus_manifest(dir)?;
    let mut tables = CorpusTables::default();
    if let Some(p) = &manifest.vitals {
        let path = dir.join(p);
        let text = read_text(&path)?;
        tables.vitals = parse_vitals_table(&text).map_err(|e| match e {
            carespace_core::CoreError::Parse { line, column, message } => IngestError::Parse {
                path: path.clone(),
                line,
                message: format!("column {column}: {message}"),
            },
            other => IngestError::core(&path, other),
        })?;
    }
    if let Some(p) = &manifest.post_study {
        let path = dir.join(p);
        tables.post_study = format::parse_post_study(&path, &read_text(&path)?)?;
    }
    if let Some(p) = &manifest.presentation {
        let path = dir.join(p);
        tables.presentation = format::parse_presentation(&path, &read_text(&path)?)?;
    }
    Ok(CorpusIndex {
        root: dir.to_path_buf(),
        manifest,
        tables,
    })
}

/// Recursively merge `overlay` into `base`; objects merge key by key and
/// every other value replaces.
pub fn merge_json(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge_json(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}
