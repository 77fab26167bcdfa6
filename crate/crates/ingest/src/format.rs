//! Line-delimited stream, event and survey file formats.
//!
//! Stream files start with one header line of `key=value` tokens:
//!
//! ```text
//! #schema_version=1 kind=scalar unit=microsiemens columns=t_ms,value
//! 0,2.013452
//! 250,2.013871
//! ```
//!
//! Values are written with fixed precision so that parse then format is
//! byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use carespace_core::forceplate::ForcePlateSample;
use carespace_core::spatial::{EventKind, SensorEvent};
use carespace_core::surveys::{ActivityScores, PillCondition, PostStudyResponse, PresentationResponse, SurveyActivity};
use carespace_core::{Millis, TimedSeries, Unit};

use crate::error::{IngestError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const SCALAR_PRECISION: usize = 6;
pub const FORCE_PRECISION: usize = 4;
pub const EVENT_PRECISION: usize = 3;

const SCALAR_COLUMNS: &str = "t_ms,value";
const FORCE_COLUMNS: &str = "t_ms,fx,fy,fz,mx,my,mz";
const EVENT_COLUMNS: &str = "device_id,kind,t_ms,value";

pub const POST_STUDY_HEADER: &str = "participant,condition,\
pill_valence,pill_arousal,pill_control,\
treadmill_valence,treadmill_arousal,treadmill_control,\
presentation_valence,presentation_arousal,presentation_control,\
interview_valence,interview_arousal,interview_control";

pub const PRESENTATION_HEADER: &str = "participant,stimulus,valence,arousal";

pub fn unit_label(unit: Unit) -> &'static str {
    match unit {
        Unit::Microsiemens => "microsiemens",
        Unit::Newtons => "newtons",
        Unit::NewtonMeters => "newton_meters",
        Unit::Volts => "volts",
        Unit::Lux => "lux",
        Unit::Dimensionless => "dimensionless",
    }
}

pub fn parse_unit(s: &str) -> Option<Unit> {
    Some(match s {
        "microsiemens" => Unit::Microsiemens,
        "newtons" => Unit::Newtons,
        "newton_meters" => Unit::NewtonMeters,
        "volts" => Unit::Volts,
        "lux" => Unit::Lux,
        "dimensionless" => Unit::Dimensionless,
        _ => return None,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Header tokens of a stream file.
fn parse_header(path: &Path, line: Option<&str>, kind: &str, columns: &str) -> Result<BTreeMap<String, String>> {
    let line = line.ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    let mut tokens = BTreeMap::new();
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(path, 1, format!("malformed header token '{tok}'")))?;
        tokens.insert(k.to_string(), v.to_string());
    }
    match tokens.get("schema_version").map(String::as_str) {
        Some(v) if v == SCHEMA_VERSION.to_string() => {}
        Some(v) => {
            return Err(IngestError::Schema {
                path: path.to_path_buf(),
                message: format!("unsupported schema_version {v}"),
            })
        }
        None => return Err(parse_err(path, 1, "header lacks schema_version")),
    }
    if tokens.get("kind").map(String::as_str) != Some(kind) {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: format!("expected kind={kind}"),
        });
    }
    if tokens.get("columns").map(String::as_str) != Some(columns) {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: format!("expected columns={columns}"),
        });
    }
    Ok(tokens)
}

fn fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != n {
        return Err(parse_err(path, line_no, format!("expected {n} fields, found {}", parts.len())));
    }
    Ok(parts)
}

fn parse_t(path: &Path, line_no: usize, s: &str) -> Result<Millis> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("bad timestamp '{s}'")))
}

fn parse_f(path: &Path, line_no: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("bad number '{s}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line_no, format!("non-finite value '{s}'")));
    }
    Ok(v)
}

/// Data lines with their 1-based line numbers, skipping blank lines.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn format_scalar(series: &TimedSeries) -> String {
    let mut out = format!(
        "#schema_version={SCHEMA_VERSION} kind=scalar unit={} columns={SCALAR_COLUMNS}\n",
        unit_label(series.unit)
    );
    for (t, v) in series.t_ms.iter().zip(&series.values) {
        out.push_str(&format!("{t},{v:.SCALAR_PRECISION$}\n"));
    }
    out
}

pub fn parse_scalar(path: &Path, text: &str) -> Result<TimedSeries> {
    let tokens = parse_header(path, text.lines().next(), "scalar", SCALAR_COLUMNS)?;
    let unit_s = tokens.get("unit").map(String::as_str).unwrap_or("");
    let unit = parse_unit(unit_s).ok_or_else(|| IngestError::Schema {
        path: path.to_path_buf(),
        message: format!("unknown unit '{unit_s}'"),
    })?;
    let mut t_ms = Vec::new();
    let mut values = Vec::new();
    for (no, line) in data_lines(text) {
        let f = fields(path, no, line, 2)?;
        t_ms.push(parse_t(path, no, f[0])?);
        values.push(parse_f(path, no, f[1])?);
    }
    TimedSeries::new(t_ms, values, unit).map_err(|e| IngestError::core(path, e))
}

pub fn format_forceplate(samples: &[ForcePlateSample]) -> String {
    let mut out = format!("#schema_version={SCHEMA_VERSION} kind=forceplate columns={FORCE_COLUMNS}\n");
    for s in samples {
        out.push_str(&format!(
            "{},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$}\n",
            s.t,
            s.fx,
            s.fy,
            s.fz,
            s.mx,
            s.my,
            s.mz,
            p = FORCE_PRECISION
        ));
    }
    out
}

pub fn parse_forceplate(path: &Path, text: &str) -> Result<Vec<ForcePlateSample>> {
    parse_header(path, text.lines().next(), "forceplate", FORCE_COLUMNS)?;
    let mut out = Vec::new();
    for (no, line) in data_lines(text) {
        let f = fields(path, no, line, 7)?;
        out.push(ForcePlateSample {
            t: parse_t(path, no, f[0])?,
            fx: parse_f(path, no, f[1])?,
            fy: parse_f(path, no, f[2])?,
            fz: parse_f(path, no, f[3])?,
            mx: parse_f(path, no, f[4])?,
            my: parse_f(path, no, f[5])?,
            mz: parse_f(path, no, f[6])?,
        });
    }
    Ok(out)
}

pub fn format_events(events: &[SensorEvent]) -> String {
    let mut out = format!("#schema_version={SCHEMA_VERSION} kind=events columns={EVENT_COLUMNS}\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{:.EVENT_PRECISION$}\n",
            e.device_id,
            e.kind.label(),
            e.t,
            e.value
        ));
    }
    out
}

pub fn parse_events(path: &Path, text: &str) -> Result<Vec<SensorEvent>> {
    parse_header(path, text.lines().next(), "events", EVENT_COLUMNS)?;
    let mut out = Vec::new();
    for (no, line) in data_lines(text) {
        let f = fields(path, no, line, 4)?;
        let device = f[0].trim();
        if device.is_empty() {
            return Err(parse_err(path, no, "empty device id"));
        }
        let kind = EventKind::parse(f[1].trim()).ok_or_else(|| parse_err(path, no, format!("unknown event kind '{}'", f[1])))?;
        out.push(SensorEvent::new(device, kind, parse_t(path, no, f[2])?, parse_f(path, no, f[3])?));
    }
    Ok(out)
}

fn fmt_score(s: Option<u8>) -> String {
    s.map(|v| v.to_string()).unwrap_or_else(|| "ND".into())
}

fn parse_score(path: &Path, line: usize, s: &str) -> Result<Option<u8>> {
    let s = s.trim();
    if s.is_empty() || s == "ND" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| parse_err(path, line, format!("bad score '{s}'")))
}

fn check_table_header(path: &Path, text: &str, header: &str) -> Result<()> {
    match text.lines().next().map(|l| l.trim_end_matches('\r')) {
        Some(h) if h == header => Ok(()),
        Some(_) => Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: format!("expected header '{header}'"),
        }),
        None => Err(parse_err(path, 1, "empty file")),
    }
}

pub fn format_post_study(responses: &[PostStudyResponse]) -> String {
    let mut out = format!("{POST_STUDY_HEADER}\n");
    for r in responses {
        out.push_str(&format!("{},{}", r.participant_id, r.condition.label()));
        for a in SurveyActivity::ALL {
            let s = r.scores(a);
            for v in [s.valence, s.arousal, s.control] {
                out.push(',');
                out.push_str(&fmt_score(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_post_study(path: &Path, text: &str) -> Result<Vec<PostStudyResponse>> {
    check_table_header(path, text, POST_STUDY_HEADER)?;
    let mut out = Vec::new();
    for (no, line) in data_lines(text) {
        let f = fields(path, no, line, 14)?;
        let participant_id = f[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, no, format!("bad participant '{}'", f[0])))?;
        let condition = match f[1].trim() {
            "friendly" => PillCondition::Friendly,
            "authoritative" => PillCondition::Authoritative,
            other => return Err(parse_err(path, no, format!("unknown condition '{other}'"))),
        };
        let mut scores = [ActivityScores::default(); 4];
        for (k, s) in scores.iter_mut().enumerate() {
            let base = 2 + 3 * k;
            s.valence = parse_score(path, no, f[base])?;
            s.arousal = parse_score(path, no, f[base + 1])?;
            s.control = parse_score(path, no, f[base + 2])?;
        }
        out.push(PostStudyResponse {
            participant_id,
            condition,
            pill: scores[0],
            treadmill: scores[1],
            presentation: scores[2],
            interview: scores[3],
        });
    }
    Ok(out)
}

pub fn format_presentation(responses: &[PresentationResponse]) -> String {
    let mut out = format!("{PRESENTATION_HEADER}\n");
    for r in responses {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.participant_id,
            r.stimulus,
            fmt_score(r.valence),
            fmt_score(r.arousal)
        ));
    }
    out
}

pub fn parse_presentation(path: &Path, text: &str) -> Result<Vec<PresentationResponse>> {
    check_table_header(path, text, PRESENTATION_HEADER)?;
    let mut out = Vec::new();
    for (no, line) in data_lines(text) {
        let f = fields(path, no, line, 4)?;
        let participant_id = f[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, no, format!("bad participant '{}'", f[0])))?;
        out.push(PresentationResponse {
            participant_id,
            stimulus: f[1].trim().to_string(),
            valence: parse_score(path, no, f[2])?,
            arousal: parse_score(path, no, f[3])?,
        });
    }
    Ok(out)
}
