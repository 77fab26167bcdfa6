//! Blood pressure and pulse readings: table parsing, validation and
//! per-stage aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalsStage {
    Baseline,
    Reading2,
    Reading3,
    Reading4,
}

impl VitalsStage {
    pub const ALL: [VitalsStage; 4] = [
        VitalsStage::Baseline,
        VitalsStage::Reading2,
        VitalsStage::Reading3,
        VitalsStage::Reading4,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            VitalsStage::Baseline => "baseline",
            VitalsStage::Reading2 => "reading2",
            VitalsStage::Reading3 => "reading3",
            VitalsStage::Reading4 => "reading4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalsMeasure {
    Systolic,
    Diastolic,
    Pulse,
}

impl VitalsMeasure {
    pub const ALL: [VitalsMeasure; 3] = [VitalsMeasure::Systolic, VitalsMeasure::Diastolic, VitalsMeasure::Pulse];

    pub fn label(&self) -> &'static str {
        match self {
            VitalsMeasure::Systolic => "systolic",
            VitalsMeasure::Diastolic => "diastolic",
            VitalsMeasure::Pulse => "pulse",
        }
    }
}

/// One participant's measurements at one stage; `None` is a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalsReading {
    pub participant_id: u32,
    pub stage: VitalsStage,
    pub systolic: Option<f64>,
    pub diastolic: Option<f64>,
    pub pulse: Option<f64>,
}

impl VitalsReading {
    pub fn get(&self, m: VitalsMeasure) -> Option<f64> {
        match m {
            VitalsMeasure::Systolic => self.systolic,
            VitalsMeasure::Diastolic => self.diastolic,
            VitalsMeasure::Pulse => self.pulse,
        }
    }
}

/// A present value outside its plausible physiological range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsWarning {
    pub participant_id: u32,
    pub stage: VitalsStage,
    pub message: String,
}

pub fn validate_reading(r: &VitalsReading) -> Vec<VitalsWarning> {
    let mut out = Vec::new();
    let mut warn = |message: String| {
        out.push(VitalsWarning {
            participant_id: r.participant_id,
            stage: r.stage,
            message,
        })
    };
    let check = |v: Option<f64>, lo: f64, hi: f64| v.filter(|x| !(lo..=hi).contains(x));
    if let Some(v) = check(r.systolic, 40.0, 260.0) {
        warn(format!("systolic {v} outside 40..=260 mmHg"));
    }
    if let Some(v) = check(r.diastolic, 30.0, 160.0) {
        warn(format!("diastolic {v} outside 30..=160 mmHg"));
    }
    if let (Some(s), Some(d)) = (r.systolic, r.diastolic) {
        if s <= d {
            warn(format!("systolic {s} not above diastolic {d}"));
        }
    }
    if let Some(v) = check(r.pulse, 30.0, 220.0) {
        warn(format!("pulse {v} outside 30..=220 BPM"));
    }
    out
}

pub const TABLE_HEADER: &str =
    "participant,baseline_bp,baseline_pulse,reading2_bp,reading2_pulse,reading3_bp,reading3_pulse,reading4_bp,reading4_pulse";

const MISSING: &str = "ND";

fn parse_number(cell: &str, line: usize, column: usize) -> Result<f64> {
    cell.parse::<u32>()
        .map(f64::from)
        .map_err(|_| CoreError::Parse {
            line,
            column,
            message: format!("expected an integer or {MISSING}, found `{cell}`"),
        })
}

fn parse_bp(cell: &str, line: usize, column: usize) -> Result<(Option<f64>, Option<f64>)> {
    if cell == MISSING {
        return Ok((None, None));
    }
    let parts: Vec<&str> = cell.split('/').collect();
    if parts.len() != 2 {
        return Err(CoreError::Parse {
            line,
            column,
            message: format!("expected `systolic/diastolic` or {MISSING}, found `{cell}`"),
        });
    }
    Ok((
        Some(parse_number(parts[0].trim(), line, column)?),
        Some(parse_number(parts[1].trim(), line, column)?),
    ))
}

/// Parse the participant-by-stage table: one row per participant, a
/// `sys/dia` cell and a pulse cell per stage, `ND` for missing. Lines and
/// columns in errors are 1-based.
pub fn parse_vitals_table(text: &str) -> Result<Vec<VitalsReading>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_header && cells[0].eq_ignore_ascii_case("participant") {
            seen_header = true;
            continue;
        }
        if cells.len() != 9 {
            return Err(CoreError::Parse {
                line,
                column: cells.len().min(9) + 1,
                message: format!("expected 9 cells, found {}", cells.len()),
            });
        }
        let participant_id = cells[0].parse::<u32>().map_err(|_| CoreError::Parse {
            line,
            column: 1,
            message: format!("bad participant id `{}`", cells[0]),
        })?;
        for (k, stage) in VitalsStage::ALL.iter().enumerate() {
            let bp_col = 2 + 2 * k;
            let (systolic, diastolic) = parse_bp(cells[bp_col - 1], line, bp_col)?;
            let pulse_cell = cells[bp_col];
            let pulse = if pulse_cell == MISSING {
                None
            } else {
                Some(parse_number(pulse_cell, line, bp_col + 1)?)
            };
            out.push(VitalsReading {
                participant_id,
                stage: *stage,
                systolic,
                diastolic,
                pulse,
            });
        }
    }
    Ok(out)
}

/// Inverse of [`parse_vitals_table`] for readings grouped by participant.
pub fn format_vitals_table(readings: &[VitalsReading]) -> String {
    let mut ids: Vec<u32> = readings.iter().map(|r| r.participant_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let fmt = |v: Option<f64>| v.map_or(MISSING.to_string(), |x| format!("{}", x.round() as i64));
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for id in ids {
        let _ = write!(out, "{id}");
        for stage in VitalsStage::ALL {
            let r = readings.iter().find(|r| r.participant_id == id && r.stage == stage);
            let bp = match r.map(|r| (r.systolic, r.diastolic)) {
                Some((Some(s), Some(d))) => format!("{}/{}", s.round() as i64, d.round() as i64),
                _ => MISSING.to_string(),
            };
            let _ = write!(out, ",{bp},{}", fmt(r.and_then(|r| r.pulse)));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionPolicy {
    /// Every present value of the measure at the stage.
    #[default]
    AvailableCase,
    /// Only participants with the measure present at all four stages.
    CompleteCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationOptions {
    pub std_convention: StdConvention,
    pub exclusion: ExclusionPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64], convention: StdConvention) -> Result<MeasureSummary> {
    if values.len() < 2 {
        return Err(CoreError::InsufficientData(format!(
            "need at least 2 present values (got {})",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let denom = match convention {
        StdConvention::Population => n,
        StdConvention::Sample => n - 1.0,
    };
    Ok(MeasureSummary {
        mean,
        std: (ss / denom).sqrt(),
        n: values.len(),
    })
}

/// Present values of `measure` at `stage` under `policy`, in input order.
pub fn measure_values(
    readings: &[VitalsReading],
    stage: VitalsStage,
    measure: VitalsMeasure,
    policy: ExclusionPolicy,
) -> Vec<f64> {
    readings
        .iter()
        .filter(|r| r.stage == stage)
        .filter(|r| match policy {
            ExclusionPolicy::AvailableCase => true,
            ExclusionPolicy::CompleteCase => VitalsStage::ALL.iter().all(|s| {
                readings
                    .iter()
                    .any(|o| o.participant_id == r.participant_id && o.stage == *s && o.get(measure).is_some())
            }),
        })
        .filter_map(|r| r.get(measure))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: VitalsStage,
    pub systolic: MeasureSummary,
    pub diastolic: MeasureSummary,
    pub pulse: MeasureSummary,
}

impl StageSummary {
    pub fn get(&self, m: VitalsMeasure) -> MeasureSummary {
        match m {
            VitalsMeasure::Systolic => self.systolic,
            VitalsMeasure::Diastolic => self.diastolic,
            VitalsMeasure::Pulse => self.pulse,
        }
    }
}

pub fn aggregate_vitals(readings: &[VitalsReading], stage: VitalsStage, options: &AggregationOptions) -> Result<StageSummary> {
    let one = |m: VitalsMeasure| {
        summarize(&measure_values(readings, stage, m, options.exclusion), options.std_convention).map_err(|e| {
            CoreError::InsufficientData(format!("{} at {}: {e}", m.label(), stage.label()))
        })
    };
    Ok(StageSummary {
        stage,
        systolic: one(VitalsMeasure::Systolic)?,
        diastolic: one(VitalsMeasure::Diastolic)?,
        pulse: one(VitalsMeasure::Pulse)?,
    })
}

/// Mean and std of every measure at every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsReport {
    pub options: AggregationOptions,
    pub stages: Vec<StageSummary>,
    pub warnings: Vec<VitalsWarning>,
}

pub fn vitals_report(readings: &[VitalsReading], options: &AggregationOptions) -> Result<VitalsReport> {
    let stages = VitalsStage::ALL
        .iter()
        .map(|s| aggregate_vitals(readings, *s, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(VitalsReport {
        options: *options,
        stages,
        warnings: readings.iter().flat_map(validate_reading).collect(),
    })
}

impl VitalsReport {
    pub fn get(&self, stage: VitalsStage, measure: VitalsMeasure) -> Option<MeasureSummary> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.get(measure))
    }

    /// One row per stage, two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "reading,systolic_mean,systolic_std,diastolic_mean,diastolic_std,pulse_mean,pulse_std\n",
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
                s.stage.label(),
                s.systolic.mean,
                s.systolic.std,
                s.diastolic.mean,
                s.diastolic.std,
                s.pulse.mean,
                s.pulse.std
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Reading | Systolic mean | Systolic std | Diastolic mean | Diastolic std | Pulse mean | Pulse std |\n|---|---|---|---|---|---|---|\n",
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |",
                s.stage.label(),
                s.systolic.mean,
                s.systolic.std,
                s.diastolic.mean,
                s.diastolic.std,
                s.pulse.mean,
                s.pulse.std
            );
        }
        out
    }
}

/// A reference cell to compare an aggregation against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub stage: VitalsStage,
    pub measure: VitalsMeasure,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionFit {
    pub options: AggregationOptions,
    pub mean_matches: usize,
    pub std_matches: usize,
    pub cells: usize,
}

impl ConventionFit {
    pub fn all_match(&self) -> bool {
        self.mean_matches == self.cells && self.std_matches == self.cells
    }
}

/// Score every std convention and exclusion policy against reference cells,
/// best first. Ties keep the default options ahead.
pub fn derive_std_convention(readings: &[VitalsReading], reference: &[ReferenceCell], tolerance: f64) -> Vec<ConventionFit> {
    let mut fits = Vec::new();
    for exclusion in [ExclusionPolicy::AvailableCase, ExclusionPolicy::CompleteCase] {
        for std_convention in [StdConvention::Population, StdConvention::Sample] {
            let options = AggregationOptions {
                std_convention,
                exclusion,
            };
            let (mut mm, mut sm) = (0, 0);
            for cell in reference {
                let values = measure_values(readings, cell.stage, cell.measure, exclusion);
                if let Ok(s) = summarize(&values, std_convention) {
                    mm += usize::from((s.mean - cell.mean).abs() <= tolerance);
                    sm += usize::from((s.std - cell.std).abs() <= tolerance);
                }
            }
            fits.push(ConventionFit {
                options,
                mean_matches: mm,
                std_matches: sm,
                cells: reference.len(),
            });
        }
    }
    fits.sort_by_key(|f| std::cmp::Reverse(f.mean_matches + f.std_matches));
    fits
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROWS: &str = "participant,baseline_bp,baseline_pulse,reading2_bp,reading2_pulse,reading3_bp,reading3_pulse,reading4_bp,reading4_pulse
1,ND,98,ND,93,ND,75,86/69,73
2,99/62,94,108/64,95,ND,ND,ND,88
";

    #[test]
    fn parses_cells() {
        let r = parse_vitals_table(ROWS).unwrap();
        assert_eq!(r.len(), 8);
        let p2 = r.iter().find(|x| x.participant_id == 2 && x.stage == VitalsStage::Baseline).unwrap();
        assert_eq!((p2.systolic, p2.diastolic, p2.pulse), (Some(99.0), Some(62.0), Some(94.0)));
        let p1 = r[0];
        assert_eq!((p1.systolic, p1.diastolic, p1.pulse), (None, None, Some(98.0)));
    }

    #[test]
    fn malformed_cell_is_located() {
        let text = format!("{TABLE_HEADER}\n3,120/80/,70,ND,ND,ND,ND,ND,ND\n");
        match parse_vitals_table(&text) {
            Err(CoreError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        let text = format!("{TABLE_HEADER}\n3,ND,7x,ND,ND,ND,ND,ND,ND\n");
        assert!(matches!(parse_vitals_table(&text), Err(CoreError::Parse { line: 2, column: 3, .. })));
        assert!(parse_vitals_table("1,ND,ND\n").is_err());
    }

    #[test]
    fn format_round_trips() {
        let r = parse_vitals_table(ROWS).unwrap();
        assert_eq!(format_vitals_table(&r), ROWS);
    }

    #[test]
    fn two_values() {
        let s = summarize(&[100.0, 120.0], StdConvention::Population).unwrap();
        assert_eq!(s.mean, 110.0);
        assert_eq!(s.std, 10.0);
        let s = summarize(&[100.0, 120.0], StdConvention::Sample).unwrap();
        assert!((s.std - 200f64.sqrt()).abs() < 1e-12);
        assert!(summarize(&[1.0], StdConvention::Population).is_err());
    }

    #[test]
    fn range_warnings() {
        let r = VitalsReading {
            participant_id: 3,
            stage: VitalsStage::Reading4,
            systolic: Some(78.0),
            diastolic: Some(54.0),
            pulse: Some(87.0),
        };
        assert!(validate_reading(&r).is_empty());
        let bad = VitalsReading {
            systolic: Some(60.0),
            diastolic: Some(70.0),
            pulse: Some(250.0),
            ..r
        };
        assert_eq!(validate_reading(&bad).len(), 2);
    }

    #[test]
    fn complete_case_drops_partial_participants() {
        let r = parse_vitals_table(ROWS).unwrap();
        let avail = measure_values(&r, VitalsStage::Baseline, VitalsMeasure::Pulse, ExclusionPolicy::AvailableCase);
        assert_eq!(avail, vec![98.0, 94.0]);
        let complete = measure_values(&r, VitalsStage::Baseline, VitalsMeasure::Pulse, ExclusionPolicy::CompleteCase);
        assert_eq!(complete, vec![98.0]);
    }
}
