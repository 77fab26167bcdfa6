//! Run configuration for `analyze` and `report`.
//!
//! Every field has a default, so `{}` is a complete configuration. Unknown
//! keys are rejected at every nesting level.

use std::path::{Path, PathBuf};

use carespace_core::eda::EdaConfig;
use carespace_core::spatial::SpatialConfig;
use carespace_core::stats::SignificanceThresholds;
use carespace_core::vitals::AggregationOptions;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Svg,
}

impl ReportFormat {
    pub fn label(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcePlateOptions {
    /// Samples with |Fz| at or below this load are treated as swing phase.
    pub unload_threshold_n: f64,
}

impl Default for ForcePlateOptions {
    fn default() -> Self {
        Self { unload_threshold_n: 20.0 }
    }
}

/// Settings that a session manifest may override through `config_overrides`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub eda: EdaConfig,
    pub forceplate: ForcePlateOptions,
    /// Empty `zone_map` / `exit_doors` fall back to the corpus room layout.
    pub spatial: SpatialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Rendered alongside the machine-readable tables in every bundle.
    pub formats: Vec<ReportFormat>,
    pub eda: EdaConfig,
    pub forceplate: ForcePlateOptions,
    pub spatial: SpatialConfig,
    pub significance: SignificanceThresholds,
    pub vitals: AggregationOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            corpus: None,
            out: None,
            formats: vec![ReportFormat::Markdown, ReportFormat::Svg],
            eda: EdaConfig::default(),
            forceplate: ForcePlateOptions::default(),
            spatial: SpatialConfig::default(),
            significance: SignificanceThresholds::default(),
            vitals: AggregationOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn params(&self) -> AnalysisParams {
        AnalysisParams {
            eda: self.eda.clone(),
            forceplate: self.forceplate.clone(),
            spatial: self.spatial.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        self.params().validate()?;
        let s = &self.significance;
        if !(0.0 < s.level && s.level < 1.0) || s.ci_width_max <= 0.0 || !(0.0..=1.0).contains(&s.p_max) {
            return Err(CliError::Config("significance thresholds out of range".into()));
        }
        Ok(())
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        let e = &self.eda;
        if !(e.sample_rate_hz > 0.0) || !(e.cutoff_hz > 0.0) || e.cutoff_hz >= e.sample_rate_hz / 2.0 {
            return Err(CliError::Config(format!(
                "eda.cutoff_hz must lie in (0, {}) for a {} Hz signal",
                e.sample_rate_hz / 2.0,
                e.sample_rate_hz
            )));
        }
        if e.filter_order == 0 || e.max_fill_s < 0.0 {
            return Err(CliError::Config("eda.filter_order must be >= 1 and eda.max_fill_s >= 0".into()));
        }
        let c = &e.cda;
        if !(c.tau1_s > c.tau2_s && c.tau2_s > 0.0) {
            return Err(CliError::Config("eda.cda requires tau1_s > tau2_s > 0".into()));
        }
        if self.forceplate.unload_threshold_n < 0.0 {
            return Err(CliError::Config("forceplate.unload_threshold_n must be >= 0".into()));
        }
        let seat = &self.spatial.seat;
        if seat.off_fraction > seat.on_fraction {
            return Err(CliError::Config("spatial.seat.off_fraction must not exceed on_fraction".into()));
        }
        Ok(())
    }

    /// These parameters with a session's overrides merged on top.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut base = serde_json::to_value(self).expect("parameters serialize");
        carespace_ingest::session::merge_json(&mut base, &Value::Object(overrides.clone()));
        let merged: AnalysisParams =
            serde_json::from_value(base).map_err(|e| CliError::Config(format!("config_overrides: {e}")))?;
        merged.validate()?;
        Ok(merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [r#"{"colour": 1}"#, r#"{"eda": {"cutof_hz": 0.3}}"#, r#"{"eda": {"cda": {"tau": 1}}}"#] {
            assert!(matches!(RunConfig::from_json(bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn cutoff_must_be_below_nyquist() {
        assert!(RunConfig::from_json(r#"{"eda": {"cutoff_hz": 2.0}}"#).is_err());
        let c = RunConfig::from_json(r#"{"eda": {"cutoff_hz": 0.5}, "formats": ["csv"]}"#).unwrap();
        assert_eq!(c.eda.cutoff_hz, 0.5);
        assert_eq!(c.formats, [ReportFormat::Csv]);
    }

    #[test]
    fn overrides_merge_and_validate() {
        let p = AnalysisParams::default();
        let o: Map<String, Value> = serde_json::from_str(r#"{"eda": {"cda": {"optimize_tau": false}}}"#).unwrap();
        let m = p.with_overrides(&o).unwrap();
        assert!(!m.eda.cda.optimize_tau);
        assert_eq!(m.eda.cutoff_hz, p.eda.cutoff_hz);
        let bad: Map<String, Value> = serde_json::from_str(r#"{"edaa": {}}"#).unwrap();
        assert!(p.with_overrides(&bad).is_err());
    }
}
