//! Scenario specification for the synthetic corpus generator.

use std::collections::BTreeMap;

use carespace_core::model::canonical;
use serde::{Deserialize, Serialize};

use crate::error::{IngestError, Result};
use crate::format::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_participants")]
    pub participants: u32,
    /// Participants whose largest tonic level is planted in the interview.
    #[serde(default = "default_pepper_max")]
    pub pepper_max_participants: u32,
    /// Largest magnitude of the per-device clock offsets.
    #[serde(default = "default_clock_offset")]
    pub clock_offset_max_ms: i64,
    #[serde(default)]
    pub eda: EdaScenario,
    /// Per-activity scripts keyed by canonical label; missing labels use
    /// [`ActivityScript::default`].
    #[serde(default = "default_activities")]
    pub activities: BTreeMap<String, ActivityScript>,
    #[serde(default)]
    pub dropout: DropoutModel,
    #[serde(default)]
    pub forceplate: ForcePlateScenario,
    #[serde(default)]
    pub vitals: VitalsScenario,
    #[serde(default)]
    pub surveys: SurveyScenario,
    #[serde(default)]
    pub spatial: SpatialScenario,
}

fn default_participants() -> u32 {
    32
}
fn default_pepper_max() -> u32 {
    9
}
fn default_clock_offset() -> i64 {
    500
}

fn default_activities() -> BTreeMap<String, ActivityScript> {
    use canonical::*;
    let rate = |l: &str| match l {
        BASELINE => 0.6,
        PILL_ADMINISTRATION | PRESENTATION => 1.6,
        PEPPER_INTERVIEW => 1.8,
        BRUCE_STAGE_3 | BRUCE_STAGE_4 => 1.4,
        _ => 1.0,
    };
    LAYOUT
        .iter()
        .map(|(l, _)| (l.to_string(), ActivityScript { scr_rate_per_min: rate(l) }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityScript {
    /// Mean SCR rate before the minimum-separation constraint.
    pub scr_rate_per_min: f64,
}

impl Default for ActivityScript {
    fn default() -> Self {
        Self { scr_rate_per_min: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaScenario {
    pub sample_rate_hz: f64,
    pub noise_sd_us: f64,
    pub tau1_range_s: (f64, f64),
    pub tau2_range_s: (f64, f64),
    pub tonic_base_range_us: (f64, f64),
    /// Spread of the per-activity tonic levels above the base.
    pub tonic_spread_us: f64,
    /// Lead of the largest activity level over the runner-up.
    pub max_margin_us: f64,
    /// Width of the raised-cosine level change at each boundary.
    pub transition_s: f64,
    pub scr_amplitude_range_us: (f64, f64),
    pub min_scr_separation_s: f64,
    /// SCR onsets keep this distance from activity boundaries.
    pub boundary_margin_s: f64,
    /// SCR onsets keep this distance from the session edges.
    pub edge_margin_s: f64,
}

impl Default for EdaScenario {
    fn default() -> Self {
        Self {
            sample_rate_hz: 4.0,
            noise_sd_us: 0.0,
            tau1_range_s: (1.5, 3.0),
            tau2_range_s: (0.5, 1.0),
            tonic_base_range_us: (2.0, 6.0),
            tonic_spread_us: 1.2,
            max_margin_us: 0.6,
            transition_s: 60.0,
            scr_amplitude_range_us: (0.2, 1.0),
            min_scr_separation_s: 10.0,
            boundary_margin_s: 5.0,
            edge_margin_s: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedGap {
    pub participant: u32,
    pub start_s: f64,
    pub length_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropoutModel {
    /// Poisson rate of random EDA gaps.
    pub gaps_per_hour: f64,
    /// Uniform range of random gap lengths.
    pub gap_length_s: (f64, f64),
    pub forced: Vec<ForcedGap>,
}

impl Default for DropoutModel {
    fn default() -> Self {
        Self {
            gaps_per_hour: 0.0,
            gap_length_s: (0.5, 4.0),
            forced: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcePlateScenario {
    pub enabled: bool,
    pub sample_rate_hz: f64,
    pub dz_m: f64,
    pub body_weight_range_n: (f64, f64),
    /// COP heel-to-toe excursion at zero speed.
    pub excursion_base_m: f64,
    pub excursion_per_mps: f64,
    pub excursion_jitter_m: f64,
    pub couple_noise_nm: f64,
    pub cop_noise_m: f64,
}

impl Default for ForcePlateScenario {
    fn default() -> Self {
        Self {
            enabled: true,
            sample_rate_hz: 20.0,
            dz_m: 0.04,
            body_weight_range_n: (550.0, 900.0),
            excursion_base_m: 0.10,
            excursion_per_mps: 0.06,
            excursion_jitter_m: 0.004,
            couple_noise_nm: 0.8,
            cop_noise_m: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VitalsScenario {
    pub missing_probability: f64,
}

impl Default for VitalsScenario {
    fn default() -> Self {
        Self {
            missing_probability: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyScenario {
    pub missing_probability: f64,
}

impl Default for SurveyScenario {
    fn default() -> Self {
        Self {
            missing_probability: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialScenario {
    pub enabled: bool,
    /// Reed switch bounce around door movements.
    pub chatter: bool,
    /// Non-exit door openings, seat loads and light readings.
    pub distractors: bool,
}

impl Default for SpatialScenario {
    fn default() -> Self {
        Self {
            enabled: true,
            chatter: true,
            distractors: true,
        }
    }
}

impl ScenarioSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            participants: default_participants(),
            pepper_max_participants: default_pepper_max(),
            clock_offset_max_ms: default_clock_offset(),
            eda: EdaScenario::default(),
            activities: default_activities(),
            dropout: DropoutModel::default(),
            forceplate: ForcePlateScenario::default(),
            vitals: VitalsScenario::default(),
            surveys: SurveyScenario::default(),
            spatial: SpatialScenario::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| IngestError::Scenario(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn script(&self, activity: &str) -> ActivityScript {
        self.activities.get(activity).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(IngestError::Scenario(m));
        let range_ok = |r: (f64, f64), lo: f64| r.0.is_finite() && r.1.is_finite() && r.0 >= lo && r.0 <= r.1;
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.participants == 0 || self.participants > 999 {
            return bad(format!("participants must be in 1..=999 (got {})", self.participants));
        }
        if self.pepper_max_participants > self.participants {
            return bad("pepper_max_participants exceeds participants".into());
        }
        if self.clock_offset_max_ms < 0 {
            return bad("clock_offset_max_ms must be >= 0".into());
        }
        for (label, s) in &self.activities {
            if !canonical::LAYOUT.iter().any(|(l, _)| l == label) {
                return bad(format!("unknown activity '{label}'"));
            }
            if !(s.scr_rate_per_min.is_finite() && s.scr_rate_per_min >= 0.0) {
                return bad(format!("activity '{label}': scr_rate_per_min must be >= 0"));
            }
        }
        let e = &self.eda;
        if !(e.sample_rate_hz.is_finite() && e.sample_rate_hz > 0.0 && (1000.0 / e.sample_rate_hz).fract() == 0.0) {
            return bad("eda.sample_rate_hz must give a whole-millisecond period".into());
        }
        if !(e.noise_sd_us.is_finite() && e.noise_sd_us >= 0.0) {
            return bad("eda.noise_sd_us must be >= 0".into());
        }
        if !range_ok(e.tau2_range_s, f64::MIN_POSITIVE) || !range_ok(e.tau1_range_s, f64::MIN_POSITIVE) {
            return bad("eda tau ranges must be positive and ordered".into());
        }
        if e.tau1_range_s.0 <= e.tau2_range_s.1 {
            return bad("eda.tau1_range_s must lie above tau2_range_s".into());
        }
        if !range_ok(e.tonic_base_range_us, 0.0) || !range_ok(e.scr_amplitude_range_us, f64::MIN_POSITIVE) {
            return bad("eda level and amplitude ranges must be non-negative and ordered".into());
        }
        for (name, v) in [
            ("tonic_spread_us", e.tonic_spread_us),
            ("max_margin_us", e.max_margin_us),
            ("transition_s", e.transition_s),
            ("boundary_margin_s", e.boundary_margin_s),
            ("edge_margin_s", e.edge_margin_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("eda.{name} must be >= 0"));
            }
        }
        if !(e.min_scr_separation_s.is_finite() && e.min_scr_separation_s > 0.0) {
            return bad("eda.min_scr_separation_s must be > 0".into());
        }
        let d = &self.dropout;
        if !(d.gaps_per_hour.is_finite() && d.gaps_per_hour >= 0.0) || !range_ok(d.gap_length_s, f64::MIN_POSITIVE) {
            return bad("dropout rate must be >= 0 and gap lengths positive and ordered".into());
        }
        for g in &d.forced {
            if g.participant == 0 || g.participant > self.participants {
                return bad(format!("forced gap for unknown participant {}", g.participant));
            }
            if !(g.start_s >= 0.0 && g.length_s > 0.0 && g.start_s + g.length_s <= canonical_duration_s()) {
                return bad("forced gap must lie inside the session".into());
            }
        }
        let f = &self.forceplate;
        if f.enabled {
            if !(f.sample_rate_hz.is_finite() && f.sample_rate_hz > 0.0 && (1000.0 / f.sample_rate_hz).fract() == 0.0) {
                return bad("forceplate.sample_rate_hz must give a whole-millisecond period".into());
            }
            if !range_ok(f.body_weight_range_n, 100.0) {
                return bad("forceplate.body_weight_range_n must be ordered and >= 100 N".into());
            }
            for v in [f.dz_m, f.excursion_base_m, f.excursion_per_mps, f.excursion_jitter_m, f.couple_noise_nm, f.cop_noise_m] {
                if !(v.is_finite() && v >= 0.0) {
                    return bad("forceplate geometry and noise settings must be >= 0".into());
                }
            }
        }
        for p in [self.vitals.missing_probability, self.surveys.missing_probability] {
            if !(0.0..=1.0).contains(&p) {
                return bad("missing probabilities must lie in [0, 1]".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn canonical_duration_s() -> f64 {
    canonical::LAYOUT.iter().map(|(_, m)| *m as f64 * 60.0).sum()
}
