//! Force-plate center of pressure, radial displacement features and
//! per-speed correlation over the treadmill stages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{canonical, ActivityTimeline, Millis};
use crate::stats::{mean_correlation_clamped, pearson, MeanCorrelation, SkippedPair};

/// Samples with `|fz|` below this many newtons are treated as unloaded.
pub const DEFAULT_UNLOAD_THRESHOLD_N: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcePlateSample {
    pub t: Millis,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl ForcePlateSample {
    pub fn is_finite(&self) -> bool {
        [self.fx, self.fy, self.fz, self.mx, self.my, self.mz]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            t: self.t,
            fx: k * self.fx,
            fy: k * self.fy,
            fz: k * self.fz,
            mx: k * self.mx,
            my: k * self.my,
            mz: k * self.mz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateId {
    Left,
    Right,
}

impl PlateId {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlateId::Left => "left",
            PlateId::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateGeometry {
    pub plate_id: PlateId,
    /// Plate depth in meters.
    pub dz: f64,
}

impl PlateGeometry {
    pub fn new(plate_id: PlateId, dz: f64) -> Result<Self> {
        if !(dz >= 0.0 && dz.is_finite()) {
            return Err(CoreError::InvalidSignal(format!("plate depth must be >= 0 (got {dz})")));
        }
        Ok(Self { plate_id, dz })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopPoint {
    pub t: Millis,
    pub xp: f64,
    pub yp: f64,
    pub tz: f64,
}

/// Center of pressure and couple, or `None` for an unloaded sample.
pub fn compute_cop(sample: &ForcePlateSample, geom: &PlateGeometry) -> Option<CopPoint> {
    compute_cop_with(sample, geom, DEFAULT_UNLOAD_THRESHOLD_N)
}

pub fn compute_cop_with(sample: &ForcePlateSample, geom: &PlateGeometry, unload_threshold_n: f64) -> Option<CopPoint> {
    let s = sample;
    if !(s.fz.abs() >= unload_threshold_n) || s.fz == 0.0 || !s.is_finite() {
        return None;
    }
    let xp = (-s.my + s.fx * geom.dz) / s.fz;
    let yp = (s.mx + s.fy * geom.dz) / s.fz;
    let tz = s.mz - xp * s.fy + yp * s.fx;
    Some(CopPoint { t: s.t, xp, yp, tz })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CopTrajectory {
    pub points: Vec<CopPoint>,
    /// Input indices dropped as unloaded or non-finite.
    pub unloaded: Vec<usize>,
}

pub fn cop_trajectory(samples: &[ForcePlateSample], geom: &PlateGeometry, unload_threshold_n: f64) -> CopTrajectory {
    let mut out = CopTrajectory::default();
    for (i, s) in samples.iter().enumerate() {
        match compute_cop_with(s, geom, unload_threshold_n) {
            Some(p) => out.points.push(p),
            None => out.unloaded.push(i),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopFeatures {
    pub mean_radial_displacement: f64,
    pub std_radial_displacement: f64,
    /// `None` when the radii have no spread.
    pub skewness_radial: Option<f64>,
    pub kurtosis_radial: Option<f64>,
    pub mean_couple: f64,
    pub stage_speed: Option<f64>,
    pub samples: usize,
}

/// Population moments of the distances from the trajectory centroid.
pub fn radial_features(points: &[CopPoint]) -> Result<CopFeatures> {
    if points.len() < 4 {
        return Err(CoreError::InsufficientData(format!(
            "radial features need at least 4 loaded samples (got {})",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.xp).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.yp).sum::<f64>() / n;
    let radii: Vec<f64> = points.iter().map(|p| (p.xp - cx).hypot(p.yp - cy)).collect();
    let mean = radii.iter().sum::<f64>() / n;
    let moment = |k: i32| radii.iter().map(|r| (r - mean).powi(k)).sum::<f64>() / n;
    let m2 = moment(2);
    let std = m2.sqrt();
    let degenerate = std <= 1e-12 * mean.abs().max(1e-300) || std == 0.0;
    let (skew, kurt) = if degenerate {
        (None, None)
    } else {
        (Some(moment(3) / std.powi(3)), Some(moment(4) / (m2 * m2)))
    };
    Ok(CopFeatures {
        mean_radial_displacement: mean,
        std_radial_displacement: std,
        skewness_radial: skew,
        kurtosis_radial: kurt,
        mean_couple: points.iter().map(|p| p.tz).sum::<f64>() / n,
        stage_speed: None,
        samples: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruceStage {
    pub stage: u8,
    pub duration_s: f64,
    pub speed_mps: f64,
}

pub const BRUCE_PROTOCOL: [BruceStage; 4] = [
    BruceStage { stage: 1, duration_s: 180.0, speed_mps: 0.4 },
    BruceStage { stage: 2, duration_s: 180.0, speed_mps: 0.8 },
    BruceStage { stage: 3, duration_s: 180.0, speed_mps: 1.2 },
    BruceStage { stage: 4, duration_s: 180.0, speed_mps: 1.6 },
];

/// Four consecutive stages starting at `start_ms`.
pub fn bruce_timeline(start_ms: Millis) -> ActivityTimeline {
    ActivityTimeline::from_layout(
        start_ms,
        canonical::BRUCE_STAGES
            .iter()
            .zip(BRUCE_PROTOCOL.iter())
            .map(|(l, s)| (*l, s.duration_s)),
    )
    .expect("protocol layout is valid")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSplit {
    /// In speed order; only stages with points.
    pub stages: Vec<(BruceStage, Vec<CopPoint>)>,
    /// Stage numbers with no points or no timeline segment.
    pub absent: Vec<u8>,
}

/// Split a trajectory along the `bruce_stage_*` segments of `timeline`.
pub fn stage_segment(points: &[CopPoint], timeline: &ActivityTimeline) -> StageSplit {
    let mut out = StageSplit::default();
    for (label, stage) in canonical::BRUCE_STAGES.iter().zip(BRUCE_PROTOCOL) {
        let chunk: Vec<CopPoint> = timeline
            .get(label)
            .map(|seg| points.iter().filter(|p| seg.contains(p.t)).copied().collect())
            .unwrap_or_default();
        if chunk.is_empty() {
            out.absent.push(stage.stage);
        } else {
            out.stages.push((stage, chunk));
        }
    }
    out
}

/// Features of every present stage, tagged with the stage speed.
pub fn stage_features(split: &StageSplit) -> Result<Vec<CopFeatures>> {
    split
        .stages
        .iter()
        .map(|(stage, pts)| {
            let mut f = radial_features(pts)?;
            f.stage_speed = Some(stage.speed_mps);
            Ok(f)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopFeatureName {
    MeanRadial,
    StdRadial,
    Skewness,
    Kurtosis,
    MeanCouple,
}

impl CopFeatureName {
    pub const ALL: [CopFeatureName; 5] = [
        CopFeatureName::MeanRadial,
        CopFeatureName::StdRadial,
        CopFeatureName::Skewness,
        CopFeatureName::Kurtosis,
        CopFeatureName::MeanCouple,
    ];

    pub fn value(&self, f: &CopFeatures) -> Option<f64> {
        match self {
            CopFeatureName::MeanRadial => Some(f.mean_radial_displacement),
            CopFeatureName::StdRadial => Some(f.std_radial_displacement),
            CopFeatureName::Skewness => f.skewness_radial,
            CopFeatureName::Kurtosis => f.kurtosis_radial,
            CopFeatureName::MeanCouple => Some(f.mean_couple),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CopFeatureName::MeanRadial => "mean_radial_displacement",
            CopFeatureName::StdRadial => "std_radial_displacement",
            CopFeatureName::Skewness => "skewness_radial",
            CopFeatureName::Kurtosis => "kurtosis_radial",
            CopFeatureName::MeanCouple => "mean_couple",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCorrelation {
    pub feature: CopFeatureName,
    pub mean: MeanCorrelation,
    pub pairs: Vec<((u32, u32), f64)>,
    pub skipped: Vec<SkippedPair>,
}

fn speed_key(speed: f64) -> i64 {
    (speed * 1000.0).round() as i64
}

/// Pearson between participants over their feature-versus-speed profiles,
/// averaged in Fisher-z space with perfect correlations clamped.
pub fn speed_feature_correlation(
    features: &BTreeMap<u32, Vec<CopFeatures>>,
    feature: CopFeatureName,
) -> Result<SpeedCorrelation> {
    let profiles: BTreeMap<u32, BTreeMap<i64, f64>> = features
        .iter()
        .map(|(&pid, rows)| {
            let m = rows
                .iter()
                .filter_map(|f| Some((speed_key(f.stage_speed?), feature.value(f)?)))
                .filter(|(_, v)| v.is_finite())
                .collect();
            (pid, m)
        })
        .collect();
    let eligible = profiles.values().filter(|p| p.len() >= 3).count();
    if eligible < 2 {
        return Err(CoreError::InsufficientData(format!(
            "need 2 participants with at least 3 speeds (got {eligible})"
        )));
    }
    let ids: Vec<u32> = profiles.keys().copied().collect();
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let (x, y): (Vec<f64>, Vec<f64>) = profiles[&a]
                .iter()
                .filter_map(|(k, va)| profiles[&b].get(k).map(|vb| (*va, *vb)))
                .unzip();
            match pearson(&x, &y) {
                Ok(r) => pairs.push(((a, b), r)),
                Err(e) => skipped.push(SkippedPair {
                    pair: (a, b),
                    reason: e.to_string(),
                }),
            }
        }
    }
    let rs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mean = mean_correlation_clamped(&rs)?;
    Ok(SpeedCorrelation {
        feature,
        mean,
        pairs,
        skipped,
    })
}
