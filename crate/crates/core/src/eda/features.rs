//! Per-activity EDA features, session standardization and extrema tallies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::ActivityId;

/// Location and population scale of a session signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: f64,
    pub std: f64,
}

impl ZScore {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(CoreError::TooShort(format!(
                "standardization needs at least 2 values (got {})",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(i));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std == 0.0 || std <= 4.0 * f64::EPSILON * mean.abs() {
            return Err(CoreError::ZeroVariance);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// `(x - mean) / std` with population statistics of `values` itself.
pub fn zscore_standardize(values: &[f64]) -> Result<Vec<f64>> {
    let z = ZScore::fit(values)?;
    Ok(values.iter().map(|&v| z.apply(v)).collect())
}

/// Raw material for one activity's features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityScrs {
    pub activity: ActivityId,
    /// Valid tonic samples divided by the sample rate.
    pub duration_s: f64,
    pub mean_tonic: f64,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaActivityFeatures {
    pub activity_id: ActivityId,
    pub mean_tonic: f64,
    /// `None` when the activity has no SCRs.
    pub mean_scr_amplitude: Option<f64>,
    pub scr_count: usize,
    pub duration_s: f64,
    /// SCRs per second.
    pub scr_rate: f64,
    /// Activity rate minus the whole-session rate.
    pub standardized_scr_rate: f64,
}

/// Total SCR count over total duration.
pub fn session_scr_rate(activities: &[ActivityScrs]) -> Result<f64> {
    let duration: f64 = activities.iter().map(|a| a.duration_s).sum();
    if !(duration > 0.0) {
        return Err(CoreError::ZeroDuration("session".into()));
    }
    let count: usize = activities.iter().map(|a| a.amplitudes.len()).sum();
    Ok(count as f64 / duration)
}

pub fn scr_rate_features(activities: &[ActivityScrs], session_rate: f64) -> Result<Vec<EdaActivityFeatures>> {
    activities
        .iter()
        .map(|a| {
            if !(a.duration_s > 0.0) {
                return Err(CoreError::ZeroDuration(a.activity.to_string()));
            }
            let count = a.amplitudes.len();
            let rate = count as f64 / a.duration_s;
            let mean_amp = (count > 0).then(|| a.amplitudes.iter().sum::<f64>() / count as f64);
            Ok(EdaActivityFeatures {
                activity_id: a.activity.clone(),
                mean_tonic: a.mean_tonic,
                mean_scr_amplitude: mean_amp,
                scr_count: count,
                duration_s: a.duration_s,
                scr_rate: rate,
                standardized_scr_rate: rate - session_rate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdaFeature {
    MeanTonic,
    MeanScrAmplitude,
    ScrFrequency,
}

impl EdaFeature {
    pub const ALL: [EdaFeature; 3] = [EdaFeature::MeanTonic, EdaFeature::MeanScrAmplitude, EdaFeature::ScrFrequency];

    pub fn value(&self, f: &EdaActivityFeatures) -> Option<f64> {
        match self {
            EdaFeature::MeanTonic => Some(f.mean_tonic),
            EdaFeature::MeanScrAmplitude => f.mean_scr_amplitude,
            EdaFeature::ScrFrequency => Some(f.scr_rate),
        }
        .filter(|v| v.is_finite())
    }

    pub fn label(&self) -> &'static str {
        match self {
            EdaFeature::MeanTonic => "mean_tonic",
            EdaFeature::MeanScrAmplitude => "mean_scr_amplitude",
            EdaFeature::ScrFrequency => "scr_frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Max,
    Min,
}

/// A participant whose extremum was shared by several activities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiedExtremum {
    pub participant: u32,
    pub feature: EdaFeature,
    pub extremum: Extremum,
    pub activities: Vec<ActivityId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtremaTally {
    pub participants: usize,
    /// `(feature, activity) -> (max count, min count)`
    pub counts: BTreeMap<(EdaFeature, ActivityId), (usize, usize)>,
    pub ties: Vec<TiedExtremum>,
}

impl ExtremaTally {
    pub fn max_count(&self, feature: EdaFeature, activity: &str) -> usize {
        self.counts
            .get(&(feature, ActivityId::new(activity)))
            .map_or(0, |c| c.0)
    }

    pub fn min_count(&self, feature: EdaFeature, activity: &str) -> usize {
        self.counts
            .get(&(feature, ActivityId::new(activity)))
            .map_or(0, |c| c.1)
    }

    /// Activity with the largest count for `feature` and `extremum`, with ties
    /// broken by label order.
    pub fn most_frequent(&self, feature: EdaFeature, extremum: Extremum) -> Option<(ActivityId, usize)> {
        self.counts
            .iter()
            .filter(|((f, _), _)| *f == feature)
            .map(|((_, a), c)| (a.clone(), if extremum == Extremum::Max { c.0 } else { c.1 }))
            .fold(None, |best: Option<(ActivityId, usize)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }
}

/// For every participant and feature, count the activities holding the
/// maximum and minimum value. Tied activities each receive a count and the
/// tie is recorded.
pub fn extrema_tally(features: &BTreeMap<u32, Vec<EdaActivityFeatures>>) -> Result<ExtremaTally> {
    let mut tally = ExtremaTally {
        participants: features.len(),
        ..Default::default()
    };
    for (&pid, rows) in features {
        if rows.len() < 2 {
            return Err(CoreError::InsufficientData(format!(
                "participant {pid} has features for {} activities, need at least 2",
                rows.len()
            )));
        }
        for feature in EdaFeature::ALL {
            let vals: Vec<(&ActivityId, f64)> = rows
                .iter()
                .filter_map(|r| feature.value(r).map(|v| (&r.activity_id, v)))
                .collect();
            if vals.is_empty() {
                continue;
            }
            for extremum in [Extremum::Max, Extremum::Min] {
                let target = vals
                    .iter()
                    .map(|v| v.1)
                    .fold(if extremum == Extremum::Max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
                        if extremum == Extremum::Max {
                            a.max(b)
                        } else {
                            a.min(b)
                        }
                    });
                let winners: Vec<ActivityId> = vals
                    .iter()
                    .filter(|v| v.1 == target)
                    .map(|v| v.0.clone())
                    .collect();
                for a in &winners {
                    let c = tally.counts.entry((feature, a.clone())).or_insert((0, 0));
                    match extremum {
                        Extremum::Max => c.0 += 1,
                        Extremum::Min => c.1 += 1,
                    }
                }
                if winners.len() > 1 {
                    tally.ties.push(TiedExtremum {
                        participant: pid,
                        feature,
                        extremum,
                        activities: winners,
                    });
                }
            }
        }
    }
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(activity: &str, tonic: f64, amp: Option<f64>, rate: f64) -> EdaActivityFeatures {
        EdaActivityFeatures {
            activity_id: activity.into(),
            mean_tonic: tonic,
            mean_scr_amplitude: amp,
            scr_count: 0,
            duration_s: 180.0,
            scr_rate: rate,
            standardized_scr_rate: 0.0,
        }
    }

    #[test]
    fn zscore_of_one_two_three() {
        let z = zscore_standardize(&[1.0, 2.0, 3.0]).unwrap();
        let e = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((z[0] + e).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - e).abs() < 1e-12);
        assert!((e - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn zscore_rejects_constant_and_short() {
        assert_eq!(zscore_standardize(&[4.0; 5]).unwrap_err(), CoreError::ZeroVariance);
        assert!(zscore_standardize(&[1.0]).is_err());
    }

    #[test]
    fn rates() {
        let acts = vec![
            ActivityScrs {
                activity: "a".into(),
                duration_s: 180.0,
                mean_tonic: 1.0,
                amplitudes: vec![0.1; 6],
            },
            ActivityScrs {
                activity: "b".into(),
                duration_s: 120.0,
                mean_tonic: 1.0,
                amplitudes: vec![],
            },
        ];
        let f = scr_rate_features(&acts, 0.02).unwrap();
        assert!((f[0].scr_rate - 6.0 / 180.0).abs() < 1e-15);
        assert!((f[0].standardized_scr_rate - (6.0 / 180.0 - 0.02)).abs() < 1e-15);
        assert_eq!(f[1].mean_scr_amplitude, None);
        assert!((session_scr_rate(&acts).unwrap() - 6.0 / 300.0).abs() < 1e-15);

        let mut zero = acts.clone();
        zero[1].duration_s = 0.0;
        assert!(matches!(scr_rate_features(&zero, 0.0), Err(CoreError::ZeroDuration(_))));
    }

    #[test]
    fn monotone_participant() {
        let rows: Vec<_> = ["baseline", "middle", "pepper_interview"]
            .iter()
            .enumerate()
            .map(|(i, a)| row(a, i as f64, Some(0.2), 0.01))
            .collect();
        let t = extrema_tally(&BTreeMap::from([(1, rows)])).unwrap();
        assert_eq!(t.max_count(EdaFeature::MeanTonic, "pepper_interview"), 1);
        assert_eq!(t.min_count(EdaFeature::MeanTonic, "baseline"), 1);
        // constant amplitude ties on every activity
        assert_eq!(t.max_count(EdaFeature::MeanScrAmplitude, "middle"), 1);
        assert!(t.ties.iter().any(|x| x.feature == EdaFeature::MeanScrAmplitude && x.activities.len() == 3));
    }

    #[test]
    fn too_few_activities() {
        let t = extrema_tally(&BTreeMap::from([(1, vec![row("a", 1.0, None, 0.0)])]));
        assert!(matches!(t, Err(CoreError::InsufficientData(_))));
    }
}
