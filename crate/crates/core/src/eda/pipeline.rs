//! Whole-session EDA processing: regrid, repair, filter, decompose, and
//! summarize per activity.

use serde::{Deserialize, Serialize};

use super::cda::{cda_decompose, CdaParams, EdaDecomposition};
use super::features::{scr_rate_features, session_scr_rate, ActivityScrs, EdaActivityFeatures, ZScore};
use super::filter::butterworth_filter;
use super::gaps::{fill_gaps, regularize, Gap};
use crate::error::{CoreError, Result};
use crate::model::{segment_signal, ActivityId, ActivityTimeline, IndexRange, Millis, SampledSignal, TimedSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaConfig {
    pub sample_rate_hz: f64,
    pub max_fill_s: f64,
    pub cutoff_hz: f64,
    pub filter_order: usize,
    pub cda: CdaParams,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 4.0,
            max_fill_s: 2.0,
            cutoff_hz: 0.35,
            filter_order: 1,
            cda: CdaParams::default(),
        }
    }
}

/// An SCR placed on the session clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScr {
    pub onset_ms: Millis,
    pub peak_ms: Millis,
    pub driver_peak_ms: Millis,
    pub amplitude: f64,
    pub activity: Option<ActivityId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDecomposition {
    pub range: IndexRange,
    pub decomposition: EdaDecomposition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEda {
    /// Regridded, repaired and filtered input.
    pub signal: SampledSignal,
    pub unfilled_gaps: Vec<Gap>,
    /// Valid runs too short to decompose.
    pub short_runs: Vec<IndexRange>,
    pub runs: Vec<RunDecomposition>,
    /// Tonic over the whole grid; every excluded sample is a gap.
    pub tonic: SampledSignal,
    pub scrs: Vec<SessionScr>,
    pub session_scr_rate: f64,
    /// Session statistics of the tonic signal.
    pub tonic_scale: Option<ZScore>,
    pub features: Vec<EdaActivityFeatures>,
}

impl SessionEda {
    /// Per-activity mean tonic standardized with the session statistics.
    pub fn standardized_tonic_means(&self) -> Vec<(ActivityId, f64)> {
        match self.tonic_scale {
            Some(z) => self
                .features
                .iter()
                .map(|f| (f.activity_id.clone(), z.apply(f.mean_tonic)))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn feature(&self, activity: &str) -> Option<&EdaActivityFeatures> {
        self.features.iter().find(|f| f.activity_id.as_str() == activity)
    }
}

/// Run the full chain on one raw EDA channel over `timeline`.
pub fn process_session_eda(raw: &TimedSeries, timeline: &ActivityTimeline, config: &EdaConfig) -> Result<SessionEda> {
    let span = (timeline.start_ms(), timeline.end_ms());
    let grid = regularize(raw, config.sample_rate_hz, Some(span))?;
    let (filled, unfilled_gaps) = fill_gaps(&grid, config.max_fill_s)?;
    let signal = butterworth_filter(&filled, config.cutoff_hz, config.filter_order)?;

    let n = signal.len();
    let mut tonic = vec![f64::NAN; n];
    let mut valid = vec![false; n];
    let mut short_runs = Vec::new();
    let mut runs = Vec::new();
    let mut scrs = Vec::new();
    for run in signal.valid_runs() {
        let chunk = signal.slice(run);
        if chunk.duration_s() < config.cda.min_duration_s {
            short_runs.push(run);
            continue;
        }
        let d = cda_decompose(&chunk, &config.cda)?;
        tonic[run.start..run.end].copy_from_slice(d.tonic.values());
        valid[run.start..run.end].iter_mut().for_each(|v| *v = true);
        for e in &d.scrs {
            let driver_peak_ms = chunk.timestamp_at(e.driver_peak_index);
            scrs.push(SessionScr {
                onset_ms: chunk.timestamp_at(e.onset_index),
                peak_ms: chunk.timestamp_at(e.peak_index),
                driver_peak_ms,
                amplitude: e.amplitude,
                activity: timeline.activity_at(driver_peak_ms).map(|s| s.activity.clone()),
            });
        }
        runs.push(RunDecomposition {
            range: run,
            decomposition: d,
        });
    }

    let excluded = false_runs(&valid);
    let tonic = signal.with_values(tonic).with_gaps(excluded)?;
    let valid_tonic: Vec<f64> = tonic
        .values()
        .iter()
        .zip(&valid)
        .filter(|(_, &ok)| ok)
        .map(|(v, _)| *v)
        .collect();
    let tonic_scale = ZScore::fit(&valid_tonic).ok();

    let mut activities = Vec::new();
    for chunk in segment_signal(&tonic, timeline)? {
        let Some(sig) = chunk.signal else { continue };
        let kept: Vec<f64> = sig
            .valid_runs()
            .iter()
            .flat_map(|r| sig.values()[r.start..r.end].iter().copied())
            .collect();
        if kept.is_empty() {
            continue;
        }
        let amplitudes = scrs
            .iter()
            .filter(|s| s.activity.as_ref() == Some(&chunk.activity))
            .map(|s| s.amplitude)
            .collect();
        activities.push(ActivityScrs {
            activity: chunk.activity,
            duration_s: kept.len() as f64 / sig.sample_rate_hz(),
            mean_tonic: kept.iter().sum::<f64>() / kept.len() as f64,
            amplitudes,
        });
    }
    if activities.is_empty() {
        return Err(CoreError::InsufficientData(
            "no activity has a decomposable stretch of signal".into(),
        ));
    }
    let session_rate = session_scr_rate(&activities)?;
    let features = scr_rate_features(&activities, session_rate)?;

    Ok(SessionEda {
        signal,
        unfilled_gaps,
        short_runs,
        runs,
        tonic,
        scrs,
        session_scr_rate: session_rate,
        tonic_scale,
        features,
    })
}

fn false_runs(mask: &[bool]) -> Vec<IndexRange> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i < mask.len() && !mask[i] {
            i += 1;
        }
        out.push(IndexRange::new(s, i));
    }
    out
}
