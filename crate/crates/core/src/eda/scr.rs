//! Skin conductance response events read off a decomposition.

use serde::{Deserialize, Serialize};

use super::cda::{difference_noise_scale, EdaDecomposition};

/// One SCR. Indices refer to the decomposed signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrEvent {
    /// Last sample before the driver rose above threshold.
    pub onset_index: usize,
    /// Maximum of the phasic response.
    pub peak_index: usize,
    /// Maximum of the driver burst.
    pub driver_peak_index: usize,
    /// Phasic rise from onset to peak, microsiemens.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScrParams {
    pub min_amplitude_us: f64,
    /// Driver threshold floor, microsiemens per second.
    pub driver_floor: f64,
    /// Driver threshold as a multiple of its robust noise scale.
    pub noise_multiple: f64,
    /// How far past the driver burst to look for the phasic peak.
    pub peak_search_s: f64,
}

impl Default for ScrParams {
    fn default() -> Self {
        Self {
            min_amplitude_us: 0.05,
            driver_floor: 0.01,
            noise_multiple: 3.0,
            peak_search_s: 5.0,
        }
    }
}

/// Events with amplitude at least `min_amplitude` (microsiemens), using the
/// default thresholds otherwise.
pub fn extract_scrs(decomposition: &EdaDecomposition, min_amplitude: f64) -> Vec<ScrEvent> {
    extract_scrs_with(
        decomposition,
        &ScrParams {
            min_amplitude_us: min_amplitude,
            ..ScrParams::default()
        },
    )
}

pub fn extract_scrs_with(decomposition: &EdaDecomposition, params: &ScrParams) -> Vec<ScrEvent> {
    let driver = decomposition.driver.values();
    let phasic = decomposition.phasic.values();
    let n = driver.len().min(phasic.len());
    if n < 3 {
        return Vec::new();
    }
    let threshold = params
        .driver_floor
        .max(params.noise_multiple * difference_noise_scale(&driver[..n]));

    let mut bursts = Vec::new();
    let mut i = 0;
    while i < n {
        if driver[i] <= threshold {
            i += 1;
            continue;
        }
        let s = i;
        while i < n && driver[i] > threshold {
            i += 1;
        }
        bursts.push((s, i));
    }

    let search = (params.peak_search_s * decomposition.driver.sample_rate_hz()).ceil() as usize;
    let mut out = Vec::new();
    for (k, &(s, e)) in bursts.iter().enumerate() {
        if s == 0 {
            continue;
        }
        let onset = s - 1;
        let dpeak = argmax(&driver[s..e]) + s;
        let limit = bursts
            .get(k + 1)
            .map_or(n, |next| next.0)
            .min(dpeak + search + 1)
            .min(n);
        let peak = argmax(&phasic[dpeak..limit]) + dpeak;
        let amplitude = phasic[peak] - phasic[onset];
        if peak > onset && amplitude >= params.min_amplitude_us {
            out.push(ScrEvent {
                onset_index: onset,
                peak_index: peak,
                driver_peak_index: dpeak,
                amplitude,
            });
        }
    }
    out
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
