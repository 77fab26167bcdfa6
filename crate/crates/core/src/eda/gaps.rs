//! Missing-sample detection, uniform regridding and short-gap repair.

use serde::{Deserialize, Serialize};

use super::spline::{Boundary, CubicSpline};
use crate::error::{CoreError, Result};
use crate::model::{IndexRange, Millis, SampledSignal, TimedSeries};

/// Inter-sample spacing above this multiple of the nominal period counts as loss.
pub const GAP_SPACING_FACTOR: f64 = 1.5;

/// Present samples taken from each side of a gap as spline knots.
pub const FILL_CONTEXT: usize = 8;

/// Missing samples on the uniform grid, `[start, end)` in grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub range: IndexRange,
    pub duration_s: f64,
}

fn grid_index(t: Millis, origin: Millis, rate_hz: f64) -> i64 {
    ((t - origin) as f64 * rate_hz / 1000.0).round() as i64
}

/// Find runs of lost samples in a raw timestamped series. Indices refer to
/// the uniform grid anchored at the first sample.
pub fn detect_gaps(series: &TimedSeries, expected_rate_hz: f64) -> Vec<Gap> {
    if series.len() < 2 || !(expected_rate_hz > 0.0) {
        return Vec::new();
    }
    let period_ms = 1000.0 / expected_rate_hz;
    let origin = series.t_ms[0];
    series
        .t_ms
        .windows(2)
        .filter(|w| (w[1] - w[0]) as f64 > GAP_SPACING_FACTOR * period_ms)
        .map(|w| {
            let start = grid_index(w[0], origin, expected_rate_hz) + 1;
            let end = grid_index(w[1], origin, expected_rate_hz).max(start + 1);
            let range = IndexRange::new(start as usize, end as usize);
            Gap {
                range,
                duration_s: range.len() as f64 / expected_rate_hz,
            }
        })
        .collect()
}

/// Place a raw series on a uniform grid. Grid cells without a sample become
/// gaps with `NaN` placeholders. With `span = Some((start, end))` the grid
/// covers `[start, end)`, so late starts and early stops show up as head and
/// tail gaps; otherwise it runs from the first to the last sample.
pub fn regularize(series: &TimedSeries, rate_hz: f64, span: Option<(Millis, Millis)>) -> Result<SampledSignal> {
    if series.is_empty() {
        return Err(CoreError::TooShort("series has no samples".into()));
    }
    let bad = series.non_monotonic_indices();
    if !bad.is_empty() {
        return Err(CoreError::NonMonotonic {
            source_name: "series".into(),
            indices: bad,
        });
    }
    let (origin, len) = match span {
        Some((s, e)) => {
            if e <= s {
                return Err(CoreError::InvalidSignal("empty regularization span".into()));
            }
            let len = ((e - s) as f64 * rate_hz / 1000.0).ceil() as usize;
            (s, len)
        }
        None => {
            let last = *series.t_ms.last().unwrap();
            (series.t_ms[0], grid_index(last, series.t_ms[0], rate_hz) as usize + 1)
        }
    };
    let mut values = vec![f64::NAN; len];
    let mut present = vec![false; len];
    for (&t, &v) in series.t_ms.iter().zip(&series.values) {
        let idx = grid_index(t, origin, rate_hz);
        if idx < 0 || idx as usize >= len {
            continue;
        }
        let idx = idx as usize;
        if !present[idx] {
            present[idx] = true;
            values[idx] = v;
        }
    }
    let gaps = missing_runs(&present);
    SampledSignal::new(rate_hz, origin, values, series.unit)?.with_gaps(gaps)
}

fn missing_runs(present: &[bool]) -> Vec<IndexRange> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < present.len() {
        if present[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i < present.len() && !present[i] {
            i += 1;
        }
        out.push(IndexRange::new(s, i));
    }
    out
}

/// Fill every interior gap lasting at most `max_fill_s` with a not-a-knot
/// cubic spline through the neighbouring present samples. Longer gaps and
/// gaps touching either end stay annotated and are returned.
pub fn fill_gaps(signal: &SampledSignal, max_fill_s: f64) -> Result<(SampledSignal, Vec<Gap>)> {
    let rate = signal.sample_rate_hz();
    let len = signal.len();
    let gaps = signal.gaps().to_vec();
    let mut in_gap = vec![false; len];
    for g in &gaps {
        in_gap[g.start..g.end].iter_mut().for_each(|b| *b = true);
    }

    let mut values = signal.values().to_vec();
    let mut remaining = Vec::new();
    let mut unfilled = Vec::new();
    for g in &gaps {
        let duration_s = g.len() as f64 / rate;
        let gap = Gap { range: *g, duration_s };
        let interior = g.start > 0 && g.end < len;
        if !interior || duration_s > max_fill_s + 1e-9 {
            remaining.push(*g);
            unfilled.push(gap);
            continue;
        }
        let left = (0..g.start).rev().filter(|&i| !in_gap[i]).take(FILL_CONTEXT);
        let right = (g.end..len).filter(|&i| !in_gap[i]).take(FILL_CONTEXT);
        let mut knots: Vec<usize> = left.chain(right).collect();
        knots.sort_unstable();
        let xs: Vec<f64> = knots.iter().map(|&i| i as f64).collect();
        let ys: Vec<f64> = knots.iter().map(|&i| signal.values()[i]).collect();
        let spline = CubicSpline::new(&xs, &ys, Boundary::NotAKnot)?;
        for i in g.start..g.end {
            values[i] = spline.eval(i as f64);
        }
    }
    let out = signal.with_values(values).with_gaps(remaining)?;
    Ok((out, unfilled))
}
