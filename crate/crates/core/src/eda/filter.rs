//! Low-pass Butterworth filtering via the bilinear transform, applied
//! forward-backward for zero phase.

use crate::error::{CoreError, Result};
use crate::model::SampledSignal;

/// One second-order (or first-order, with zero trailing taps) section:
/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Section {
    b: [f64; 3],
    a: [f64; 2],
}

impl Section {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Direct form I, with the history set to the steady state of a constant
    /// input equal to `x[0]`.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let Some(&x0) = x.first() else {
            return Vec::new();
        };
        let y0 = self.dc_gain() * x0;
        let (mut x1, mut x2, mut y1, mut y2) = (x0, x0, y0, y0);
        x.iter()
            .map(|&xn| {
                let yn = self.b[0] * xn + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                x2 = x1;
                x1 = xn;
                y2 = y1;
                y1 = yn;
                yn
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    order: usize,
    sections: Vec<Section>,
}

impl Butterworth {
    /// Digital low-pass of the given order with a prewarped cutoff, so the
    /// magnitude at `cutoff_hz` is exactly `1/sqrt(2)`.
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        let nyquist = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0) || cutoff_hz >= nyquist {
            return Err(CoreError::CutoffAboveNyquist {
                cutoff_hz,
                nyquist_hz: nyquist,
            });
        }
        if order == 0 || order > 16 {
            return Err(CoreError::InvalidSignal(format!(
                "filter order must be 1..=16 (got {order})"
            )));
        }
        let fs2 = 2.0 * sample_rate_hz;
        let warped = fs2 * (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
        let mut sections = Vec::new();
        for k in 0..order / 2 {
            let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let (re, im) = (warped * theta.cos(), warped * theta.sin());
            // z = (fs2 + p) / (fs2 - p)
            let (nr, ni) = (fs2 + re, im);
            let (dr, di) = (fs2 - re, -im);
            let den = dr * dr + di * di;
            let zr = (nr * dr + ni * di) / den;
            let zi = (ni * dr - nr * di) / den;
            let a1 = -2.0 * zr;
            let a2 = zr * zr + zi * zi;
            let g = (1.0 + a1 + a2) / 4.0;
            sections.push(Section {
                b: [g, 2.0 * g, g],
                a: [a1, a2],
            });
        }
        if order % 2 == 1 {
            let zp = (fs2 - warped) / (fs2 + warped);
            let g = (1.0 - zp) / 2.0;
            sections.push(Section {
                b: [g, g, 0.0],
                a: [-zp, 0.0],
            });
        }
        Ok(Self { order, sections })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Single causal pass.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        self.sections.iter().fold(x.to_vec(), |acc, s| s.run(&acc))
    }

    /// Forward-backward pass with odd-reflection padding at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * (self.order + 1)).min(n - 1);
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }

    /// |H(e^{jw})| of one pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        self.sections
            .iter()
            .map(|s| {
                let nr = s.b[0] + s.b[1] * c1 + s.b[2] * c2;
                let ni = -(s.b[1] * s1 + s.b[2] * s2);
                let dr = 1.0 + s.a[0] * c1 + s.a[1] * c2;
                let di = -(s.a[0] * s1 + s.a[1] * s2);
                ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
            })
            .product()
    }
}

/// Zero-phase low-pass of every gap-free run of `signal`. Gap samples are
/// passed through untouched.
pub fn butterworth_filter(signal: &SampledSignal, cutoff_hz: f64, order: usize) -> Result<SampledSignal> {
    let filter = Butterworth::lowpass(order, cutoff_hz, signal.sample_rate_hz())?;
    let mut values = signal.values().to_vec();
    for run in signal.valid_runs() {
        let y = filter.filtfilt(&values[run.start..run.end]);
        values[run.start..run.end].copy_from_slice(&y);
    }
    Ok(signal.with_values(values))
}
