//! Continuous decomposition of skin conductance into a tonic level and a
//! nonnegative phasic driver convolved with a Bateman impulse response.
//!
//! The sampled Bateman kernel `b[n] = p1^n - p2^n` (with `p = exp(-dt/tau)`)
//! obeys a second-order linear recursion, so convolution and exact
//! deconvolution both run in O(N):
//!
//! ```text
//! y[n] = (p1 + p2) y[n-1] - p1 p2 y[n-2] + (p1 - p2) dt d[n-1]
//! ```
//!
//! The driver `d` is in microsiemens per second; an isolated unit-area
//! impulse produces a response `dt * b` whose peak is [`Bateman::peak_value`].
//!
//! Steps for a fixed `(tau1, tau2)`:
//! 1. deconvolve the whole signal into a raw driver;
//! 2. estimate the tonic driver on a coarse grid from low-driver samples and
//!    interpolate it with a spline;
//! 3. the phasic driver is the remainder, projected onto `d >= 0`.
//!
//! The time constants are chosen by a log-grid scan followed by Nelder-Mead
//! over a criterion combining clipped-reconstruction error, driver
//! negativity and driver spread. The final driver is polished by projected
//! gradient (FISTA) on the ridge-regularized nonnegative least-squares
//! problem.

use serde::{Deserialize, Serialize};

use super::scr::{extract_scrs_with, ScrEvent, ScrParams};
use super::spline::{Boundary, CubicSpline};
use crate::error::{CoreError, Result};
use crate::model::SampledSignal;

/// `b(t) = exp(-t/tau1) - exp(-t/tau2)` for `t > 0`, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bateman {
    pub tau1: f64,
    pub tau2: f64,
}

impl Bateman {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau2 > 0.0 && tau1 > tau2 && tau1.is_finite()) {
            return Err(CoreError::InvalidSignal(format!(
                "Bateman time constants need tau1 > tau2 > 0 (got {tau1}, {tau2})"
            )));
        }
        Ok(Self { tau1, tau2 })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-t / self.tau1).exp() - (-t / self.tau2).exp()
        }
    }

    /// Time of the response maximum after the impulse.
    pub fn peak_time(&self) -> f64 {
        self.tau1 * self.tau2 * (self.tau1 / self.tau2).ln() / (self.tau1 - self.tau2)
    }

    pub fn peak_value(&self) -> f64 {
        self.eval(self.peak_time())
    }
}

/// The Bateman kernel sampled at `dt`, as a recursion.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SampledKernel {
    c1: f64,
    c2: f64,
    gain: f64,
}

impl SampledKernel {
    pub(crate) fn new(b: Bateman, dt: f64) -> Self {
        let p1 = (-dt / b.tau1).exp();
        let p2 = (-dt / b.tau2).exp();
        Self {
            c1: p1 + p2,
            c2: p1 * p2,
            gain: (p1 - p2) * dt,
        }
    }

    /// `dt * sum b[n]`: the level reached under a unit constant driver.
    pub(crate) fn area(&self) -> f64 {
        self.gain / (1.0 - self.c1 + self.c2)
    }

    /// Exact inverse of [`Self::convolve_from`] with `y0 = y[0]`.
    pub(crate) fn deconvolve(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let mut d = Vec::with_capacity(n);
        for k in 0..n - 1 {
            let prev = if k == 0 { y[0] } else { y[k - 1] };
            d.push((y[k + 1] - self.c1 * y[k] + self.c2 * prev) / self.gain);
        }
        d.push(d[n - 2]);
        d
    }

    /// Response to `d` with a constant history equal to `y0`.
    pub(crate) fn convolve_from(&self, d: &[f64], y0: f64) -> Vec<f64> {
        let n = d.len();
        let mut y = Vec::with_capacity(n);
        if n == 0 {
            return y;
        }
        let (mut y1, mut y2) = (y0, y0);
        y.push(y0);
        for k in 1..n {
            let v = self.c1 * y1 - self.c2 * y2 + self.gain * d[k - 1];
            y2 = y1;
            y1 = v;
            y.push(v);
        }
        y
    }

    /// Response to `d` from rest.
    pub(crate) fn convolve_zero(&self, d: &[f64]) -> Vec<f64> {
        let n = d.len();
        let mut y = Vec::with_capacity(n);
        if n == 0 {
            return y;
        }
        let (mut y1, mut y2) = (0.0, 0.0);
        y.push(0.0);
        for k in 1..n {
            let v = self.c1 * y1 - self.c2 * y2 + self.gain * d[k - 1];
            y2 = y1;
            y1 = v;
            y.push(v);
        }
        y
    }

    /// Transpose of [`Self::convolve_zero`].
    pub(crate) fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        let rev: Vec<f64> = r.iter().rev().copied().collect();
        let mut out = self.convolve_zero(&rev);
        out.reverse();
        out
    }
}

/// Decomposition settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdaParams {
    pub tau1_s: f64,
    pub tau2_s: f64,
    /// Search `(tau1, tau2)`; otherwise the initial values are used as-is.
    pub optimize_tau: bool,
    pub tau1_range_s: (f64, f64),
    pub tau2_range_s: (f64, f64),
    pub grid_steps: usize,
    pub max_optimizer_iterations: usize,
    /// Spacing of the tonic baseline knots.
    pub tonic_grid_s: f64,
    pub compactness_weight: f64,
    /// Ridge penalty relative to the squared kernel gain.
    pub ridge: f64,
    pub refine_iterations: usize,
    pub min_duration_s: f64,
    pub scr: ScrParams,
}

impl Default for CdaParams {
    fn default() -> Self {
        Self {
            tau1_s: 2.0,
            tau2_s: 0.75,
            optimize_tau: true,
            tau1_range_s: (0.5, 8.0),
            tau2_range_s: (0.15, 2.5),
            grid_steps: 6,
            max_optimizer_iterations: 80,
            tonic_grid_s: 10.0,
            compactness_weight: 1.0,
            ridge: 1e-4,
            refine_iterations: 40,
            min_duration_s: 10.0,
            scr: ScrParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdaDiagnostics {
    pub converged: bool,
    pub evaluations: usize,
    pub criterion: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaDecomposition {
    pub tonic: SampledSignal,
    /// Phasic driver, nonnegative, in microsiemens per second.
    pub driver: SampledSignal,
    pub phasic: SampledSignal,
    pub scrs: Vec<ScrEvent>,
    pub residual_rmse: f64,
    pub kernel: Bateman,
    pub diagnostics: CdaDiagnostics,
}

struct Trial {
    tonic_driver: Vec<f64>,
    raw_driver: Vec<f64>,
    criterion: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust noise scale of white noise from first differences.
pub(crate) fn difference_noise_scale(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let mut d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = median(&mut d.clone());
    d.iter_mut().for_each(|v| *v = (*v - m).abs());
    1.4826 * median(&mut d) / std::f64::consts::SQRT_2
}

/// Tonic driver through coarse-grid knots placed on low-driver samples.
fn tonic_driver(raw: &[f64], window: usize) -> Vec<f64> {
    let n = raw.len();
    let window = window.clamp(4, n.max(4));
    let mut bounds: Vec<(usize, usize)> = (0..n).step_by(window).map(|s| (s, (s + window).min(n))).collect();
    if bounds.len() > 1 && bounds.last().map_or(false, |b| b.1 - b.0 < window / 2) {
        let last = bounds.pop().unwrap();
        bounds.last_mut().unwrap().1 = last.1;
    }
    let scale = median(&mut raw.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let thr = (3.0 * difference_noise_scale(raw)).max(0.01 * scale).max(1e-12);

    let constant = |v: f64| vec![v; n];
    let fit = |knots: &[(f64, f64)]| -> Vec<f64> {
        match knots.len() {
            0 => constant(median(&mut raw.to_vec())),
            1 => constant(knots[0].1),
            _ => {
                let (xs, ys): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
                let s = CubicSpline::new(&xs, &ys, Boundary::NotAKnot).expect("knots increase");
                (0..n).map(|i| s.eval(i as f64)).collect()
            }
        }
    };

    let mut knots: Vec<(f64, f64)> = bounds
        .iter()
        .map(|&(s, e)| (0.5 * (s + e - 1) as f64, median(&mut raw[s..e].to_vec())))
        .collect();
    let mut td = fit(&knots);
    for _ in 0..2 {
        knots = bounds
            .iter()
            .filter_map(|&(s, e)| {
                let low: Vec<usize> = (s..e).filter(|&i| raw[i] - td[i] < thr).collect();
                if low.len() < 3.max((e - s) / 5) {
                    return None;
                }
                let k = low.len() as f64;
                let x = low.iter().map(|&i| i as f64).sum::<f64>() / k;
                let y = low.iter().map(|&i| raw[i]).sum::<f64>() / k;
                Some((x, y))
            })
            .collect();
        td = fit(&knots);
    }
    td
}

fn evaluate(y: &[f64], dt: f64, b: Bateman, params: &CdaParams) -> Trial {
    let kernel = SampledKernel::new(b, dt);
    let raw = kernel.deconvolve(y);
    let window = (params.tonic_grid_s / dt).round() as usize;
    let td = tonic_driver(&raw, window);
    let tonic = kernel.convolve_from(&td, y[0]);

    let mut pos = Vec::with_capacity(y.len());
    let (mut neg_sq, mut all_sq) = (0.0, 0.0);
    for (&r, &t) in raw.iter().zip(&td).take(y.len() - 1) {
        let p = r - t;
        all_sq += p * p;
        if p < 0.0 {
            neg_sq += p * p;
        }
        pos.push(p.max(0.0));
    }
    pos.push(0.0);
    let phasic = kernel.convolve_zero(&pos);
    let n = y.len() as f64;
    let rmse = (y
        .iter()
        .zip(tonic.iter().zip(&phasic))
        .map(|(v, (t, p))| (v - t - p).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);
    let negativity = if all_sq > 0.0 { neg_sq / all_sq } else { 0.0 };
    let (l1, l2): (f64, f64) = pos.iter().fold((0.0, 0.0), |(a, b), &p| (a + p, b + p * p));
    let spread = if l2 > 0.0 { l1 * l1 / (n * l2) } else { 0.0 };
    let criterion = rmse / range.max(1e-12) + negativity + params.compactness_weight * spread;
    Trial {
        tonic_driver: td,
        raw_driver: raw,
        criterion,
    }
}

struct Simplex {
    best: [f64; 2],
    value: f64,
    evaluations: usize,
    converged: bool,
}

fn nelder_mead<F: FnMut([f64; 2]) -> f64>(mut f: F, start: [f64; 2], step: f64, max_iter: usize, tol: f64) -> Simplex {
    let mut pts = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = pts.map(&mut f);
    let mut evaluations = 3;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        let size = (0..2)
            .map(|k| (pts[1][k] - pts[0][k]).abs().max((pts[2][k] - pts[0][k]).abs()))
            .fold(0.0, f64::max);
        if (vals[2] - vals[0]).abs() <= tol * (vals[0].abs() + 1e-12) && size < 1e-3 {
            converged = true;
            break;
        }
        let c = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (pts[2][0] - c[0]), c[1] + t * (pts[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        evaluations += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            evaluations += 1;
            if fe < fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            evaluations += 1;
            if fc < vals[2].min(fr) {
                pts[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = [
                        pts[0][0] + 0.5 * (pts[i][0] - pts[0][0]),
                        pts[0][1] + 0.5 * (pts[i][1] - pts[0][1]),
                    ];
                    vals[i] = f(pts[i]);
                }
                evaluations += 2;
            }
        }
    }
    let i = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Simplex {
        best: pts[i],
        value: vals[i],
        evaluations,
        converged,
    }
}

const MIN_TAU_RATIO: f64 = 1.1;
const INFEASIBLE: f64 = 1e12;

fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..steps)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (steps - 1) as f64).exp())
        .collect()
}

/// Decompose a gap-free, finite signal.
pub fn cda_decompose(signal: &SampledSignal, params: &CdaParams) -> Result<EdaDecomposition> {
    if !signal.gaps().is_empty() {
        return Err(CoreError::InvalidSignal(
            "decomposition needs a gap-free signal; split at unfilled gaps first".into(),
        ));
    }
    if let Some(i) = signal.values().iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite(i));
    }
    if signal.duration_s() < params.min_duration_s {
        return Err(CoreError::TooShort(format!(
            "{:.2} s of signal, need at least {} s",
            signal.duration_s(),
            params.min_duration_s
        )));
    }
    let initial = Bateman::new(params.tau1_s, params.tau2_s)?;
    let y = signal.values();
    let dt = signal.period_s();

    let (t1_lo, t1_hi) = params.tau1_range_s;
    let (t2_lo, t2_hi) = params.tau2_range_s;
    let mut objective = |x: [f64; 2]| -> f64 {
        let (t1, t2) = (x[0].exp(), x[1].exp());
        if !(t1 >= t1_lo && t1 <= t1_hi && t2 >= t2_lo && t2 <= t2_hi) || t1 < MIN_TAU_RATIO * t2 {
            return INFEASIBLE;
        }
        evaluate(y, dt, Bateman { tau1: t1, tau2: t2 }, params).criterion
    };

    let (kernel, diagnostics) = if params.optimize_tau {
        let mut best = ([initial.tau1.ln(), initial.tau2.ln()], objective([initial.tau1.ln(), initial.tau2.ln()]));
        let mut evaluations = 1;
        for &t1 in &log_grid(t1_lo, t1_hi, params.grid_steps) {
            for &t2 in &log_grid(t2_lo, t2_hi, params.grid_steps) {
                if t1 < MIN_TAU_RATIO * t2 {
                    continue;
                }
                let x = [t1.ln(), t2.ln()];
                let v = objective(x);
                evaluations += 1;
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
        let simplex = nelder_mead(&mut objective, best.0, 0.15, params.max_optimizer_iterations, 1e-6);
        evaluations += simplex.evaluations;
        let (x, value) = if simplex.value <= best.1 {
            (simplex.best, simplex.value)
        } else {
            best
        };
        let kernel = Bateman {
            tau1: x[0].exp(),
            tau2: x[1].exp(),
        };
        let message = (!simplex.converged).then(|| {
            format!(
                "time-constant search stopped after {} iterations without meeting tolerance; best iterate kept",
                params.max_optimizer_iterations
            )
        });
        (
            kernel,
            CdaDiagnostics {
                converged: simplex.converged,
                evaluations,
                criterion: value,
                message,
            },
        )
    } else {
        let v = evaluate(y, dt, initial, params).criterion;
        (
            initial,
            CdaDiagnostics {
                converged: true,
                evaluations: 1,
                criterion: v,
                message: None,
            },
        )
    };

    let trial = evaluate(y, dt, kernel, params);
    let sampled = SampledKernel::new(kernel, dt);
    let tonic = sampled.convolve_from(&trial.tonic_driver, y[0]);
    let target: Vec<f64> = y.iter().zip(&tonic).map(|(v, t)| v - t).collect();
    let mut init: Vec<f64> = trial
        .raw_driver
        .iter()
        .zip(&trial.tonic_driver)
        .map(|(r, t)| (r - t).max(0.0))
        .collect();
    if let Some(last) = init.last_mut() {
        *last = 0.0;
    }
    let driver = refine_driver(&sampled, &target, init, params.ridge, params.refine_iterations);
    let phasic = sampled.convolve_zero(&driver);
    let residual_rmse = (target
        .iter()
        .zip(&phasic)
        .map(|(t, p)| (t - p).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt();

    let mut decomposition = EdaDecomposition {
        tonic: signal.with_values(tonic),
        driver: signal.with_values(driver),
        phasic: signal.with_values(phasic),
        scrs: Vec::new(),
        residual_rmse,
        kernel,
        diagnostics,
    };
    decomposition.scrs = extract_scrs_with(&decomposition, &params.scr);
    Ok(decomposition)
}

/// Projected accelerated gradient for
/// `min 0.5 |K d - target|^2 + 0.5 lambda |d|^2` subject to `d >= 0`.
fn refine_driver(kernel: &SampledKernel, target: &[f64], init: Vec<f64>, ridge: f64, iterations: usize) -> Vec<f64> {
    if iterations == 0 {
        return init;
    }
    let lipschitz = kernel.area().powi(2);
    let lambda = ridge * lipschitz;
    let step = 1.0 / (lipschitz + lambda);
    let mut x = init;
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let kz = kernel.convolve_zero(&z);
        let resid: Vec<f64> = kz.iter().zip(target).map(|(a, b)| a - b).collect();
        let grad = kernel.adjoint(&resid);
        let next: Vec<f64> = z
            .iter()
            .zip(&grad)
            .map(|(zi, gi)| (zi - step * (gi + lambda * zi)).max(0.0))
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        z = next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect();
        x = next;
        t = t_next;
    }
    x
}
