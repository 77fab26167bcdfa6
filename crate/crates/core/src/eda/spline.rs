//! Piecewise cubic interpolating splines in second-derivative (moment) form.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero second derivative at both ends.
    Natural,
    /// Third derivative continuous across the second and penultimate knots.
    /// Reproduces cubic polynomials exactly.
    NotAKnot,
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    /// Interpolate `(x, y)`; `x` must be strictly increasing with at least two knots.
    pub fn new(x: &[f64], y: &[f64], boundary: Boundary) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CoreError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(CoreError::TooShort("spline needs at least two knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidSignal("spline knots must be strictly increasing".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidSignal("spline knots must be finite".into()));
        }
        let m = moments(x, y, boundary);
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// Evaluate at `t`; outside the knot span the end pieces are extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.y[i] / h - m0 * h / 6.0) * a
            + (self.y[i + 1] / h - m1 * h / 6.0) * b
    }
}

fn moments(x: &[f64], y: &[f64], boundary: Boundary) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        return vec![0.0; 2];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    if n == 3 && boundary == Boundary::NotAKnot {
        // a single parabola through the three points
        let c = 2.0 * (delta[1] - delta[0]) / (x[2] - x[0]);
        return vec![c; 3];
    }

    // unknowns M_1 ..= M_{n-2}
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        sub[j] = h[i - 1];
        diag[j] = 2.0 * (h[i - 1] + h[i]);
        sup[j] = h[i];
        rhs[j] = 6.0 * (delta[i] - delta[i - 1]);
    }
    if boundary == Boundary::NotAKnot {
        // eliminate M_0 = M_1 (1 + h0/h1) - (h0/h1) M_2
        let (h0, h1) = (h[0], h[1]);
        diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
        sup[0] = (h1 * h1 - h0 * h0) / h1;
        // eliminate M_{n-1} = M_{n-2} (1 + hl/hp) - (hl/hp) M_{n-3}
        let (hp, hl) = (h[n - 3], h[n - 2]);
        diag[k - 1] = (hl + hp) * (hl + 2.0 * hp) / hp;
        sub[k - 1] = (hp * hp - hl * hl) / hp;
    }
    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);

    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&inner);
    if boundary == Boundary::NotAKnot {
        let (h0, h1) = (h[0], h[1]);
        m[0] = m[1] * (1.0 + h0 / h1) - (h0 / h1) * m[2];
        let (hp, hl) = (h[n - 3], h[n - 2]);
        m[n - 1] = m[n - 2] * (1.0 + hl / hp) - (hl / hp) * m[n - 3];
    }
    m
}

/// Thomas algorithm; `sub[0]` and `sup[last]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    out
}
