//! Pearson correlation with Fisher-z confidence intervals and aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{CoreError, Result};

/// Clamp applied before `atanh` when aggregating possibly perfect correlations.
pub const R_CLAMP: f64 = 0.999_999;

/// Sample Pearson coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CoreError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(CoreError::TooShort(format!("pearson needs at least 3 pairs (got {})", x.len())));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite(i % x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CoreError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn fisher_z(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(CoreError::CorrelationOutOfRange(r));
    }
    Ok(r.atanh())
}

pub fn fisher_z_inverse(z: f64) -> f64 {
    z.tanh()
}

/// Two-sided standard normal quantile for a confidence level.
pub fn z_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CoreError::Undefined(format!("confidence level {level} outside (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Fisher-z interval for `r` over `n` pairs. A perfect correlation gives the
/// degenerate interval `(r, r)`.
pub fn correlation_ci(r: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(CoreError::InsufficientData(format!("confidence interval needs n >= 4 (got {n})")));
    }
    if r.abs() == 1.0 {
        return Ok((r, r));
    }
    let z = fisher_z(r)?;
    let half = z_critical(level)? / ((n - 3) as f64).sqrt();
    Ok((fisher_z_inverse(z - half), fisher_z_inverse(z + half)))
}

/// Two-sided t-test of zero correlation.
pub fn pearson_p_value(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(CoreError::InsufficientData(format!("p-value needs n >= 3 (got {n})")));
    }
    if !(r.abs() <= 1.0) {
        return Err(CoreError::CorrelationOutOfRange(r));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub pair: (u32, u32),
    pub r: f64,
    pub p_value: f64,
    pub ci: (f64, f64),
    pub n: usize,
}

impl CorrelationResult {
    pub fn ci_width(&self) -> f64 {
        self.ci.1 - self.ci.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignificanceThresholds {
    pub r_min: f64,
    pub p_max: f64,
    pub ci_width_max: f64,
    pub level: f64,
}

impl Default for SignificanceThresholds {
    fn default() -> Self {
        Self {
            r_min: 0.75,
            p_max: 0.05,
            ci_width_max: 0.4,
            level: 0.95,
        }
    }
}

impl SignificanceThresholds {
    pub fn accepts(&self, c: &CorrelationResult) -> bool {
        c.r > self.r_min && c.p_value < self.p_max && c.ci_width() < self.ci_width_max
    }
}

/// A participant pair that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair: (u32, u32),
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCorrelations {
    pub results: Vec<CorrelationResult>,
    pub skipped: Vec<SkippedPair>,
}

/// Pearson over the keys both participants share with finite values.
pub fn correlate_pair<K: Ord>(
    pair: (u32, u32),
    a: &BTreeMap<K, f64>,
    b: &BTreeMap<K, f64>,
    level: f64,
) -> Result<CorrelationResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| (*va, *vb)))
        .filter(|(va, vb)| va.is_finite() && vb.is_finite())
        .unzip();
    if x.is_empty() {
        return Err(CoreError::InsufficientData("no shared activities".into()));
    }
    let n = x.len();
    if n < 4 {
        return Err(CoreError::InsufficientData(format!("only {n} shared activities")));
    }
    let r = pearson(&x, &y)?;
    Ok(CorrelationResult {
        pair,
        r,
        p_value: pearson_p_value(r, n)?,
        ci: correlation_ci(r, n, level)?,
        n,
    })
}

/// Every unordered participant pair, ordered by `(a, b)` with `a < b`.
pub fn pairwise_correlations<K: Ord>(features: &BTreeMap<u32, BTreeMap<K, f64>>, level: f64) -> Result<PairwiseCorrelations> {
    if features.len() < 2 {
        return Err(CoreError::InsufficientData(format!(
            "need at least 2 participants (got {})",
            features.len()
        )));
    }
    let ids: Vec<&u32> = features.keys().collect();
    let mut out = PairwiseCorrelations::default();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            match correlate_pair((*a, *b), &features[a], &features[b], level) {
                Ok(c) => out.results.push(c),
                Err(e) => out.skipped.push(SkippedPair {
                    pair: (*a, *b),
                    reason: e.to_string(),
                }),
            }
        }
    }
    Ok(out)
}

/// Pairs passing all three thresholds, plus every skipped pair.
pub fn significant_pairs<K: Ord>(
    features: &BTreeMap<u32, BTreeMap<K, f64>>,
    thresholds: &SignificanceThresholds,
) -> Result<PairwiseCorrelations> {
    let mut all = pairwise_correlations(features, thresholds.level)?;
    all.results.retain(|c| thresholds.accepts(c));
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCorrelation {
    pub mean_z: f64,
    pub mean_r: f64,
    pub count: usize,
}

/// Average in Fisher-z space. Every `|r|` must be below 1.
pub fn mean_correlation(rs: &[f64]) -> Result<MeanCorrelation> {
    if rs.is_empty() {
        return Err(CoreError::InsufficientData("no correlations to average".into()));
    }
    let mut sum = 0.0;
    for &r in rs {
        sum += fisher_z(r)?;
    }
    let mean_z = sum / rs.len() as f64;
    Ok(MeanCorrelation {
        mean_z,
        mean_r: fisher_z_inverse(mean_z),
        count: rs.len(),
    })
}

/// [`mean_correlation`] after clamping each `r` to `±R_CLAMP`.
pub fn mean_correlation_clamped(rs: &[f64]) -> Result<MeanCorrelation> {
    let clamped: Vec<f64> = rs.iter().map(|r| r.clamp(-R_CLAMP, R_CLAMP)).collect();
    mean_correlation(&clamped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]).unwrap_err(), CoreError::ConstantInput);
        assert!(pearson(&x, &x[..3]).is_err());
    }

    #[test]
    fn pearson_hand_example() {
        // sums: x 10, y 20, xy 61, xx 30, yy 126
        let n: f64 = 4.0;
        let cov = 61.0 - 10.0 * 20.0 / n;
        let vx = 30.0 - 100.0 / n;
        let vy = 126.0 - 400.0 / n;
        let expected = cov / (vx * vy).sqrt();
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 5.0, 9.0]).unwrap();
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn fisher() {
        assert_eq!(fisher_z(0.0).unwrap(), 0.0);
        assert!((fisher_z(0.94).unwrap() - 1.738_049_2).abs() < 1e-6);
        assert!((fisher_z_inverse(fisher_z(0.73).unwrap()) - 0.73).abs() < 1e-12);
        assert!(fisher_z(1.0).is_err());
        assert!(fisher_z(-1.2).is_err());
    }

    #[test]
    fn ci_examples() {
        assert!((z_critical(0.95).unwrap() - 1.959_964).abs() < 1e-6);
        // published bounds agree to one rounding unit
        let close = |a: f64, b: f64| (round2(a) - b).abs() <= 0.01 + 1e-9;
        let (lo, hi) = correlation_ci(0.94, 15, 0.95).unwrap();
        assert!(close(lo, 0.83) && close(hi, 0.98), "{lo} {hi}");
        let (lo, hi) = correlation_ci(0.92, 15, 0.95).unwrap();
        assert!(close(lo, 0.76) && close(hi, 0.97), "{lo} {hi}");
        let (lo, hi) = correlation_ci(0.0, 1000, 0.95).unwrap();
        assert!((lo + hi).abs() < 1e-15);
        assert!(correlation_ci(0.5, 3, 0.95).is_err());
    }

    #[test]
    fn p_values() {
        assert!((pearson_p_value(0.0, 12).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson_p_value(0.94, 15).unwrap() < 0.001);
        assert_eq!(pearson_p_value(1.0, 15).unwrap(), 0.0);
        assert!(pearson_p_value(0.5, 2).is_err());
    }

    #[test]
    fn narrow_sample_fails_ci_width() {
        let (lo, hi) = correlation_ci(0.8, 5, 0.95).unwrap();
        assert!(hi - lo >= 0.4);
    }

    #[test]
    fn mean_correlation_cases() {
        let m = mean_correlation(&[0.5, 0.5]).unwrap();
        assert!((m.mean_z - 0.5f64.atanh()).abs() < 1e-15 && (m.mean_r - 0.5).abs() < 1e-15);
        let m = mean_correlation(&[0.9, -0.9]).unwrap();
        assert!(m.mean_z.abs() < 1e-15 && m.mean_r.abs() < 1e-15);
        assert!(mean_correlation(&[]).is_err());
        assert!(mean_correlation(&[1.0]).is_err());
        let c = mean_correlation_clamped(&[1.0, 1.0]).unwrap();
        assert!(c.mean_z.is_finite() && c.mean_r > 0.9999);
    }

    #[test]
    fn identical_vectors_are_significant() {
        let v: BTreeMap<&str, f64> = [("a", 1.0), ("b", 3.0), ("c", 2.0), ("d", 5.0), ("e", 4.0)].into();
        let f = BTreeMap::from([(1, v.clone()), (2, v)]);
        let s = significant_pairs(&f, &SignificanceThresholds::default()).unwrap();
        assert_eq!(s.results.len(), 1);
        assert_eq!(s.results[0].r, 1.0);
    }

    #[test]
    fn disjoint_activities_are_skipped() {
        let a: BTreeMap<&str, f64> = [("a", 1.0), ("b", 2.0)].into();
        let b: BTreeMap<&str, f64> = [("c", 1.0), ("d", 2.0)].into();
        let s = pairwise_correlations(&BTreeMap::from([(1, a), (2, b)]), 0.95).unwrap();
        assert!(s.results.is_empty());
        assert_eq!(s.skipped.len(), 1);
        assert!(s.skipped[0].reason.contains("no shared"));
    }
}
