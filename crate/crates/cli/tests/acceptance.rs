//! Acceptance run: one line per criterion, every criterion evaluated even
//! when an earlier one fails. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use carespace_core::eda::{
    cda_decompose, extrema_tally, fill_gaps, process_session_eda, regularize, zscore_standardize, Butterworth, EdaActivityFeatures,
    EdaConfig, EdaFeature, SessionEda,
};
use carespace_core::forceplate::{compute_cop, radial_features, CopPoint, ForcePlateSample, PlateGeometry, PlateId};
use carespace_core::model::{canonical, Stream};
use carespace_core::spatial::{detect_behaviors, BehaviorKind, SpatialConfig};
use carespace_core::stats::correlation_ci;
use carespace_core::vitals::{derive_std_convention, parse_vitals_table, vitals_report, ReferenceCell, VitalsMeasure, VitalsStage};
use carespace_core::{ActivityId, ActivityTimeline, IndexRange, Segment, TimedSeries, Unit};
use carespace_ingest::simulate::session_dir;
use carespace_ingest::{load_corpus_index, load_session, read_session_truth, simulate_corpus, ScenarioSpec, SessionTruth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

enum Status {
    Pass,
    Fail,
    Note,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

// ---------------------------------------------------------------- 1. vitals

const PUBLISHED_VITALS: [(VitalsStage, VitalsMeasure, f64, f64); 12] = [
    (VitalsStage::Baseline, VitalsMeasure::Systolic, 112.07, 15.19),
    (VitalsStage::Reading2, VitalsMeasure::Systolic, 116.08, 16.48),
    (VitalsStage::Reading3, VitalsMeasure::Systolic, 113.63, 16.86),
    (VitalsStage::Reading4, VitalsMeasure::Systolic, 112.5, 19.7),
    (VitalsStage::Baseline, VitalsMeasure::Diastolic, 66.08, 8.25),
    (VitalsStage::Reading2, VitalsMeasure::Diastolic, 68.83, 8.15),
    (VitalsStage::Reading3, VitalsMeasure::Diastolic, 70.5, 9.06),
    (VitalsStage::Reading4, VitalsMeasure::Diastolic, 71.29, 9.89),
    (VitalsStage::Baseline, VitalsMeasure::Pulse, 78.41, 10.42),
    (VitalsStage::Reading2, VitalsMeasure::Pulse, 84.85, 14.14),
    (VitalsStage::Reading3, VitalsMeasure::Pulse, 79.89, 13.05),
    (VitalsStage::Reading4, VitalsMeasure::Pulse, 78.78, 13.38),
];

fn criterion_vitals() -> Outcome {
    let start = Instant::now();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/vitals_readings.csv");
    let readings = parse_vitals_table(&std::fs::read_to_string(path).expect("fixture")).expect("fixture parses");
    let reference: Vec<ReferenceCell> = PUBLISHED_VITALS
        .iter()
        .map(|&(stage, measure, mean, std)| ReferenceCell { stage, measure, mean, std })
        .collect();
    let best = derive_std_convention(&readings, &reference, 0.01).remove(0);
    let report = vitals_report(&readings, &best.options).expect("report");
    let mut misses = Vec::new();
    for (stage, measure, mean, std) in PUBLISHED_VITALS {
        let got = report.get(stage, measure).expect("cell");
        if (got.mean - mean).abs() > 0.01 || (got.std - std).abs() > 0.01 {
            misses.push(format!(
                "{} {} {:.2}/{:.2} vs {mean}/{std}",
                stage.label(),
                measure.label(),
                got.mean,
                got.std
            ));
        }
    }
    let elapsed = start.elapsed();
    judge(
        misses.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "{}/12 cells within 0.01 under {:?}; {:.0} ms; mismatches: [{}]",
            12 - misses.len(),
            best.options,
            elapsed.as_secs_f64() * 1e3,
            misses.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 2. Fisher CIs

const PUBLISHED_INTERVALS: [(u32, u32, f64, f64, f64); 29] = [
    (10, 18, 0.94, 0.83, 0.98),
    (10, 20, 0.95, 0.85, 0.98),
    (10, 26, 0.92, 0.77, 0.97),
    (10, 27, 0.89, 0.69, 0.96),
    (15, 18, 0.84, 0.56, 0.94),
    (15, 24, 0.84, 0.57, 0.94),
    (16, 23, 0.88, 0.66, 0.96),
    (16, 27, 0.84, 0.66, 0.96),
    (16, 28, 0.89, 0.71, 0.96),
    (16, 30, 0.91, 0.74, 0.97),
    (18, 20, 0.89, 0.69, 0.96),
    (18, 26, 0.84, 0.59, 0.95),
    (18, 27, 0.96, 0.87, 0.99),
    (20, 26, 0.85, 0.61, 0.95),
    (20, 27, 0.90, 0.71, 0.97),
    (23, 30, 0.94, 0.84, 0.98),
    (27, 28, 0.92, 0.77, 0.97),
    (10, 30, 0.84, 0.58, 0.95),
    (13, 15, 0.83, 0.55, 0.94),
    (17, 21, 0.84, 0.57, 0.94),
    (17, 26, 0.90, 0.72, 0.97),
    (17, 28, 0.86, 0.61, 0.95),
    (18, 20, 0.89, 0.70, 0.96),
    (18, 30, 0.86, 0.62, 0.95),
    (21, 26, 0.85, 0.61, 0.95),
    (21, 28, 0.85, 0.60, 0.95),
    (21, 31, 0.87, 0.65, 0.96),
    (12, 22, 0.85, 0.61, 0.95),
    (25, 29, 0.92, 0.76, 0.97),
];

/// Some r within the two-decimal rounding band of the reported value gives
/// rounded bounds within one unit of the published ones.
fn row_consistent(r: f64, lo: f64, hi: f64) -> bool {
    (-50..=50).any(|k| {
        let (l, h) = correlation_ci(r + k as f64 * 1e-4, 15, 0.95).unwrap();
        (round2(l) - lo).abs() <= 0.01 + 1e-9 && (round2(h) - hi).abs() <= 0.01 + 1e-9
    })
}

fn criterion_fisher() -> Outcome {
    let start = Instant::now();
    let (a, b) = (correlation_ci(0.94, 15, 0.95).unwrap(), correlation_ci(0.92, 15, 0.95).unwrap());
    let examples_ok = [(a, (0.83, 0.98)), (b, (0.76, 0.97))]
        .iter()
        .all(|((l, h), (pl, ph))| (round2(*l) - pl).abs() <= 0.01 + 1e-9 && (round2(*h) - ph).abs() <= 0.01 + 1e-9);
    let bad: Vec<String> = PUBLISHED_INTERVALS
        .iter()
        .filter(|(_, _, r, lo, hi)| !row_consistent(*r, *lo, *hi))
        .map(|(p, q, r, lo, hi)| {
            let (l, h) = correlation_ci(*r, 15, 0.95).unwrap();
            format!("({p},{q}) r={r} published [{lo},{hi}] computed [{l:.4},{h:.4}]")
        })
        .collect();
    let elapsed = start.elapsed();
    judge(
        examples_ok && bad.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "ci(0.94,15)=[{:.4},{:.4}] ci(0.92,15)=[{:.4},{:.4}]; {}/29 rows consistent; {:.1} ms; inconsistent: [{}]",
            a.0,
            a.1,
            b.0,
            b.1,
            29 - bad.len(),
            elapsed.as_secs_f64() * 1e3,
            bad.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 3. COP

fn random_sample(rng: &mut ChaCha8Rng) -> ForcePlateSample {
    ForcePlateSample {
        t: 0,
        fx: rng.random_range(-80.0..80.0),
        fy: rng.random_range(-80.0..80.0),
        fz: rng.random_range(100.0..1200.0),
        mx: rng.random_range(-60.0..60.0),
        my: rng.random_range(-60.0..60.0),
        mz: rng.random_range(-10.0..10.0),
    }
}

fn moment_oracle(pts: &[CopPoint]) -> [f64; 5] {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.xp).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.yp).sum::<f64>() / n;
    let d: Vec<f64> = pts.iter().map(|p| (p.xp - cx).hypot(p.yp - cy)).collect();
    let m = d.iter().sum::<f64>() / n;
    let c = |k: i32| d.iter().map(|v| (v - m).powi(k)).sum::<f64>() / n;
    let sd = c(2).sqrt();
    [m, sd, c(3) / sd.powi(3), c(4) / sd.powi(4), pts.iter().map(|p| p.tz).sum::<f64>() / n]
}

fn criterion_cop() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_direct, mut homog, mut origin) = (0.0f64, true, true);
    for _ in 0..10_000 {
        let s = random_sample(&mut rng);
        let dz = rng.random_range(0.0..0.1);
        let g = PlateGeometry::new(PlateId::Left, dz).unwrap();
        let p = compute_cop(&s, &g).unwrap();
        let xp = (-s.my + s.fx * dz) / s.fz;
        let yp = (s.mx + s.fy * dz) / s.fz;
        let tz = s.mz - xp * s.fy + yp * s.fx;
        for (a, b) in [(p.xp, xp), (p.yp, yp), (p.tz, tz)] {
            worst_direct = worst_direct.max((a - b).abs() / b.abs().max(1.0));
        }
        for k in [0.5, 2.0, 4.0] {
            let q = compute_cop(&s.scaled(k), &g).unwrap();
            homog &= q.xp == p.xp && q.yp == p.yp && q.tz == k * p.tz;
        }
        let o = compute_cop(&ForcePlateSample { fx: 0.0, fy: 0.0, mx: 0.0, my: 0.0, ..s }, &g).unwrap();
        origin &= o.xp == 0.0 && o.yp == 0.0 && o.tz == s.mz;
    }
    let mut worst_moment = 0.0f64;
    for trial in 0..50 {
        let n = 20 + trial * 37;
        let pts: Vec<CopPoint> = (0..n)
            .map(|i| CopPoint {
                t: i as i64,
                xp: rng.random_range(-0.2..0.2),
                yp: rng.random_range(-0.3..0.3),
                tz: rng.random_range(-5.0..5.0),
            })
            .collect();
        let f = radial_features(&pts).unwrap();
        let o = moment_oracle(&pts);
        let got = [
            f.mean_radial_displacement,
            f.std_radial_displacement,
            f.skewness_radial.unwrap(),
            f.kurtosis_radial.unwrap(),
            f.mean_couple,
        ];
        for (a, b) in got.iter().zip(o) {
            worst_moment = worst_moment.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    judge(
        worst_direct <= 1e-12 && homog && origin && worst_moment <= 1e-9,
        format!(
            "10^4 samples worst rel err {worst_direct:.2e} (tol 1e-12); homogeneity exact: {homog}; origin identity exact: {origin}; moment oracle worst {worst_moment:.2e} (tol 1e-9)"
        ),
    )
}

// ---------------------------------------------------------------- 4, 7, 8. simulated EDA corpora

struct EdaCorpus {
    truths: Vec<SessionTruth>,
    pepper_max: Vec<u32>,
    analyses: Vec<(u32, SessionEda)>,
    elapsed: Duration,
    raw: Vec<(u32, TimedSeries, ActivityTimeline)>,
}

fn eda_corpus(noise_sd_us: f64, root: &Path) -> EdaCorpus {
    let mut spec = ScenarioSpec::new(41);
    spec.eda.noise_sd_us = noise_sd_us;
    spec.forceplate.enabled = false;
    spec.spatial.enabled = false;
    let sim = simulate_corpus(&spec, root).expect("simulate");
    let start = Instant::now();
    let loaded: Vec<(u32, TimedSeries, ActivityTimeline)> = (1..=spec.participants)
        .into_par_iter()
        .map(|pid| {
            let s = load_session(&root.join(session_dir(pid)).join("manifest.json")).expect("session loads");
            let Some(Stream::Scalar(eda)) = s.record.streams.get("eda") else { panic!("eda channel") };
            (pid, eda.clone(), s.record.timeline.clone())
        })
        .collect();
    let analyses: Vec<(u32, SessionEda)> = loaded
        .par_iter()
        .map(|(pid, raw, tl)| (*pid, process_session_eda(raw, tl, &EdaConfig::default()).expect("pipeline")))
        .collect();
    let elapsed = start.elapsed();
    let truths = (1..=spec.participants)
        .map(|pid| read_session_truth(&root.join(session_dir(pid))).expect("truth"))
        .collect();
    EdaCorpus {
        truths,
        pepper_max: sim.truth.pepper_max,
        analyses,
        elapsed,
        raw: loaded,
    }
}

struct Recovery {
    count_ok: usize,
    planted: usize,
    detected: usize,
    worst_amp: f64,
    mean_amp: f64,
    worst_rmse_frac: f64,
}

fn recovery(c: &EdaCorpus) -> Recovery {
    let (mut count_ok, mut planted, mut detected) = (0, 0, 0);
    let mut errs = Vec::new();
    let mut worst_rmse_frac = 0.0f64;
    for ((_, eda), truth) in c.analyses.iter().zip(&c.truths) {
        planted += truth.scrs.len();
        detected += eda.scrs.len();
        if eda.scrs.len() == truth.scrs.len() {
            count_ok += 1;
            for (d, t) in eda.scrs.iter().zip(&truth.scrs) {
                errs.push((d.amplitude - t.amplitude_us) / t.amplitude_us);
            }
        }
        for run in &eda.runs {
            let v = &eda.signal.values()[run.range.start..run.range.end];
            let range = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            worst_rmse_frac = worst_rmse_frac.max(run.decomposition.residual_rmse / range);
        }
    }
    Recovery {
        count_ok,
        planted,
        detected,
        worst_amp: errs.iter().fold(0.0f64, |a, e| a.max(e.abs())),
        mean_amp: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
        worst_rmse_frac,
    }
}

/// Decomposition of the repaired but unfiltered signal, for a few sessions.
fn unfiltered_diagnostic(c: &EdaCorpus, sessions: usize) -> String {
    let cfg = EdaConfig::default();
    let mut errs = Vec::new();
    let mut counts = (0, 0);
    for ((_, raw, tl), truth) in c.raw.iter().zip(&c.truths).take(sessions) {
        let grid = regularize(raw, cfg.sample_rate_hz, Some((tl.start_ms(), tl.end_ms()))).unwrap();
        let (filled, _) = fill_gaps(&grid, cfg.max_fill_s).unwrap();
        let d = cda_decompose(&filled, &cfg.cda).unwrap();
        counts.0 += d.scrs.len();
        counts.1 += truth.scrs.len();
        if d.scrs.len() == truth.scrs.len() {
            for (e, t) in d.scrs.iter().zip(&truth.scrs) {
                errs.push((e.amplitude - t.amplitude_us) / t.amplitude_us);
            }
        }
    }
    let worst = errs.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let mean = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
    format!(
        "unfiltered decomposition on {sessions} sessions: {}/{} SCRs, worst amplitude err {:.1}%, mean {:+.1}%",
        counts.0,
        counts.1,
        worst * 100.0,
        mean * 100.0
    )
}

fn criterion_eda(clean: &EdaCorpus, noisy: &EdaCorpus) -> (Outcome, String) {
    let a = recovery(clean);
    let b = recovery(noisy);
    let n = clean.truths.len();
    let counts = a.count_ok == n && b.count_ok == n;
    let amps = a.worst_amp <= 0.10 && b.worst_amp <= 0.20;
    let rmse = a.worst_rmse_frac <= 0.05 && b.worst_rmse_frac <= 0.05;
    let time = clean.elapsed < Duration::from_secs(60) && noisy.elapsed < Duration::from_secs(60);
    let detail = format!(
        "noise-free: counts exact {}/{n} ({}/{} SCRs), amplitude worst {:.1}% mean {:+.1}% (tol 10%), RMSE/range {:.2}%, {:.1} s | sigma 0.01: counts exact {}/{n} ({}/{} SCRs), amplitude worst {:.1}% mean {:+.1}% (tol 20%), RMSE/range {:.2}%, {:.1} s",
        a.count_ok,
        a.detected,
        a.planted,
        a.worst_amp * 100.0,
        a.mean_amp * 100.0,
        a.worst_rmse_frac * 100.0,
        clean.elapsed.as_secs_f64(),
        b.count_ok,
        b.detected,
        b.planted,
        b.worst_amp * 100.0,
        b.mean_amp * 100.0,
        b.worst_rmse_frac * 100.0,
        noisy.elapsed.as_secs_f64(),
    );
    (judge(counts && amps && rmse && time, detail), unfiltered_diagnostic(clean, 4))
}

fn arg_extrema(values: &[(ActivityId, f64)]) -> (ActivityId, ActivityId) {
    let max = values.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0.clone();
    let min = values.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0.clone();
    (max, min)
}

fn criterion_standardization(clean: &EdaCorpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut worst_moment, mut worst_affine) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(2..400);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..60.0)).collect();
        let z = zscore_standardize(&x).unwrap();
        let mean = z.iter().sum::<f64>() / n as f64;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        worst_moment = worst_moment.max(mean.abs()).max((sd - 1.0).abs());
        let (a, b) = (rng.random_range(0.1..50.0), rng.random_range(-100.0..100.0));
        let w = zscore_standardize(&x.iter().map(|v| a * v + b).collect::<Vec<_>>()).unwrap();
        worst_affine = w.iter().zip(&z).fold(worst_affine, |m, (p, q)| m.max((p - q).abs()));
    }
    let mut order_kept = 0;
    for (_, eda) in &clean.analyses {
        let raw: Vec<(ActivityId, f64)> = eda.features.iter().map(|f| (f.activity_id.clone(), f.mean_tonic)).collect();
        order_kept += usize::from(arg_extrema(&raw) == arg_extrema(&eda.standardized_tonic_means()));
    }
    let n = clean.analyses.len();
    judge(
        worst_moment <= 1e-9 && worst_affine <= 1e-9 && order_kept == n,
        format!(
            "moments worst dev {worst_moment:.1e}, affine worst dev {worst_affine:.1e} (tol 1e-9); argmax/argmin of activity mean tonic unchanged for {order_kept}/{n} participants"
        ),
    )
}

fn criterion_extrema(clean: &EdaCorpus) -> Outcome {
    let features: BTreeMap<u32, Vec<EdaActivityFeatures>> =
        clean.analyses.iter().map(|(p, e)| (*p, e.features.clone())).collect();
    let tally = extrema_tally(&features).expect("tally");
    let count = tally.max_count(EdaFeature::MeanTonic, canonical::PEPPER_INTERVIEW);
    let mut found: Vec<u32> = features
        .iter()
        .filter(|(_, rows)| {
            rows.iter()
                .max_by(|a, b| a.mean_tonic.total_cmp(&b.mean_tonic))
                .is_some_and(|f| f.activity_id.as_str() == canonical::PEPPER_INTERVIEW)
        })
        .map(|(p, _)| *p)
        .collect();
    found.sort();
    let mut planted = clean.pepper_max.clone();
    planted.sort();
    judge(
        count == 9 && tally.participants == 32 && found == planted,
        format!(
            "max mean tonic during {}: {count} of {} participants (planted {}); participant sets equal: {}",
            canonical::PEPPER_INTERVIEW,
            tally.participants,
            planted.len(),
            found == planted
        ),
    )
}

// ---------------------------------------------------------------- 5. gaps

fn cubic(coef: [f64; 4], i: usize) -> f64 {
    let t = i as f64 * 0.025;
    5.0 + coef[0] * t + coef[1] * t * t + coef[2] * t * t * t + coef[3]
}

fn criterion_gaps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_fill = 0.0f64;
    let mut short_left_open = 0;
    for _ in 0..500 {
        let coef = [0; 4].map(|_| rng.random_range(-1.0..1.0));
        let n = 400;
        let mut holes: Vec<(usize, usize)> = Vec::new();
        for _ in 0..rng.random_range(1..4) {
            let len = rng.random_range(1..=8);
            let start = rng.random_range(10..n - 20);
            if holes.iter().all(|&(s, l)| start + len + 10 < s || s + l + 10 < start) {
                holes.push((start, len));
            }
        }
        let missing = |i: usize| holes.iter().any(|&(s, l)| (s..s + l).contains(&i));
        let keep: Vec<usize> = (0..n).filter(|&i| !missing(i)).collect();
        let series = TimedSeries::new(
            keep.iter().map(|&i| i as i64 * 250).collect(),
            keep.iter().map(|&i| cubic(coef, i)).collect(),
            Unit::Microsiemens,
        )
        .unwrap();
        let (filled, unfilled) = fill_gaps(&regularize(&series, 4.0, None).unwrap(), 2.0).unwrap();
        short_left_open += unfilled.len();
        for i in (0..n).filter(|&i| missing(i)) {
            worst_fill = worst_fill.max((filled.values()[i] - cubic(coef, i)).abs() / cubic(coef, i).abs());
        }
    }

    // long gaps at random places in a ten-minute signal with SCR-like bumps
    let mut excluded_ok = 0;
    let trials = 12;
    for _ in 0..trials {
        let n = 2400;
        let len = rng.random_range(9..60);
        let start = rng.random_range(200..n - 200 - len);
        let bumps: Vec<f64> = (0..8).map(|k| 30.0 + 70.0 * k as f64 + rng.random_range(0.0..20.0)).collect();
        let value = |i: usize| {
            let t = i as f64 / 4.0;
            let phasic: f64 = bumps
                .iter()
                .filter(|&&b| t > b)
                .map(|&b| 0.5 * ((-(t - b) / 2.0).exp() - (-(t - b) / 0.7).exp()))
                .sum();
            3.0 + 0.3 * (2.0 * PI * t / 600.0).sin() + phasic
        };
        let keep: Vec<usize> = (0..n).filter(|i| !(start..start + len).contains(i)).collect();
        let raw = TimedSeries::new(
            keep.iter().map(|&i| i as i64 * 250).collect(),
            keep.iter().map(|&i| value(i)).collect(),
            Unit::Microsiemens,
        )
        .unwrap();
        let tl = ActivityTimeline::new(vec![Segment::new(ActivityId::new(canonical::BASELINE), 0, n as i64 * 250)]).unwrap();
        let out = process_session_eda(&raw, &tl, &EdaConfig::default()).unwrap();
        let gap_ok = out.unfilled_gaps.len() == 1
            && out.unfilled_gaps[0].range.start <= start
            && out.unfilled_gaps[0].range.end >= start + len;
        let g = out.unfilled_gaps.first().map_or(IndexRange::new(0, 0), |g| g.range);
        let masked = (g.start..g.end).all(|i| out.tonic.is_gap(i));
        let runs_clear = out.runs.iter().all(|r| r.range.end <= g.start || r.range.start >= g.end);
        let (lo, hi) = (g.start as i64 * 250, g.end as i64 * 250);
        let scrs_clear = out.scrs.iter().all(|s| !(lo..hi).contains(&s.peak_ms) && !(lo..hi).contains(&s.onset_ms));
        let short: usize = out.short_runs.iter().map(|r| r.len()).sum();
        let dur: f64 = out.features.iter().map(|f| f.duration_s).sum();
        let dur_ok = (dur - (n - g.len() - short) as f64 / 4.0).abs() < 1e-9;
        excluded_ok += usize::from(gap_ok && masked && runs_clear && scrs_clear && dur_ok);
    }
    judge(
        worst_fill <= 1e-9 && short_left_open == 0 && excluded_ok == trials,
        format!(
            "500 random placements of gaps <= 2 s: worst cubic rel err {worst_fill:.1e} (tol 1e-9), {short_left_open} left unfilled; gaps > 2 s excluded from tonic, runs, SCRs and durations in {excluded_ok}/{trials} random placements"
        ),
    )
}

// ---------------------------------------------------------------- 6. filter

fn project(y: &[f64], freq: f64, fs: f64, offset: usize) -> f64 {
    let (mut s, mut c, mut ss, mut cc, mut sc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, v) in y.iter().enumerate() {
        let (sw, cw) = (2.0 * PI * freq * (k + offset) as f64 / fs).sin_cos();
        s += v * sw;
        c += v * cw;
        ss += sw * sw;
        cc += cw * cw;
        sc += sw * cw;
    }
    let det = ss * cc - sc * sc;
    ((s * cc - c * sc) / det).hypot((c * ss - s * sc) / det)
}

fn criterion_filter() -> Outcome {
    let (fs, fc) = (4.0, 0.35);
    let bw = Butterworth::lowpass(1, fc, fs).unwrap();
    let n = 4000;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * fc * i as f64 / fs).sin()).collect();
    let measured = project(&bw.filter(&x)[n / 4..3 * n / 4], fc, fs, n / 4);
    let analytic = bw.magnitude(fc, fs);
    let target = 0.5f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_lin = 0.0f64;
    for _ in 0..200 {
        let len = rng.random_range(8..500);
        let u: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        for twice in [false, true] {
            let f = |s: &[f64]| if twice { bw.filtfilt(s) } else { bw.filter(s) };
            let (fu, fv, fm) = (f(&u), f(&v), f(&mix));
            for i in 0..len {
                worst_lin = worst_lin.max((fm[i] - (a * fu[i] + b * fv[i])).abs());
            }
        }
    }
    let rel = |g: f64| (g - target).abs() / target;
    judge(
        rel(measured) <= 0.02 && rel(analytic) <= 0.02 && worst_lin <= 1e-9,
        format!(
            "single-pass gain at cutoff: analytic {analytic:.6}, measured {measured:.6}, target {target:.6} (tol 2%); linearity worst {worst_lin:.1e} (tol 1e-9)"
        ),
    )
}

// ---------------------------------------------------------------- 9. spatial

fn criterion_spatial(root: &Path) -> Outcome {
    let mut spec = ScenarioSpec::new(9);
    spec.participants = 20;
    spec.pepper_max_participants = 1;
    spec.forceplate.enabled = false;
    simulate_corpus(&spec, root).expect("simulate");
    let idx = load_corpus_index(root).unwrap();
    let config = SpatialConfig {
        zone_map: idx.manifest.room.zone_map.clone(),
        exit_doors: idx.manifest.room.exit_doors.clone(),
        ..SpatialConfig::default()
    };
    let (mut planted, mut detected, mut hits) = (0, 0, 0);
    let (mut wander_total, mut wander_ok, mut seat_total, mut seat_ok) = (0, 0, 0, 0);
    let mut distractors = 0;
    for pid in 1..=spec.participants {
        let s = load_session(&root.join(session_dir(pid)).join("manifest.json")).unwrap();
        let truth = read_session_truth(&root.join(session_dir(pid))).unwrap();
        let report = detect_behaviors(&s.record.events, &config);
        let exits: Vec<i64> = report.of_kind(BehaviorKind::Exit).map(|e| e.start).collect();
        planted += truth.exits.len();
        detected += exits.len();
        hits += truth.exits.iter().filter(|t| exits.contains(&t.start_ms)).count();
        let wander: Vec<_> = report.of_kind(BehaviorKind::Wandering).map(|e| (e.start, e.end)).collect();
        let seated: Vec<_> = report.of_kind(BehaviorKind::Seated).map(|e| (e.start, e.end)).collect();
        wander_total += truth.wandering.len();
        seat_total += truth.seated.len();
        if wander == truth.wandering.iter().map(|e| (e.start_ms, e.end_ms)).collect::<Vec<_>>() {
            wander_ok += truth.wandering.len();
        }
        if seated == truth.seated.iter().map(|e| (e.start_ms, e.end_ms)).collect::<Vec<_>>() {
            seat_ok += truth.seated.len();
        }
        distractors += s.record.events.iter().filter(|e| e.device_id.contains("closet")).count();
    }
    let precision = hits as f64 / detected.max(1) as f64;
    let recall = hits as f64 / planted.max(1) as f64;
    judge(
        planted >= 20
            && wander_total >= 10
            && seat_total >= 10
            && precision == 1.0
            && recall == 1.0
            && wander_ok == wander_total
            && seat_ok == seat_total,
        format!(
            "exits: {planted} planted, {detected} detected, precision {precision:.3} recall {recall:.3}; wandering exact {wander_ok}/{wander_total}; seated exact {seat_ok}/{seat_total}; {distractors} distractor closet events"
        ),
    )
}

// ---------------------------------------------------------------- 10. determinism

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_carespace"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_determinism(root: &Path) -> Outcome {
    let mut spec = ScenarioSpec::new(77);
    spec.participants = 6;
    spec.pepper_max_participants = 2;
    spec.dropout.gaps_per_hour = 4.0;
    spec.eda.noise_sd_us = 0.01;
    let spec_path = root.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();
    let sp = spec_path.to_str().unwrap();
    let mut bundles = Vec::new();
    let mut ok = true;
    for k in 0..2 {
        let corpus = root.join(format!("corpus{k}"));
        let bundle = root.join(format!("bundle{k}"));
        ok &= run(&["simulate", "--config", sp, "--out", corpus.to_str().unwrap()]);
        ok &= run(&["analyze", corpus.to_str().unwrap(), "--out", bundle.to_str().unwrap(), "--jobs", if k == 0 { "1" } else { "4" }]);
        bundles.push((tree(&corpus), tree(&bundle)));
    }
    let same_corpus = bundles[0].0 == bundles[1].0;
    let same_bundle = bundles[0].1 == bundles[1].1;
    judge(
        ok && same_corpus && same_bundle && !bundles[0].1.is_empty(),
        format!(
            "two simulate + analyze runs (jobs 1 vs 4): corpora identical: {same_corpus} ({} files), bundles identical: {same_bundle} ({} files)",
            bundles[0].0.len(),
            bundles[0].1.len()
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut say = |id: u8, name: &'static str, o: Outcome| {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Note => "NOT REPRODUCIBLE",
        };
        println!("criterion {id:>2} [{tag}] {name}: {}", o.detail);
        results.push((id, name, o));
    };

    say(1, "vitals golden reproduction", criterion_vitals());
    say(2, "Fisher CI reproduction", criterion_fisher());
    say(3, "COP correctness", criterion_cop());
    let clean = eda_corpus(0.0, &dir.path().join("clean"));
    let noisy = eda_corpus(0.01, &dir.path().join("noisy"));
    let (eda, diagnostic) = criterion_eda(&clean, &noisy);
    say(4, "EDA decomposition recovery", eda);
    println!("             diagnostic: {diagnostic}");
    say(5, "gap handling", criterion_gaps());
    say(6, "filter contract", criterion_filter());
    say(7, "standardization", criterion_standardization(&clean));
    say(8, "extrema tally", criterion_extrema(&clean));
    say(9, "spatial detection", criterion_spatial(&dir.path().join("spatial")));
    say(10, "determinism", criterion_determinism(dir.path()));
    say(
        11,
        "study-specific values",
        Outcome {
            status: Status::Note,
            detail: "aggregate Fisher z-scores, the specific correlated participant pairs, figure values and the mood-alignment rate need the private participant recordings; covered by criteria 2, 7, 8 and the planted corpora of 4 and 9".into(),
        },
    );

    let failed: Vec<String> = results
        .iter()
        .filter(|(_, _, o)| matches!(o.status, Status::Fail))
        .map(|(id, name, _)| format!("{id} ({name})"))
        .collect();
    let passed = results.iter().filter(|(_, _, o)| matches!(o.status, Status::Pass)).count();
    println!("acceptance: {passed} passed, {} failed, 1 not reproducible", failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
