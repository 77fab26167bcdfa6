//! Corpus analysis. Sessions are processed independently and in parallel;
//! corpus-level statistics run over the sessions that succeeded, merged in
//! participant order.

use std::collections::BTreeMap;
use std::path::Path;

use carespace_core::eda::{extrema_tally, process_session_eda, EdaActivityFeatures, EdaFeature, Extremum, SessionEda};
use carespace_core::forceplate::{
    cop_trajectory, speed_feature_correlation, stage_features, stage_segment, CopFeatureName, CopFeatures, PlateId,
};
use carespace_core::model::Stream;
use carespace_core::spatial::{detect_behaviors, SpatialReport};
use carespace_core::stats::{mean_correlation_clamped, pairwise_correlations, significant_pairs};
use carespace_core::surveys::{condition_compare, post_study_summary, presentation_summary, Dimension, SurveyActivity};
use carespace_core::vitals::vitals_report;
use carespace_ingest::{load_corpus_index, load_session, ChannelKind, CorpusIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisParams, RunConfig};
use crate::error::{CliError, Result};
use crate::table::{fmt, fmt_opt, Table};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    Config,
    Data,
    Analysis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionFailure {
    /// Manifest path relative to the corpus root.
    pub session: String,
    pub participant_id: Option<u32>,
    pub class: FailureClass,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateResult {
    pub channel: String,
    pub plate: PlateId,
    pub unloaded: usize,
    pub absent_stages: Vec<u8>,
    pub features: Vec<CopFeatures>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionAnalysis {
    pub session: String,
    pub participant_id: u32,
    pub eda: Option<SessionEda>,
    pub plates: Vec<PlateResult>,
    pub spatial: Option<SpatialReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub corpus_seed: Option<u64>,
    pub sessions_declared: usize,
    pub sessions_analyzed: usize,
    pub participants: Vec<u32>,
    pub failed_sessions: Vec<String>,
    /// Corpus-level analyses that could not run, with the reason.
    pub notes: Vec<String>,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusAnalysis {
    pub seed: Option<u64>,
    pub declared: usize,
    /// Sorted by participant id.
    pub sessions: Vec<SessionAnalysis>,
    pub failures: Vec<SessionFailure>,
    pub notes: Vec<String>,
    /// Keyed by table name; written as `tables/<name>.csv`.
    pub tables: BTreeMap<String, Table>,
}

impl CorpusAnalysis {
    pub fn summary(&self) -> Summary {
        Summary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            corpus_seed: self.seed,
            sessions_declared: self.declared,
            sessions_analyzed: self.sessions.len(),
            participants: self.sessions.iter().map(|s| s.participant_id).collect(),
            failed_sessions: self.failures.iter().map(|f| f.session.clone()).collect(),
            notes: self.notes.clone(),
            tables: self.tables.keys().cloned().collect(),
        }
    }
}

fn strip_root(message: String, root: &Path) -> String {
    let prefix = format!("{}/", root.display());
    message.replace(&prefix, "")
}

fn analyze_session(index: &CorpusIndex, path: &Path, params: &AnalysisParams) -> std::result::Result<SessionAnalysis, SessionFailure> {
    let session = path.strip_prefix(&index.root).unwrap_or(path).display().to_string();
    let fail = |pid: Option<u32>, class: FailureClass, message: String| SessionFailure {
        session: session.clone(),
        participant_id: pid,
        class,
        message: strip_root(message, &index.root),
    };

    let loaded = load_session(path).map_err(|e| fail(None, FailureClass::Data, e.to_string()))?;
    let pid = loaded.manifest.participant_id;
    let mut params = params
        .with_overrides(&loaded.manifest.config_overrides)
        .map_err(|e| fail(Some(pid), FailureClass::Config, e.to_string()))?;
    if params.spatial.zone_map.is_empty() {
        params.spatial.zone_map = index.manifest.room.zone_map.clone();
    }
    if params.spatial.exit_doors.is_empty() {
        params.spatial.exit_doors = index.manifest.room.exit_doors.clone();
    }
    let record = &loaded.record;

    let eda = match loaded.manifest.channels.iter().find(|c| c.kind == ChannelKind::Eda) {
        Some(c) => match record.streams.get(&c.name) {
            Some(Stream::Scalar(raw)) => Some(
                process_session_eda(raw, &record.timeline, &params.eda)
                    .map_err(|e| fail(Some(pid), FailureClass::Analysis, format!("eda channel {}: {e}", c.name)))?,
            ),
            _ => return Err(fail(Some(pid), FailureClass::Data, format!("eda channel {} is not a scalar stream", c.name))),
        },
        None => None,
    };

    let mut plates = Vec::new();
    for (name, geom) in loaded.manifest.plates() {
        let Some(Stream::ForcePlate(samples)) = record.streams.get(&name) else {
            return Err(fail(Some(pid), FailureClass::Data, format!("channel {name} is not a force-plate stream")));
        };
        let traj = cop_trajectory(samples, &geom, params.forceplate.unload_threshold_n);
        let split = stage_segment(&traj.points, &record.timeline);
        let features = stage_features(&split)
            .map_err(|e| fail(Some(pid), FailureClass::Analysis, format!("force plate {name}: {e}")))?;
        plates.push(PlateResult {
            channel: name,
            plate: geom.plate_id,
            unloaded: traj.unloaded.len(),
            absent_stages: split.absent,
            features,
        });
    }

    let spatial = (!record.events.is_empty()).then(|| detect_behaviors(&record.events, &params.spatial));

    Ok(SessionAnalysis {
        session,
        participant_id: pid,
        eda,
        plates,
        spatial,
    })
}

/// Load and analyze a corpus. Only an unreadable corpus index is an error;
/// session problems are reported as failures.
pub fn analyze_corpus(corpus: &Path, config: &RunConfig, jobs: Option<usize>) -> Result<CorpusAnalysis> {
    let index = load_corpus_index(corpus).map_err(|e| CliError::Data(e.to_string()))?;
    let params = config.params();
    let paths = index.session_paths();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| paths.par_iter().map(|p| analyze_session(&index, p, &params)).collect());

    let mut sessions: Vec<SessionAnalysis> = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) => sessions.push(s),
            Err(f) => failures.push(f),
        }
    }
    sessions.sort_by(|a, b| a.participant_id.cmp(&b.participant_id).then_with(|| a.session.cmp(&b.session)));
    let mut seen = std::collections::BTreeSet::new();
    sessions.retain(|s| {
        if seen.insert(s.participant_id) {
            true
        } else {
            failures.push(SessionFailure {
                session: s.session.clone(),
                participant_id: Some(s.participant_id),
                class: FailureClass::Data,
                message: format!("duplicate participant_id {}", s.participant_id),
            });
            false
        }
    });
    failures.sort_by(|a, b| a.session.cmp(&b.session));

    let mut analysis = CorpusAnalysis {
        seed: index.manifest.seed,
        declared: paths.len(),
        sessions,
        failures,
        notes: Vec::new(),
        tables: BTreeMap::new(),
    };
    build_tables(&mut analysis, &index, config);
    Ok(analysis)
}

fn extremum_label(e: Extremum) -> &'static str {
    match e {
        Extremum::Max => "max",
        Extremum::Min => "min",
    }
}

/// Per-activity values of one EDA feature for every participant with EDA.
pub fn eda_feature_map(sessions: &[SessionAnalysis], feature: EdaFeature) -> BTreeMap<u32, BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for s in sessions {
        let Some(eda) = &s.eda else { continue };
        let row: BTreeMap<String, f64> = match feature {
            EdaFeature::MeanTonic => eda
                .standardized_tonic_means()
                .into_iter()
                .filter(|(_, v)| v.is_finite())
                .map(|(a, v)| (a.as_str().to_string(), v))
                .collect(),
            _ => eda
                .features
                .iter()
                .filter_map(|f| feature.value(f).map(|v| (f.activity_id.as_str().to_string(), v)))
                .collect(),
        };
        if !row.is_empty() {
            out.insert(s.participant_id, row);
        }
    }
    out
}

fn build_tables(a: &mut CorpusAnalysis, index: &CorpusIndex, config: &RunConfig) {
    let mut tables = BTreeMap::new();
    let mut notes = Vec::new();
    eda_tables(&a.sessions, config, &mut tables, &mut notes);
    cop_tables(&a.sessions, &mut tables, &mut notes);
    spatial_tables(&a.sessions, &mut tables);

    let t = &index.tables;
    if !t.vitals.is_empty() {
        match vitals_report(&t.vitals, &config.vitals) {
            Ok(r) => {
                tables.insert("vitals_by_reading".into(), Table::parse(r.to_csv().as_bytes()).expect("vitals csv"));
                let mut w = Table::new(&["participant", "reading", "message"]);
                for x in &r.warnings {
                    w.push(vec![x.participant_id.to_string(), x.stage.label().into(), x.message.clone()]);
                }
                tables.insert("vitals_warnings".into(), w);
            }
            Err(e) => notes.push(format!("vitals: {e}")),
        }
    }
    if !t.post_study.is_empty() {
        let mut s = Table::new(&BOX_HEADER_POST);
        for ((act, dim), b) in post_study_summary(&t.post_study) {
            s.push(box_row(vec![act.label().into(), dim.label().into()], &b));
        }
        tables.insert("survey_post_study".into(), s);
        let mut c = Table::new(&["activity", "dimension", "condition", "n", "min", "q1", "median", "q3", "max", "mean", "std"]);
        for act in SurveyActivity::ALL {
            for dim in Dimension::ALL {
                let cmp = condition_compare(&t.post_study, act, dim);
                for (label, b) in [("friendly", cmp.friendly), ("authoritative", cmp.authoritative)] {
                    if let Some(b) = b {
                        c.push(box_row(vec![act.label().into(), dim.label().into(), label.into()], &b));
                    }
                }
            }
        }
        tables.insert("survey_condition".into(), c);
    }
    if !t.presentation.is_empty() {
        let mut s = Table::new(&["stimulus", "dimension", "n", "min", "q1", "median", "q3", "max", "mean", "std"]);
        for ((stim, dim), b) in presentation_summary(&t.presentation) {
            s.push(box_row(vec![stim, dim.label().into()], &b));
        }
        tables.insert("survey_presentation".into(), s);
    }
    a.tables = tables;
    a.notes = notes;
}

const BOX_HEADER_POST: [&str; 10] = ["activity", "dimension", "n", "min", "q1", "median", "q3", "max", "mean", "std"];

fn box_row(mut key: Vec<String>, b: &carespace_core::surveys::BoxplotStats) -> Vec<String> {
    key.push(b.n.to_string());
    key.extend([b.min, b.q1, b.median, b.q3, b.max, b.mean, b.std].map(fmt));
    key
}

fn eda_tables(sessions: &[SessionAnalysis], config: &RunConfig, tables: &mut BTreeMap<String, Table>, notes: &mut Vec<String>) {
    let with_eda: Vec<(u32, &SessionEda)> =
        sessions.iter().filter_map(|s| s.eda.as_ref().map(|e| (s.participant_id, e))).collect();
    if with_eda.is_empty() {
        return;
    }

    let mut feat = Table::new(&[
        "participant",
        "activity",
        "duration_s",
        "mean_tonic",
        "standardized_tonic",
        "mean_scr_amplitude",
        "scr_count",
        "scr_rate",
        "standardized_scr_rate",
    ]);
    let mut scrs = Table::new(&["participant", "onset_ms", "peak_ms", "amplitude_us", "activity"]);
    let mut runs = Table::new(&["participant", "start_index", "end_index", "tau1_s", "tau2_s", "residual_rmse", "converged"]);
    let mut gaps = Table::new(&["participant", "start_index", "end_index", "duration_s"]);
    for &(pid, eda) in &with_eda {
        let std: BTreeMap<String, f64> =
            eda.standardized_tonic_means().into_iter().map(|(a, v)| (a.as_str().to_string(), v)).collect();
        for f in &eda.features {
            feat.push(vec![
                pid.to_string(),
                f.activity_id.as_str().into(),
                fmt(f.duration_s),
                fmt(f.mean_tonic),
                fmt_opt(std.get(f.activity_id.as_str()).copied()),
                fmt_opt(f.mean_scr_amplitude),
                f.scr_count.to_string(),
                fmt(f.scr_rate),
                fmt(f.standardized_scr_rate),
            ]);
        }
        for s in &eda.scrs {
            scrs.push(vec![
                pid.to_string(),
                s.onset_ms.to_string(),
                s.peak_ms.to_string(),
                fmt(s.amplitude),
                s.activity.as_ref().map(|a| a.as_str().to_string()).unwrap_or_default(),
            ]);
        }
        for r in &eda.runs {
            let d = &r.decomposition;
            runs.push(vec![
                pid.to_string(),
                r.range.start.to_string(),
                r.range.end.to_string(),
                fmt(d.kernel.tau1),
                fmt(d.kernel.tau2),
                fmt(d.residual_rmse),
                d.diagnostics.converged.to_string(),
            ]);
        }
        for g in &eda.unfilled_gaps {
            gaps.push(vec![pid.to_string(), g.range.start.to_string(), g.range.end.to_string(), fmt(g.duration_s)]);
        }
    }
    tables.insert("eda_activity_features".into(), feat);
    tables.insert("eda_scrs".into(), scrs);
    tables.insert("eda_runs".into(), runs);
    tables.insert("eda_gaps".into(), gaps);

    let mut sig = Table::new(&["feature", "participant_a", "participant_b", "r", "p_value", "ci_low", "ci_high", "n"]);
    let mut mean = Table::new(&["feature", "pairs", "mean_z", "mean_r", "skipped"]);
    let th = &config.significance;
    for feature in EdaFeature::ALL {
        let map = eda_feature_map(sessions, feature);
        match significant_pairs(&map, th) {
            Ok(pc) => {
                for c in &pc.results {
                    sig.push(vec![
                        feature.label().into(),
                        c.pair.0.to_string(),
                        c.pair.1.to_string(),
                        fmt(c.r),
                        fmt(c.p_value),
                        fmt(c.ci.0),
                        fmt(c.ci.1),
                        c.n.to_string(),
                    ]);
                }
            }
            Err(e) => notes.push(format!("{} significant pairs: {e}", feature.label())),
        }
        match pairwise_correlations(&map, th.level) {
            Ok(pc) => {
                let rs: Vec<f64> = pc.results.iter().map(|c| c.r).collect();
                match mean_correlation_clamped(&rs) {
                    Ok(m) => mean.push(vec![
                        feature.label().into(),
                        m.count.to_string(),
                        fmt(m.mean_z),
                        fmt(m.mean_r),
                        pc.skipped.len().to_string(),
                    ]),
                    Err(e) => notes.push(format!("{} mean correlation: {e}", feature.label())),
                }
            }
            Err(e) => notes.push(format!("{} mean correlation: {e}", feature.label())),
        }
    }
    tables.insert("eda_significant_pairs".into(), sig);
    tables.insert("eda_mean_correlation".into(), mean);

    let per_participant: BTreeMap<u32, Vec<EdaActivityFeatures>> =
        with_eda.iter().filter(|(_, e)| e.features.len() >= 2).map(|(p, e)| (*p, e.features.clone())).collect();
    match extrema_tally(&per_participant) {
        Ok(t) => {
            let mut tally = Table::new(&["feature", "activity", "max_count", "min_count"]);
            for ((f, act), (mx, mn)) in &t.counts {
                tally.push(vec![f.label().into(), act.as_str().into(), mx.to_string(), mn.to_string()]);
            }
            tables.insert("eda_extrema_tally".into(), tally);
            let mut ties = Table::new(&["participant", "feature", "extremum", "activities"]);
            for x in &t.ties {
                let acts: Vec<&str> = x.activities.iter().map(|a| a.as_str()).collect();
                ties.push(vec![x.participant.to_string(), x.feature.label().into(), extremum_label(x.extremum).into(), acts.join(";")]);
            }
            tables.insert("eda_extrema_ties".into(), ties);
        }
        Err(e) => notes.push(format!("extrema tally: {e}")),
    }
}

fn cop_tables(sessions: &[SessionAnalysis], tables: &mut BTreeMap<String, Table>, notes: &mut Vec<String>) {
    let mut rows = Table::new(&[
        "participant",
        "plate",
        "speed_mps",
        "samples",
        "mean_radial_displacement",
        "std_radial_displacement",
        "skewness_radial",
        "kurtosis_radial",
        "mean_couple",
    ]);
    let mut by_plate: BTreeMap<PlateId, BTreeMap<u32, Vec<CopFeatures>>> = BTreeMap::new();
    for s in sessions {
        for p in &s.plates {
            for f in &p.features {
                rows.push(vec![
                    s.participant_id.to_string(),
                    p.plate.as_str().into(),
                    fmt_opt(f.stage_speed),
                    f.samples.to_string(),
                    fmt(f.mean_radial_displacement),
                    fmt(f.std_radial_displacement),
                    fmt_opt(f.skewness_radial),
                    fmt_opt(f.kurtosis_radial),
                    fmt(f.mean_couple),
                ]);
            }
            by_plate.entry(p.plate).or_default().insert(s.participant_id, p.features.clone());
        }
    }
    if by_plate.is_empty() {
        return;
    }
    tables.insert("cop_features".into(), rows);

    let mut corr = Table::new(&["plate", "feature", "pairs", "mean_z", "mean_r", "skipped"]);
    for (plate, per) in &by_plate {
        for feature in CopFeatureName::ALL {
            match speed_feature_correlation(per, feature) {
                Ok(c) => corr.push(vec![
                    plate.as_str().into(),
                    feature.label().into(),
                    c.mean.count.to_string(),
                    fmt(c.mean.mean_z),
                    fmt(c.mean.mean_r),
                    c.skipped.len().to_string(),
                ]),
                Err(e) => notes.push(format!("{} plate {}: {e}", plate.as_str(), feature.label())),
            }
        }
    }
    tables.insert("cop_speed_correlation".into(), corr);
}

fn spatial_tables(sessions: &[SessionAnalysis], tables: &mut BTreeMap<String, Table>) {
    let mut ep = Table::new(&["participant", "kind", "start_ms", "end_ms", "evidence_events"]);
    let mut any = false;
    for s in sessions {
        let Some(r) = &s.spatial else { continue };
        any = true;
        for e in &r.episodes {
            ep.push(vec![
                s.participant_id.to_string(),
                e.kind.label().into(),
                e.start.to_string(),
                e.end.to_string(),
                e.evidence.len().to_string(),
            ]);
        }
    }
    if any {
        tables.insert("spatial_episodes".into(), ep);
    }
}

/// Bundle files for an analysis: summary, failures, effective config and
/// every table as CSV.
pub fn bundle_files(a: &CorpusAnalysis, config: &RunConfig) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut effective = config.clone();
    effective.corpus = None;
    effective.out = None;
    files.insert("summary.json".into(), json(&a.summary()));
    files.insert("failures.json".into(), json(&a.failures));
    files.insert("config.json".into(), json(&effective));
    for (name, t) in &a.tables {
        files.insert(format!("tables/{name}.csv"), t.to_csv());
    }
    files
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("report values serialize");
    out.push(b'\n');
    out
}
