//! The three subcommands as library functions, so tests can drive them
//! without spawning a process.

use std::collections::BTreeMap;
use std::path::Path;

use carespace_ingest::{read_bundle, simulate_corpus, store_results, BundleManifest, IngestError, ScenarioSpec, SimulatedCorpus};

use crate::analyze::{analyze_corpus, bundle_files, CorpusAnalysis};
use crate::config::{ReportFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::render::render;
use crate::table::Table;

pub const DEFAULT_SEED: u64 = 2024;

fn scenario_error(e: IngestError) -> CliError {
    match e {
        IngestError::Scenario(m) => CliError::Config(m),
        other => CliError::data(other),
    }
}

pub fn load_spec(spec: Option<&Path>, seed: Option<u64>) -> Result<ScenarioSpec> {
    let mut s = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ScenarioSpec::from_json(&text).map_err(|e| match scenario_error(e) {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })?
        }
        None => ScenarioSpec::new(seed.unwrap_or(DEFAULT_SEED)),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s.validate().map_err(scenario_error)?;
    Ok(s)
}

pub fn cmd_simulate(spec: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<SimulatedCorpus> {
    let spec = load_spec(spec, seed)?;
    simulate_corpus(&spec, out).map_err(scenario_error)
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub analysis: CorpusAnalysis,
    pub bundle: BundleManifest,
}

/// Analyze `corpus` and write the bundle to `out`. The bundle is written
/// even when every session fails, so the failure list is inspectable; that
/// case is still reported as an analysis error.
pub fn cmd_analyze(corpus: &Path, config: &RunConfig, out: &Path, jobs: Option<usize>) -> Result<AnalyzeOutcome> {
    config.validate()?;
    let analysis = analyze_corpus(corpus, config, jobs)?;
    let mut files = bundle_files(&analysis, config);
    let summary = String::from_utf8(files["summary.json"].clone()).expect("json is utf-8");
    let formats: Vec<ReportFormat> = config.formats.iter().copied().filter(|f| *f != ReportFormat::Csv).collect();
    files.extend(render(&analysis.tables, Some(&summary), &formats));
    let bundle = store_results(&files, out).map_err(CliError::data)?;
    if analysis.declared > 0 && analysis.sessions.is_empty() {
        return Err(CliError::Analysis(format!("none of the {} sessions could be analyzed", analysis.declared)));
    }
    Ok(AnalyzeOutcome { analysis, bundle })
}

/// Re-render a stored bundle. Hashes are verified before anything is read.
pub fn cmd_report(bundle: &Path, formats: &[ReportFormat], out: &Path) -> Result<BundleManifest> {
    let manifest = read_bundle(bundle).map_err(CliError::data)?;
    let mut tables = BTreeMap::new();
    for f in &manifest.files {
        if let Some(name) = f.path.strip_prefix("tables/").and_then(|n| n.strip_suffix(".csv")) {
            let p = bundle.join(&f.path);
            let bytes = std::fs::read(&p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            let t = Table::parse(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", f.path)))?;
            tables.insert(name.to_string(), t);
        }
    }
    let summary = match manifest.get("summary.json") {
        Some(e) => Some(std::fs::read_to_string(bundle.join(&e.path)).map_err(|source| CliError::Io { path: bundle.join(&e.path), source })?),
        None => None,
    };
    let formats = if formats.is_empty() { &[ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Svg][..] } else { formats };
    store_results(&render(&tables, summary.as_deref(), formats), out).map_err(CliError::data)
}
