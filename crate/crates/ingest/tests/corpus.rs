use std::collections::BTreeMap;
use std::path::Path;

use carespace_core::eda::{process_session_eda, EdaConfig};
use carespace_core::spatial::{detect_behaviors, BehaviorKind, SpatialConfig};
use carespace_core::{Stream, TimedSeries, Unit};
use carespace_ingest::format::format_scalar;
use carespace_ingest::scenario::ForcedGap;
use carespace_ingest::simulate::session_dir;
use carespace_ingest::{
    load_corpus_index, load_session, read_bundle, read_session_truth, render_corpus, render_session_files,
    simulate_corpus, IngestError, ScenarioSpec,
};
use proptest::prelude::*;

fn small_spec(seed: u64, participants: u32) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(seed);
    spec.participants = participants;
    spec.pepper_max_participants = 1;
    spec
}

fn manifest_path(root: &Path, pid: u32) -> std::path::PathBuf {
    root.join(session_dir(pid)).join("manifest.json")
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn same_spec_gives_identical_corpora() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = small_spec(5, 2);
    simulate_corpus(&spec, &a.path().join("c")).unwrap();
    simulate_corpus(&spec, &b.path().join("c")).unwrap();
    let ta = read_tree(&a.path().join("c"));
    assert!(ta.len() > 10);
    assert_eq!(ta, read_tree(&b.path().join("c")));
}

#[test]
fn seed_changes_data() {
    let (x, _, _) = render_corpus(&small_spec(1, 1)).unwrap();
    let (y, _, _) = render_corpus(&small_spec(2, 1)).unwrap();
    assert_ne!(x["sessions/p001/eda.csv"], y["sessions/p001/eda.csv"]);
}

#[test]
fn modalities_draw_from_independent_streams() {
    let base = small_spec(9, 1);
    let mut louder = base.clone();
    louder.eda.noise_sd_us = 0.05;
    let (x, _, _) = render_corpus(&base).unwrap();
    let (y, _, _) = render_corpus(&louder).unwrap();
    assert_ne!(x["sessions/p001/eda.csv"], y["sessions/p001/eda.csv"]);
    for f in ["events.csv", "forceplate_left.csv", "forceplate_right.csv"] {
        let k = format!("sessions/p001/{f}");
        assert_eq!(x[&k], y[&k], "{f}");
    }
    assert_eq!(x["vitals.csv"], y["vitals.csv"]);
}

#[test]
fn reload_reproduces_stream_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    simulate_corpus(&small_spec(3, 2), &root).unwrap();
    for pid in 1..=2 {
        let s = load_session(&manifest_path(&root, pid)).unwrap();
        let files = render_session_files(&s).unwrap();
        assert_eq!(files.len(), 4);
        for (rel, text) in files {
            let on_disk = std::fs::read_to_string(root.join(session_dir(pid)).join(&rel)).unwrap();
            assert!(on_disk == text, "{rel} differs after reload");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn round_trip_holds_for_any_seed(seed in any::<u64>(), gaps_per_hour in 0.0f64..20.0, noise in 0.0f64..0.05) {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("c");
        let mut spec = small_spec(seed, 1);
        spec.dropout.gaps_per_hour = gaps_per_hour;
        spec.eda.noise_sd_us = noise;
        simulate_corpus(&spec, &root).unwrap();
        let s = load_session(&manifest_path(&root, 1)).unwrap();
        for (rel, text) in render_session_files(&s).unwrap() {
            let on_disk = std::fs::read_to_string(root.join(session_dir(1)).join(&rel)).unwrap();
            prop_assert!(on_disk == text, "{} differs after reload", rel);
        }
    }
}

#[test]
fn canonical_session_loads_every_channel() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    let sim = simulate_corpus(&small_spec(3, 1), &root).unwrap();
    let s = load_session(&manifest_path(&root, 1)).unwrap();
    assert_eq!(s.record.timeline.len(), 15);
    assert!(s.record.timeline.is_canonical());
    let names: Vec<&str> = s.record.streams.keys().map(String::as_str).collect();
    assert_eq!(names, ["eda", "forceplate_left", "forceplate_right"]);
    assert!(!s.record.events.is_empty());
    assert!(s.record.out_of_span().is_empty());
    // alignment removes the simulated device offsets
    let Stream::Scalar(eda) = &s.record.streams["eda"] else { panic!("eda is scalar") };
    assert_eq!(eda.t_ms[0], 0);
    assert_eq!(eda.t_ms[1], 250);
    assert!(sim.sessions[0].clock_offsets_ms.values().any(|&o| o != 0));
    assert!(read_bundle(&root).is_ok());
}

#[test]
fn corpus_index_attaches_tables() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    simulate_corpus(&small_spec(3, 3), &root).unwrap();
    let idx = load_corpus_index(&root).unwrap();
    assert_eq!(idx.session_paths().len(), 3);
    assert_eq!(idx.tables.vitals.len(), 12);
    assert_eq!(idx.tables.post_study.len(), 3);
    assert_eq!(idx.tables.presentation.len(), 18);
    let mut s = load_session(&idx.session_paths()[1]).unwrap();
    idx.tables.attach(&mut s.record);
    assert_eq!(s.record.vitals.len(), 4);
    assert_eq!(s.record.post_study.as_ref().unwrap().participant_id, 2);
    assert_eq!(s.record.presentation.len(), 6);
}

fn write_minimal(dir: &Path, eda: &TimedSeries, rate: f64, path: &str) -> std::path::PathBuf {
    std::fs::write(dir.join("eda.csv"), format_scalar(eda)).unwrap();
    let m = format!(
        r#"{{"schema_version":1,"participant_id":7,"custom_timeline":true,
            "timeline":[{{"activity":"rest","start_ms":0,"end_ms":10000}}],
            "channels":[{{"name":"eda","kind":"eda","rate_hz":{rate},"path":"{path}"}}]}}"#
    );
    let p = dir.join("manifest.json");
    std::fs::write(&p, m).unwrap();
    p
}

#[test]
fn minimal_manifest_has_one_channel() {
    let dir = tempfile::tempdir().unwrap();
    let eda = TimedSeries::new((0..40).map(|i| i * 250).collect(), vec![1.0; 40], Unit::Microsiemens).unwrap();
    let s = load_session(&write_minimal(dir.path(), &eda, 4.0, "eda.csv")).unwrap();
    assert_eq!(s.record.streams.len(), 1);
    assert_eq!(s.record.participant_id, 7);
}

#[test]
fn absent_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let eda = TimedSeries::new(vec![0, 250], vec![1.0; 2], Unit::Microsiemens).unwrap();
    let err = load_session(&write_minimal(dir.path(), &eda, 4.0, "nope.csv")).unwrap_err();
    match &err {
        IngestError::MissingFile { path } => assert!(path.ends_with("nope.csv")),
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("nope.csv"));
}

#[test]
fn declared_rate_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let eda = TimedSeries::new((0..40).map(|i| i * 250).collect(), vec![1.0; 40], Unit::Microsiemens).unwrap();
    let err = load_session(&write_minimal(dir.path(), &eda, 32.0, "eda.csv")).unwrap_err();
    assert!(matches!(err, IngestError::RateMismatch { .. }), "{err:?}");
}

#[test]
fn decreasing_timestamp_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let eda = TimedSeries::new(vec![0, 250, 500, 400, 750], vec![1.0; 5], Unit::Microsiemens).unwrap();
    match load_session(&write_minimal(dir.path(), &eda, 4.0, "eda.csv")) {
        Err(IngestError::Parse { line, path, .. }) => {
            assert_eq!(line, 5);
            assert!(path.ends_with("eda.csv"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn forced_three_second_gap_is_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    let mut spec = small_spec(4, 1);
    spec.forceplate.enabled = false;
    spec.dropout.forced.push(ForcedGap {
        participant: 1,
        start_s: 1000.0,
        length_s: 3.0,
    });
    simulate_corpus(&spec, &root).unwrap();
    let s = load_session(&manifest_path(&root, 1)).unwrap();
    let Stream::Scalar(eda) = &s.record.streams["eda"] else { panic!() };
    let out = process_session_eda(eda, &s.record.timeline, &EdaConfig::default()).unwrap();
    assert_eq!(out.unfilled_gaps.len(), 1);
    let g = out.unfilled_gaps[0].range;
    assert_eq!((g.start, g.end), (4000, 4012));
    for i in g.start..g.end {
        assert!(out.tonic.is_gap(i));
    }
    assert_eq!(out.runs.len(), 2);
    for scr in &out.scrs {
        assert!(!(1_000_000..1_003_000).contains(&scr.peak_ms));
    }
}

#[test]
fn noise_free_counts_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    let mut spec = small_spec(8, 2);
    spec.forceplate.enabled = false;
    simulate_corpus(&spec, &root).unwrap();
    for pid in 1..=2 {
        let s = load_session(&manifest_path(&root, pid)).unwrap();
        let truth = read_session_truth(&root.join(session_dir(pid))).unwrap();
        let Stream::Scalar(eda) = &s.record.streams["eda"] else { panic!() };
        let out = process_session_eda(eda, &s.record.timeline, &EdaConfig::default()).unwrap();
        assert_eq!(out.scrs.len(), truth.scrs.len());
        for (d, t) in out.scrs.iter().zip(&truth.scrs) {
            assert!((d.peak_ms - t.peak_ms).abs() <= 1500, "{d:?} vs {t:?}");
            assert_eq!(d.activity.as_ref().map(|a| a.as_str()), Some(t.activity.as_str()));
        }
    }
}

#[test]
fn spatial_detection_matches_script() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("c");
    let mut spec = small_spec(6, 3);
    spec.forceplate.enabled = false;
    simulate_corpus(&spec, &root).unwrap();
    let idx = load_corpus_index(&root).unwrap();
    let config = SpatialConfig {
        zone_map: idx.manifest.room.zone_map.clone(),
        exit_doors: idx.manifest.room.exit_doors.clone(),
        ..SpatialConfig::default()
    };
    for pid in 1..=3 {
        let s = load_session(&manifest_path(&root, pid)).unwrap();
        let truth = read_session_truth(&root.join(session_dir(pid))).unwrap();
        let report = detect_behaviors(&s.record.events, &config);
        let exits: Vec<_> = report.of_kind(BehaviorKind::Exit).map(|e| e.start).collect();
        assert_eq!(exits, truth.exits.iter().map(|e| e.start_ms).collect::<Vec<_>>());
        let wander: Vec<_> = report.of_kind(BehaviorKind::Wandering).map(|e| (e.start, e.end)).collect();
        assert_eq!(wander, truth.wandering.iter().map(|e| (e.start_ms, e.end_ms)).collect::<Vec<_>>());
        let seated: Vec<_> = report.of_kind(BehaviorKind::Seated).map(|e| (e.start, e.end)).collect();
        assert_eq!(seated, truth.seated.iter().map(|e| (e.start_ms, e.end_ms)).collect::<Vec<_>>());
    }
}
