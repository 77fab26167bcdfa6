use std::path::Path;

use carespace_core::vitals::{parse_vitals_table, vitals_report, AggregationOptions, VitalsMeasure, VitalsStage};

fn fixture() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/vitals_readings.csv")).unwrap()
}

#[test]
fn report_matches_golden_file() {
    let readings = parse_vitals_table(&fixture()).unwrap();
    assert_eq!(readings.len(), 32 * 4);
    let csv = vitals_report(&readings, &AggregationOptions::default()).unwrap().to_csv();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/vitals_by_reading.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &csv).unwrap();
    }
    assert_eq!(csv, std::fs::read_to_string(golden).unwrap());
}

#[test]
fn baseline_systolic_cell() {
    let readings = parse_vitals_table(&fixture()).unwrap();
    let report = vitals_report(&readings, &AggregationOptions::default()).unwrap();
    let s = report.get(VitalsStage::Baseline, VitalsMeasure::Systolic).unwrap();
    assert!((s.mean - 112.07).abs() <= 0.01, "{}", s.mean);
    assert!((s.std - 15.19).abs() <= 0.01, "{}", s.std);
}

#[test]
fn fixture_rows_from_the_appendix() {
    let readings = parse_vitals_table(&fixture()).unwrap();
    let p1 = readings.iter().find(|r| r.participant_id == 1 && r.stage == VitalsStage::Baseline).unwrap();
    assert_eq!((p1.systolic, p1.pulse), (None, Some(98.0)));
    let p2 = readings.iter().find(|r| r.participant_id == 2 && r.stage == VitalsStage::Baseline).unwrap();
    assert_eq!((p2.systolic, p2.diastolic, p2.pulse), (Some(99.0), Some(62.0), Some(94.0)));
}
