//! Human-readable renderings of the analysis tables: a Markdown report and
//! one SVG per figure-style table.

use std::collections::BTreeMap;

use crate::config::ReportFormat;
use crate::svg::{bars, boxplot, BoxItem};
use crate::table::Table;

/// Tables shown in full in the Markdown report, in display order.
const REPORT_SECTIONS: [(&str, &str); 10] = [
    ("eda_significant_pairs", "Strongly correlated participant pairs"),
    ("eda_mean_correlation", "Mean correlation across all participant pairs"),
    ("eda_extrema_tally", "Activities holding each participant's extreme value"),
    ("vitals_by_reading", "Vitals by reading"),
    ("vitals_warnings", "Vitals warnings"),
    ("cop_speed_correlation", "COP feature correlation with treadmill speed"),
    ("survey_post_study", "Post-study self-assessment"),
    ("survey_condition", "Post-study self-assessment by pill condition"),
    ("survey_presentation", "Picture and sound stimulus ratings"),
    ("eda_extrema_ties", "Tied extrema"),
];

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

/// Rows of `t` grouped by the value in column `key`, first-seen order kept.
fn group<'a>(t: &'a Table, key: &str) -> Vec<(&'a str, Vec<&'a Vec<String>>)> {
    let Some(k) = t.col(key) else { return Vec::new() };
    let mut out: Vec<(&str, Vec<&Vec<String>>)> = Vec::new();
    for r in &t.rows {
        match out.iter_mut().find(|(g, _)| *g == r[k]) {
            Some((_, rows)) => rows.push(r),
            None => out.push((&r[k], vec![r])),
        }
    }
    out
}

fn box_items(t: &Table, rows: &[&Vec<String>], label: &str) -> Vec<BoxItem> {
    let c = |n: &str| t.col(n).expect("box-plot column");
    let (l, mn, q1, md, q3, mx, me) = (c(label), c("min"), c("q1"), c("median"), c("q3"), c("max"), c("mean"));
    rows.iter()
        .map(|r| BoxItem {
            label: r[l].clone(),
            min: num(&r[mn]),
            q1: num(&r[q1]),
            median: num(&r[md]),
            q3: num(&r[q3]),
            max: num(&r[mx]),
            mean: num(&r[me]),
        })
        .collect()
}

fn single_bars(t: &Table, rows: &[&Vec<String>], label: &str, value: &str) -> (Vec<String>, Vec<f64>) {
    let (l, v) = (t.col(label).expect("label column"), t.col(value).expect("value column"));
    rows.iter().map(|r| (r[l].clone(), num(&r[v]))).unzip()
}

pub fn plots(tables: &BTreeMap<String, Table>) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut put = |name: String, svg: String| {
        out.insert(format!("plots/{name}.svg"), svg.into_bytes());
    };
    if let Some(t) = tables.get("survey_post_study") {
        for (act, rows) in group(t, "activity") {
            put(format!("post_study_{act}"), boxplot(&format!("Post-study ratings: {act}"), (0.5, 5.5), &box_items(t, &rows, "dimension")));
        }
    }
    if let Some(t) = tables.get("survey_presentation") {
        for (dim, rows) in group(t, "dimension") {
            put(format!("presentation_{dim}"), boxplot(&format!("Stimulus ratings: {dim}"), (0.5, 9.5), &box_items(t, &rows, "stimulus")));
        }
    }
    if let Some(t) = tables.get("cop_speed_correlation") {
        for (plate, rows) in group(t, "plate") {
            let (cats, vals) = single_bars(t, &rows, "feature", "mean_r");
            put(
                format!("cop_speed_correlation_{plate}"),
                bars(&format!("Mean correlation with speed: {plate} plate"), (-1.0, 1.0), &cats, &[("mean_r".into(), vals)]),
            );
        }
    }
    if let Some(t) = tables.get("eda_mean_correlation") {
        let rows: Vec<&Vec<String>> = t.rows.iter().collect();
        let (cats, vals) = single_bars(t, &rows, "feature", "mean_r");
        put("eda_mean_correlation".into(), bars("Mean pairwise correlation of EDA features", (-1.0, 1.0), &cats, &[("mean_r".into(), vals)]));
    }
    if let Some(t) = tables.get("eda_extrema_tally") {
        for (feature, rows) in group(t, "feature") {
            let (cats, max) = single_bars(t, &rows, "activity", "max_count");
            let (_, min) = single_bars(t, &rows, "activity", "min_count");
            let top = max.iter().chain(&min).cloned().fold(1.0, f64::max);
            put(
                format!("eda_extrema_{feature}"),
                bars(&format!("Extrema per activity: {feature}"), (0.0, top), &cats, &[("max".into(), max), ("min".into(), min)]),
            );
        }
    }
    out
}

pub fn markdown(tables: &BTreeMap<String, Table>, summary: Option<&str>) -> String {
    let mut out = String::from("# Analysis report\n\n");
    if let Some(s) = summary {
        out.push_str("## Summary\n\n```json\n");
        out.push_str(s.trim_end());
        out.push_str("\n```\n\n");
    }
    for (name, title) in REPORT_SECTIONS {
        let Some(t) = tables.get(name) else { continue };
        out.push_str(&format!("## {title}\n\n"));
        if t.rows.is_empty() {
            out.push_str("_none_\n\n");
        } else {
            out.push_str(&t.to_markdown());
            out.push('\n');
        }
    }
    if let Some(t) = tables.get("spatial_episodes") {
        out.push_str("## Spatial episodes\n\n");
        let mut counts = Table::new(&["participant", "kind", "episodes"]);
        let (p, k) = (t.col("participant").expect("participant"), t.col("kind").expect("kind"));
        let mut tally: BTreeMap<(u32, &str), usize> = BTreeMap::new();
        for r in &t.rows {
            *tally.entry((r[p].parse().unwrap_or(0), r[k].as_str())).or_default() += 1;
        }
        for ((pid, kind), n) in tally {
            counts.push(vec![pid.to_string(), kind.into(), n.to_string()]);
        }
        out.push_str(&counts.to_markdown());
        out.push('\n');
    }
    let listed: Vec<&String> = tables.keys().filter(|k| !REPORT_SECTIONS.iter().any(|(n, _)| n == k)).collect();
    if !listed.is_empty() {
        out.push_str("## Detail tables\n\n");
        for k in listed {
            out.push_str(&format!("- `tables/{k}.csv` ({} rows)\n", tables[k].rows.len()));
        }
    }
    out
}

/// Rendered files for `formats`. CSV copies the tables themselves.
pub fn render(tables: &BTreeMap<String, Table>, summary: Option<&str>, formats: &[ReportFormat]) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for f in formats {
        match f {
            ReportFormat::Csv => {
                for (name, t) in tables {
                    out.insert(format!("tables/{name}.csv"), t.to_csv());
                }
            }
            ReportFormat::Markdown => {
                out.insert("report.md".into(), markdown(tables, summary).into_bytes());
            }
            ReportFormat::Svg => out.extend(plots(tables)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post_study() -> Table {
        let mut t = Table::new(&["activity", "dimension", "n", "min", "q1", "median", "q3", "max", "mean", "std"]);
        for act in ["pill", "treadmill"] {
            for dim in ["valence", "arousal"] {
                t.push([act, dim, "3", "1", "2", "3", "4", "5", "3", "1"].map(String::from).to_vec());
            }
        }
        t
    }

    #[test]
    fn one_boxplot_per_activity() {
        let tables = BTreeMap::from([("survey_post_study".to_string(), post_study())]);
        let p = plots(&tables);
        assert_eq!(p.keys().collect::<Vec<_>>(), ["plots/post_study_pill.svg", "plots/post_study_treadmill.svg"]);
    }

    #[test]
    fn markdown_lists_unsectioned_tables() {
        let tables = BTreeMap::from([("survey_post_study".to_string(), post_study()), ("eda_scrs".to_string(), Table::new(&["x"]))]);
        let md = markdown(&tables, None);
        assert!(md.contains("## Post-study self-assessment"));
        assert!(md.contains("`tables/eda_scrs.csv` (0 rows)"));
    }
}
