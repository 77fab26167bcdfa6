//! Post-study and presentation survey responses with box-plot summaries.
//!
//! Post-study items use 1 to 5 scales (1 = very happy, calm, or in control).
//! Presentation items use 1 to 9 scales with 9 the most unpleasant or most
//! aroused.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyActivity {
    Pill,
    Treadmill,
    Presentation,
    Interview,
}

impl SurveyActivity {
    pub const ALL: [SurveyActivity; 4] = [
        SurveyActivity::Pill,
        SurveyActivity::Treadmill,
        SurveyActivity::Presentation,
        SurveyActivity::Interview,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SurveyActivity::Pill => "pill",
            SurveyActivity::Treadmill => "treadmill",
            SurveyActivity::Presentation => "presentation",
            SurveyActivity::Interview => "interview",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Valence,
    Arousal,
    Control,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Valence, Dimension::Arousal, Dimension::Control];

    pub fn label(&self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Control => "control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PillCondition {
    Friendly,
    Authoritative,
}

impl PillCondition {
    pub fn label(&self) -> &'static str {
        match self {
            PillCondition::Friendly => "friendly",
            PillCondition::Authoritative => "authoritative",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityScores {
    pub valence: Option<u8>,
    pub arousal: Option<u8>,
    pub control: Option<u8>,
}

impl ActivityScores {
    pub fn get(&self, d: Dimension) -> Option<u8> {
        match d {
            Dimension::Valence => self.valence,
            Dimension::Arousal => self.arousal,
            Dimension::Control => self.control,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostStudyResponse {
    pub participant_id: u32,
    pub condition: PillCondition,
    pub pill: ActivityScores,
    pub treadmill: ActivityScores,
    pub presentation: ActivityScores,
    pub interview: ActivityScores,
}

impl PostStudyResponse {
    pub fn scores(&self, a: SurveyActivity) -> &ActivityScores {
        match a {
            SurveyActivity::Pill => &self.pill,
            SurveyActivity::Treadmill => &self.treadmill,
            SurveyActivity::Presentation => &self.presentation,
            SurveyActivity::Interview => &self.interview,
        }
    }

    /// Number of unanswered items.
    pub fn missing_count(&self) -> usize {
        SurveyActivity::ALL
            .iter()
            .flat_map(|a| Dimension::ALL.iter().map(move |d| self.scores(*a).get(*d)))
            .filter(Option::is_none)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationResponse {
    pub participant_id: u32,
    pub stimulus: String,
    pub valence: Option<u8>,
    pub arousal: Option<u8>,
}

pub const POST_STUDY_SCALE: (u8, u8) = (1, 5);
pub const PRESENTATION_SCALE: (u8, u8) = (1, 9);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyIssue {
    pub participant_id: u32,
    pub field: String,
    pub value: u8,
    pub scale: (u8, u8),
}

impl std::fmt::Display for SurveyIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "participant {}: {} = {} outside {}..={}",
            self.participant_id, self.field, self.value, self.scale.0, self.scale.1
        )
    }
}

fn check(issues: &mut Vec<SurveyIssue>, pid: u32, field: String, v: Option<u8>, scale: (u8, u8)) {
    if let Some(x) = v {
        if x < scale.0 || x > scale.1 {
            issues.push(SurveyIssue {
                participant_id: pid,
                field,
                value: x,
                scale,
            });
        }
    }
}

/// Missing items pass; present ones must lie on the 1 to 5 scale.
pub fn validate_post_study(r: &PostStudyResponse) -> std::result::Result<(), Vec<SurveyIssue>> {
    let mut issues = Vec::new();
    for a in SurveyActivity::ALL {
        for d in Dimension::ALL {
            check(
                &mut issues,
                r.participant_id,
                format!("{}.{}", a.label(), d.label()),
                r.scores(a).get(d),
                POST_STUDY_SCALE,
            );
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

pub fn validate_presentation(r: &PresentationResponse) -> std::result::Result<(), Vec<SurveyIssue>> {
    let mut issues = Vec::new();
    let pid = r.participant_id;
    check(&mut issues, pid, format!("{}.valence", r.stimulus), r.valence, PRESENTATION_SCALE);
    check(&mut issues, pid, format!("{}.arousal", r.stimulus), r.arousal, PRESENTATION_SCALE);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Quartiles are medians of the lower and upper halves; for odd counts the
/// median itself belongs to neither half.
pub fn boxplot_stats(scores: &[f64]) -> Result<BoxplotStats> {
    if scores.is_empty() {
        return Err(CoreError::InsufficientData("no scores".into()));
    }
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite(i));
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let (q1, q3) = if n == 1 {
        (v[0], v[0])
    } else {
        let half = n / 2;
        (median_sorted(&v[..half]), median_sorted(&v[n - half..]))
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(BoxplotStats {
        min: v[0],
        q1,
        median: median_sorted(&v),
        q3,
        max: v[n - 1],
        mean,
        std: var.sqrt(),
        n,
    })
}

fn present<I: IntoIterator<Item = Option<u8>>>(it: I) -> Vec<f64> {
    it.into_iter().flatten().map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionComparison {
    pub activity: SurveyActivity,
    pub dimension: Dimension,
    /// `None` when the condition has no answered items.
    pub friendly: Option<BoxplotStats>,
    pub authoritative: Option<BoxplotStats>,
}

pub fn condition_compare(responses: &[PostStudyResponse], activity: SurveyActivity, dimension: Dimension) -> ConditionComparison {
    let stats = |c: PillCondition| {
        boxplot_stats(&present(
            responses
                .iter()
                .filter(|r| r.condition == c)
                .map(|r| r.scores(activity).get(dimension)),
        ))
        .ok()
    };
    ConditionComparison {
        activity,
        dimension,
        friendly: stats(PillCondition::Friendly),
        authoritative: stats(PillCondition::Authoritative),
    }
}

/// Box-plot statistics for every answered post-study item.
pub fn post_study_summary(responses: &[PostStudyResponse]) -> BTreeMap<(SurveyActivity, Dimension), BoxplotStats> {
    let mut out = BTreeMap::new();
    for a in SurveyActivity::ALL {
        for d in Dimension::ALL {
            if let Ok(s) = boxplot_stats(&present(responses.iter().map(|r| r.scores(a).get(d)))) {
                out.insert((a, d), s);
            }
        }
    }
    out
}

/// Valence and arousal statistics per stimulus.
pub fn presentation_summary(responses: &[PresentationResponse]) -> BTreeMap<(String, Dimension), BoxplotStats> {
    let mut grouped: BTreeMap<(String, Dimension), Vec<f64>> = BTreeMap::new();
    for r in responses {
        for (d, v) in [(Dimension::Valence, r.valence), (Dimension::Arousal, r.arousal)] {
            if let Some(x) = v {
                grouped.entry((r.stimulus.clone(), d)).or_default().push(f64::from(x));
            }
        }
    }
    grouped
        .into_iter()
        .filter_map(|(k, v)| boxplot_stats(&v).ok().map(|s| (k, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(pid: u32, condition: PillCondition, valence: Option<u8>) -> PostStudyResponse {
        let s = ActivityScores {
            valence,
            arousal: Some(2),
            control: None,
        };
        PostStudyResponse {
            participant_id: pid,
            condition,
            pill: s,
            treadmill: s,
            presentation: s,
            interview: s,
        }
    }

    #[test]
    fn boxplot_examples() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (1.5, 3.0, 4.5));
        let b = boxplot_stats(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max, b.std), (4.0, 4.0, 4.0, 4.0, 4.0, 0.0));
        let b = boxplot_stats(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (1.5, 2.5, 3.5));
        let b = boxplot_stats(&[7.0]).unwrap();
        assert_eq!((b.q1, b.q3), (7.0, 7.0));
        assert!(boxplot_stats(&[]).is_err());
    }

    #[test]
    fn validation() {
        let ok = response(1, PillCondition::Friendly, Some(3));
        assert!(validate_post_study(&ok).is_ok());
        assert_eq!(ok.missing_count(), 4);
        let bad = response(1, PillCondition::Friendly, Some(6));
        let issues = validate_post_study(&bad).unwrap_err();
        assert_eq!(issues.len(), 4);
        assert_eq!(issues[0].field, "pill.valence");
        let pres = PresentationResponse {
            participant_id: 1,
            stimulus: "img_01".into(),
            valence: Some(9),
            arousal: Some(0),
        };
        assert_eq!(validate_presentation(&pres).unwrap_err().len(), 1);
    }

    #[test]
    fn single_condition_reports_other_absent() {
        let rs = vec![response(1, PillCondition::Friendly, Some(1)), response(2, PillCondition::Friendly, Some(2))];
        let c = condition_compare(&rs, SurveyActivity::Pill, Dimension::Valence);
        assert!(c.friendly.is_some());
        assert!(c.authoritative.is_none());
        let none = condition_compare(&rs, SurveyActivity::Pill, Dimension::Control);
        assert!(none.friendly.is_none());
    }
}
