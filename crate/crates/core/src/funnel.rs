//! Funnel statistics: named stage counts, conservation checks and exact shares.
//!
//! A funnel is a fixed set of stages, each with named children that must sum
//! to the stage total. Counts may be partial (a published breakdown often
//! names only some children); a stage is then checked with `≤` instead of
//! `=`, and a stage whose total is absent is not checked at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PairKey;
use crate::reconcile::{LeftCause, LeftVerdict, Partition, RightStatus};

/// `(stage, children)`; children must sum to the stage.
pub const STAGES: [(&str, &[&str]); 9] = [
    ("left_total", &["matched", "left_only"]),
    ("right_total", &["matched", "right_only"]),
    ("left_only", &["late_arrival", "left_remaining"]),
    (
        "left_remaining",
        &[
            "project_not_in_graph",
            "publication_not_in_graph",
            "malformed_doi",
            "expected_from_crossref_strict",
            "retrievable_via_relaxed",
            "not_in_crossref_funding",
        ],
    ),
    ("right_only", &["crossref_funding_match", "right_unmatched"]),
    ("right_unmatched", &["sampled", "not_sampled"]),
    ("sampled", &["external_funding_match", "manual_review"]),
    ("manual_review", &["dedup_suspect", "manually_checked"]),
    (
        "manually_checked",
        &["manually_confirmed", "data_mistake", "unverified"],
    ),
];

/// Flag counts: not a partition of their parent, only bounded by it.
pub const FLAGS: [(&str, &str); 1] = [("date_implausible", "left_only")];

/// Share of left-remaining links that Crossref funding data cannot recover
/// under either rule level.
pub const NOT_IN_CROSSREF_SHARE: &str = "not_in_crossref/left_remaining";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FunnelError {
    #[error("unknown funnel count {0:?}")]
    UnknownStage(String),
    #[error("conservation violated at stage {stage}: total {total}, children sum {children_sum}")]
    Conservation {
        stage: String,
        total: u64,
        children_sum: u64,
    },
    #[error("count {child} = {value} exceeds its stage {stage} = {total}")]
    ExceedsParent {
        stage: String,
        child: String,
        value: u64,
        total: u64,
    },
}

/// An exact ratio; the percentage is derived on display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub numerator: u64,
    pub denominator: u64,
}

impl Share {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Share {
            numerator,
            denominator,
        }
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.denominator != 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    /// Percentage in tenths, rounded half up with integer arithmetic.
    pub fn tenths_of_percent(&self) -> Option<u64> {
        if self.denominator == 0 {
            return None;
        }
        let n = self.numerator as u128 * 2000 + self.denominator as u128;
        Some((n / (2 * self.denominator as u128)) as u64)
    }

    /// `"47.2%"`, or `"n/a"` for a zero denominator.
    pub fn percent(&self) -> String {
        match self.tenths_of_percent() {
            Some(t) => format!("{}.{}%", t / 10, t % 10),
            None => "n/a".to_string(),
        }
    }

    pub fn fraction(&self) -> String {
        format!("{}/{}", self.numerator, self.denominator)
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.percent(), self.fraction())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCheck {
    pub stage: String,
    pub total: u64,
    pub children_sum: u64,
    /// All children present: the check was an equality.
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelStats {
    pub counts: BTreeMap<String, u64>,
    /// Keyed `child/stage`, plus [`NOT_IN_CROSSREF_SHARE`].
    pub shares: BTreeMap<String, Share>,
    pub checks: Vec<StageCheck>,
    /// Stages with children present but no total, left unchecked.
    pub unchecked: Vec<String>,
}

impl FunnelStats {
    pub fn count(&self, name: &str) -> Option<u64> {
        self.counts.get(name).copied()
    }

    pub fn share(&self, key: &str) -> Option<&Share> {
        self.shares.get(key)
    }
}

fn known_names() -> BTreeSet<&'static str> {
    let mut names = BTreeSet::new();
    for (stage, children) in STAGES {
        names.insert(stage);
        names.extend(children.iter().copied());
    }
    for (flag, _) in FLAGS {
        names.insert(flag);
    }
    names
}

pub fn funnel_stats(counts: &BTreeMap<String, u64>) -> Result<FunnelStats, FunnelError> {
    let known = known_names();
    if let Some(unknown) = counts.keys().find(|k| !known.contains(k.as_str())) {
        return Err(FunnelError::UnknownStage(unknown.clone()));
    }
    let mut stats = FunnelStats {
        counts: counts.clone(),
        ..FunnelStats::default()
    };
    for (stage, children) in STAGES {
        let present: Vec<(&str, u64)> = children
            .iter()
            .filter_map(|c| counts.get(*c).map(|v| (*c, *v)))
            .collect();
        if present.is_empty() {
            continue;
        }
        let Some(&total) = counts.get(stage) else {
            stats.unchecked.push(stage.to_string());
            continue;
        };
        let children_sum: u64 = present.iter().map(|(_, v)| v).sum();
        let complete = present.len() == children.len();
        if complete && children_sum != total {
            return Err(FunnelError::Conservation {
                stage: stage.to_string(),
                total,
                children_sum,
            });
        }
        if !complete && children_sum > total {
            return Err(FunnelError::Conservation {
                stage: stage.to_string(),
                total,
                children_sum,
            });
        }
        for (child, value) in &present {
            stats
                .shares
                .insert(format!("{child}/{stage}"), Share::new(*value, total));
        }
        stats.checks.push(StageCheck {
            stage: stage.to_string(),
            total,
            children_sum,
            complete,
        });
    }
    for (flag, stage) in FLAGS {
        if let (Some(&value), Some(&total)) = (counts.get(flag), counts.get(stage)) {
            if value > total {
                return Err(FunnelError::ExceedsParent {
                    stage: stage.to_string(),
                    child: flag.to_string(),
                    value,
                    total,
                });
            }
            stats
                .shares
                .insert(format!("{flag}/{stage}"), Share::new(value, total));
        }
    }
    if let (Some(&remaining), Some(&relaxed)) = (
        counts.get("left_remaining"),
        counts.get("retrievable_via_relaxed"),
    ) {
        let strict = counts
            .get("expected_from_crossref_strict")
            .copied()
            .unwrap_or(0);
        // the stage check above guarantees relaxed + strict <= remaining
        stats.shares.insert(
            NOT_IN_CROSSREF_SHARE.to_string(),
            Share::new(remaining - relaxed - strict, remaining),
        );
    }
    Ok(stats)
}

/// Comparison overview counts from a partition.
pub fn overview_counts(partition: &Partition) -> BTreeMap<String, u64> {
    BTreeMap::from([
        ("left_total".to_string(), partition.left_total() as u64),
        ("right_total".to_string(), partition.right_total() as u64),
        ("matched".to_string(), partition.matched.len() as u64),
        ("left_only".to_string(), partition.left_only.len() as u64),
        ("right_only".to_string(), partition.right_only.len() as u64),
    ])
}

fn left_stage(cause: LeftCause) -> &'static str {
    match cause {
        LeftCause::LateArrival => "late_arrival",
        LeftCause::ProjectNotInGraph => "project_not_in_graph",
        LeftCause::PublicationNotInGraph => "publication_not_in_graph",
        LeftCause::MalformedDoi => "malformed_doi",
        LeftCause::ExpectedFromCrossrefStrict => "expected_from_crossref_strict",
        LeftCause::RetrievableViaRelaxed => "retrievable_via_relaxed",
        LeftCause::NotInCrossrefFunding => "not_in_crossref_funding",
    }
}

/// Left-only funnel counts; every cause appears, zero or not.
pub fn left_counts<'a>(
    verdicts: impl IntoIterator<Item = &'a LeftVerdict>,
) -> BTreeMap<String, u64> {
    let mut counts: BTreeMap<String, u64> = LeftCause::ALL
        .iter()
        .map(|c| (left_stage(*c).to_string(), 0))
        .collect();
    let mut total = 0;
    let mut flagged = 0;
    for v in verdicts {
        total += 1;
        flagged += v.date_implausible as u64;
        *counts.get_mut(left_stage(v.cause)).unwrap() += 1;
    }
    let late = counts["late_arrival"];
    counts.insert("left_only".into(), total);
    counts.insert("left_remaining".into(), total - late);
    counts.insert("date_implausible".into(), flagged);
    counts
}

/// Right-only funnel counts. With `sample`, the sampled stage holds the
/// sampled unmatched keys only; without it, every unmatched key is "sampled".
pub fn right_counts(
    statuses: &BTreeMap<PairKey, RightStatus>,
    sample: Option<&BTreeSet<PairKey>>,
) -> BTreeMap<String, u64> {
    let mut c: BTreeMap<&str, u64> = [
        "right_only",
        "crossref_funding_match",
        "right_unmatched",
        "sampled",
        "not_sampled",
        "external_funding_match",
        "manual_review",
        "dedup_suspect",
        "manually_checked",
        "manually_confirmed",
        "data_mistake",
        "unverified",
    ]
    .into_iter()
    .map(|k| (k, 0))
    .collect();
    let mut bump = |k: &'static str| *c.get_mut(k).unwrap() += 1;
    for (key, status) in statuses {
        bump("right_only");
        if *status == RightStatus::CrossrefFundingMatch {
            bump("crossref_funding_match");
            continue;
        }
        bump("right_unmatched");
        if sample.is_some_and(|s| !s.contains(key)) {
            bump("not_sampled");
            continue;
        }
        bump("sampled");
        match status {
            RightStatus::ExternalFundingMatch => bump("external_funding_match"),
            RightStatus::DedupSuspect => {
                bump("manual_review");
                bump("dedup_suspect");
            }
            other => {
                bump("manual_review");
                bump("manually_checked");
                bump(match other {
                    RightStatus::ManuallyConfirmed => "manually_confirmed",
                    RightStatus::DataMistake => "data_mistake",
                    _ => "unverified",
                });
            }
        }
    }
    c.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
