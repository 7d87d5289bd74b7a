use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::Partition;
use crate::doi::{DoiNormalizer, NormalizationMode};
use crate::exec::Exec;
use crate::funder::{date_plausible, DEFAULT_GRACE_YEARS};
use crate::ingest::{AnnotationLabel, AnnotationTable, ProjectTable};
use crate::model::{DatasetSnapshot, FundingLink, NormalizedDoi, PairKey, ProjectId};

/// Why a reported link is missing from the graph. Rules are tried in
/// declaration order; the first that applies wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LeftCause {
    LateArrival,
    ProjectNotInGraph,
    PublicationNotInGraph,
    MalformedDoi,
    ExpectedFromCrossrefStrict,
    RetrievableViaRelaxed,
    NotInCrossrefFunding,
}

impl LeftCause {
    pub const ALL: [LeftCause; 7] = [
        LeftCause::LateArrival,
        LeftCause::ProjectNotInGraph,
        LeftCause::PublicationNotInGraph,
        LeftCause::MalformedDoi,
        LeftCause::ExpectedFromCrossrefStrict,
        LeftCause::RetrievableViaRelaxed,
        LeftCause::NotInCrossrefFunding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LeftCause::LateArrival => "LATE_ARRIVAL",
            LeftCause::ProjectNotInGraph => "PROJECT_NOT_IN_GRAPH",
            LeftCause::PublicationNotInGraph => "PUBLICATION_NOT_IN_GRAPH",
            LeftCause::MalformedDoi => "MALFORMED_DOI",
            LeftCause::ExpectedFromCrossrefStrict => "EXPECTED_FROM_CROSSREF_STRICT",
            LeftCause::RetrievableViaRelaxed => "RETRIEVABLE_VIA_RELAXED",
            LeftCause::NotInCrossrefFunding => "NOT_IN_CROSSREF_FUNDING",
        }
    }
}

impl fmt::Display for LeftCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LeftCause {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LeftCause::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown left cause {s:?}"))
    }
}

/// Verification outcome for a graph-surplus link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RightStatus {
    CrossrefFundingMatch,
    ExternalFundingMatch,
    ManuallyConfirmed,
    DataMistake,
    DedupSuspect,
    Unverified,
}

impl RightStatus {
    pub const ALL: [RightStatus; 6] = [
        RightStatus::CrossrefFundingMatch,
        RightStatus::ExternalFundingMatch,
        RightStatus::ManuallyConfirmed,
        RightStatus::DataMistake,
        RightStatus::DedupSuspect,
        RightStatus::Unverified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RightStatus::CrossrefFundingMatch => "CROSSREF_FUNDING_MATCH",
            RightStatus::ExternalFundingMatch => "EXTERNAL_FUNDING_MATCH",
            RightStatus::ManuallyConfirmed => "MANUALLY_CONFIRMED",
            RightStatus::DataMistake => "DATA_MISTAKE",
            RightStatus::DedupSuspect => "DEDUP_SUSPECT",
            RightStatus::Unverified => "UNVERIFIED",
        }
    }
}

impl fmt::Display for RightStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RightStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RightStatus::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown right status {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeftVerdict {
    pub cause: LeftCause,
    pub date_implausible: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RightVerdict {
    pub status: RightStatus,
    pub evidence: String,
}

/// Auxiliary evidence that was not supplied; the matching rule is skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkippedRule {
    LateArrival,
    ProjectRegistry,
    PublicationIndex,
    CrossrefStrict,
    CrossrefRelaxed,
    DateCheck,
}

impl SkippedRule {
    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    const ALL: [SkippedRule; 6] = [
        SkippedRule::LateArrival,
        SkippedRule::ProjectRegistry,
        SkippedRule::PublicationIndex,
        SkippedRule::CrossrefStrict,
        SkippedRule::CrossrefRelaxed,
        SkippedRule::DateCheck,
    ];
}

/// Everything the left-only workflow can consult. Missing pieces are `None`.
#[derive(Debug, Clone, Copy)]
pub struct LeftEvidence<'a> {
    pub left: &'a DatasetSnapshot,
    pub newer_right: Option<&'a DatasetSnapshot>,
    pub projects: Option<&'a ProjectTable>,
    pub publication_index: Option<&'a HashSet<NormalizedDoi>>,
    pub crossref_strict: Option<&'a BTreeSet<PairKey>>,
    pub crossref_relaxed: Option<&'a BTreeSet<PairKey>>,
    pub grace_years: i32,
    /// The graph's cleaning function, used to decide MALFORMED_DOI.
    pub graph_normalizer: DoiNormalizer,
}

impl<'a> LeftEvidence<'a> {
    pub fn new(left: &'a DatasetSnapshot) -> Self {
        LeftEvidence {
            left,
            newer_right: None,
            projects: None,
            publication_index: None,
            crossref_strict: None,
            crossref_relaxed: None,
            grace_years: DEFAULT_GRACE_YEARS,
            graph_normalizer: DoiNormalizer::new(NormalizationMode::OpenaireStrict),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LeftClassification {
    pub verdicts: BTreeMap<PairKey, LeftVerdict>,
    /// Per rule, the number of keys for which the rule could not be evaluated.
    pub skipped: BTreeMap<SkippedRule, u64>,
}

impl LeftClassification {
    pub fn count(&self, cause: LeftCause) -> u64 {
        self.verdicts.values().filter(|v| v.cause == cause).count() as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RightClassification {
    pub verdicts: BTreeMap<PairKey, RightVerdict>,
    /// Annotation keys that are not right-only (stale sheet rows), ignored.
    pub stale_annotations: Vec<PairKey>,
}

impl RightClassification {
    pub fn count(&self, status: RightStatus) -> u64 {
        self.verdicts
            .values()
            .filter(|v| v.status == status)
            .count() as u64
    }
}

pub fn classify_left_only(
    partition: &Partition,
    evidence: &LeftEvidence<'_>,
) -> LeftClassification {
    classify_left_only_with(partition, evidence, Exec::default())
}

pub fn classify_left_only_with(
    partition: &Partition,
    evidence: &LeftEvidence<'_>,
    exec: Exec,
) -> LeftClassification {
    let keys: Vec<&PairKey> = partition.left_only.iter().collect();
    let results = exec.map(&keys, |k| classify_one(k, evidence));
    let mut out = LeftClassification::default();
    for (key, (verdict, skipped)) in keys.into_iter().zip(results) {
        for rule in SkippedRule::ALL {
            if skipped & rule.bit() != 0 {
                *out.skipped.entry(rule).or_default() += 1;
            }
        }
        out.verdicts.insert(key.clone(), verdict);
    }
    for (rule, n) in &out.skipped {
        log::warn!(
            "left-only classification: rule {rule:?} skipped for {n} keys (evidence not supplied)"
        );
    }
    out
}

fn classify_one(key: &PairKey, ev: &LeftEvidence<'_>) -> (LeftVerdict, u8) {
    let mut skipped = 0u8;
    let link: Option<&FundingLink> = ev.left.links.get(key);
    let project_id = ProjectId::new(key.project_part()).ok();
    let project = match (ev.projects, &project_id) {
        (Some(table), Some(id)) => table.get(id),
        _ => None,
    };

    let date_implausible = match (ev.projects, project) {
        (None, _) => {
            skipped |= SkippedRule::DateCheck.bit();
            false
        }
        (Some(_), None) => false,
        (Some(_), Some(p)) => {
            let year = link.and_then(|l| l.publication_date).map(|d| d.year());
            !date_plausible(year, p, ev.grace_years)
        }
    };

    let verdict = |cause: LeftCause, evidence: String| LeftVerdict {
        cause,
        date_implausible,
        evidence,
    };

    let cause = 'rules: {
        match ev.newer_right {
            Some(newer) if newer.contains(key) => {
                break 'rules verdict(
                    LeftCause::LateArrival,
                    format!("present in {}", newer.label),
                );
            }
            Some(_) => {}
            None => skipped |= SkippedRule::LateArrival.bit(),
        }
        match ev.projects {
            Some(_) if project.is_none() => {
                break 'rules verdict(LeftCause::ProjectNotInGraph, "project registry".into());
            }
            Some(_) => {}
            None => skipped |= SkippedRule::ProjectRegistry.bit(),
        }
        match ev.publication_index {
            Some(index) => {
                let present = NormalizedDoi::from_normalized(key.doi_part())
                    .map(|d| index.contains(&d))
                    .unwrap_or(false);
                if !present {
                    break 'rules verdict(
                        LeftCause::PublicationNotInGraph,
                        "publication index".into(),
                    );
                }
            }
            None => skipped |= SkippedRule::PublicationIndex.bit(),
        }
        let reported = link
            .and_then(|l| l.raw_doi.as_deref())
            .unwrap_or(key.doi_part());
        if ev.graph_normalizer.normalize(reported).is_err() {
            break 'rules verdict(LeftCause::MalformedDoi, reported.to_string());
        }
        match ev.crossref_strict {
            Some(set) if set.contains(key) => {
                break 'rules verdict(
                    LeftCause::ExpectedFromCrossrefStrict,
                    "crossref strict rules".into(),
                );
            }
            Some(_) => {}
            None => skipped |= SkippedRule::CrossrefStrict.bit(),
        }
        match ev.crossref_relaxed {
            Some(set) if set.contains(key) => {
                break 'rules verdict(
                    LeftCause::RetrievableViaRelaxed,
                    "crossref relaxed rules".into(),
                );
            }
            Some(_) => {}
            None => skipped |= SkippedRule::CrossrefRelaxed.bit(),
        }
        verdict(LeftCause::NotInCrossrefFunding, String::new())
    };
    (cause, skipped)
}

pub fn verify_right_only(
    partition: &Partition,
    crossref_links: Option<&BTreeSet<PairKey>>,
    annotations: &AnnotationTable,
    right: &DatasetSnapshot,
) -> RightClassification {
    verify_right_only_with(
        partition,
        crossref_links,
        annotations,
        right,
        Exec::default(),
    )
}

pub fn verify_right_only_with(
    partition: &Partition,
    crossref_links: Option<&BTreeSet<PairKey>>,
    annotations: &AnnotationTable,
    right: &DatasetSnapshot,
    exec: Exec,
) -> RightClassification {
    let keys: Vec<&PairKey> = partition.right_only.iter().collect();
    let verdicts = exec.map(&keys, |key| {
        if crossref_links.is_some_and(|set| set.contains(*key)) {
            return RightVerdict {
                status: RightStatus::CrossrefFundingMatch,
                evidence: "crossref funding".into(),
            };
        }
        let annotation = annotations.get(*key);
        let from_annotation = |status| RightVerdict {
            status,
            evidence: format!(
                "annotation:{}",
                annotation.map(|a| a.evidence_source.as_str()).unwrap_or("")
            ),
        };
        match annotation.map(|a| a.label) {
            Some(AnnotationLabel::ExternalMatch) => {
                return from_annotation(RightStatus::ExternalFundingMatch)
            }
            Some(AnnotationLabel::Confirmed) => {
                return from_annotation(RightStatus::ManuallyConfirmed)
            }
            Some(AnnotationLabel::DataMistake) => return from_annotation(RightStatus::DataMistake),
            Some(AnnotationLabel::DedupSuspect) => {
                return from_annotation(RightStatus::DedupSuspect)
            }
            _ => {}
        }
        if right.links.get(*key).is_some_and(|l| l.deduplicated) {
            return RightVerdict {
                status: RightStatus::DedupSuspect,
                evidence: "deduplicated record".into(),
            };
        }
        match annotation {
            Some(_) => from_annotation(RightStatus::Unverified),
            None => RightVerdict {
                status: RightStatus::Unverified,
                evidence: String::new(),
            },
        }
    });
    let stale_annotations: Vec<PairKey> = annotations
        .keys()
        .filter(|k| !partition.right_only.contains(*k))
        .cloned()
        .collect();
    if !stale_annotations.is_empty() {
        log::warn!(
            "{} annotation rows do not refer to right-only keys and were ignored",
            stale_annotations.len()
        );
    }
    RightClassification {
        verdicts: keys.into_iter().cloned().zip(verdicts).collect(),
        stale_annotations,
    }
}
