//! Shared domain types and the pair-key scheme.
//!
//! A funding link is the pair `<project, publication>`; two datasets become
//! comparable once every link is reduced to its [`PairKey`], the text
//! `<project_id>::<doi>`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doi::{self, NormalizationMode};

/// Separator between the project id and the DOI inside a [`PairKey`].
pub const PAIR_KEY_SEPARATOR: &str = "::";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid project id {0:?}: expected a non-empty string of decimal digits")]
    InvalidProjectId(String),
    #[error("malformed pair key {0:?}: missing '::' separator")]
    MissingSeparator(String),
    #[error("malformed pair key {0:?}: empty DOI part")]
    EmptyDoi(String),
    #[error("not a normalized DOI: {0:?}")]
    NotNormalized(String),
    #[error("project {grant}: end date {end} is before start date {start}")]
    EndBeforeStart {
        grant: String,
        start: NaiveDate,
        end: NaiveDate,
    },
}

/// A DOI that went through [`doi::normalize`]: trimmed, lowercase, no
/// resolver prefix, matching the validation pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NormalizedDoi(String);

impl NormalizedDoi {
    pub(crate) fn new_unchecked(value: String) -> Self {
        NormalizedDoi(value)
    }

    /// Accepts text that is already in normalized form (as read back from
    /// our own output files). Uses the permissive pattern, which accepts
    /// everything either pattern variant can produce.
    pub fn from_normalized(value: &str) -> Result<Self, ModelError> {
        let lowered = value.to_lowercase();
        if lowered != value || value.trim() != value || !doi::is_valid_permissive(value) {
            return Err(ModelError::NotNormalized(value.to_string()));
        }
        Ok(NormalizedDoi(value.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NormalizedDoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for NormalizedDoi {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        NormalizedDoi::from_normalized(&value)
    }
}

impl From<NormalizedDoi> for String {
    fn from(d: NormalizedDoi) -> String {
        d.0
    }
}

/// A grant number: non-empty, decimal digits only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ProjectId(String);

impl ProjectId {
    pub fn new(value: &str) -> Result<Self, ModelError> {
        if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ModelError::InvalidProjectId(value.to_string()));
        }
        Ok(ProjectId(value.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ProjectId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProjectId::new(s)
    }
}

impl TryFrom<String> for ProjectId {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        ProjectId::new(&value)
    }
}

impl From<ProjectId> for String {
    fn from(p: ProjectId) -> String {
        p.0
    }
}

/// One entry of the project registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRef {
    pub grant_number: ProjectId,
    pub acronym: Option<String>,
    pub start_date: NaiveDate,
    pub end_date: Option<NaiveDate>,
}

impl ProjectRef {
    pub fn new(
        grant_number: ProjectId,
        acronym: Option<String>,
        start_date: NaiveDate,
        end_date: Option<NaiveDate>,
    ) -> Result<Self, ModelError> {
        if let Some(end) = end_date {
            if end < start_date {
                return Err(ModelError::EndBeforeStart {
                    grant: grant_number.0,
                    start: start_date,
                    end,
                });
            }
        }
        Ok(ProjectRef {
            grant_number,
            acronym,
            start_date,
            end_date,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Sygma,
    Openaire,
    Crossref,
    Annotation,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Sygma => "SYGMA",
            Source::Openaire => "OPENAIRE",
            Source::Crossref => "CROSSREF",
            Source::Annotation => "ANNOTATION",
        })
    }
}

/// One asserted `<project, publication>` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundingLink {
    pub project_id: ProjectId,
    pub doi: NormalizedDoi,
    pub source: Source,
    pub provenance: String,
    #[serde(default)]
    pub deduplicated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_date: Option<NaiveDate>,
    /// The DOI text as reported, kept only when it differs from `doi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_doi: Option<String>,
}

impl FundingLink {
    pub fn new(project_id: ProjectId, doi: NormalizedDoi, source: Source) -> Self {
        FundingLink {
            project_id,
            doi,
            source,
            provenance: String::new(),
            deduplicated: false,
            publication_date: None,
            report_date: None,
            raw_doi: None,
        }
    }

    pub fn pair_key(&self) -> PairKey {
        make_pair_key(&self.project_id, &self.doi)
    }

    /// Ordering used to pick the surviving record when two links share a key:
    /// earliest report date first, undated reports last.
    fn precedence(&self) -> impl Ord + '_ {
        (
            self.report_date.is_none(),
            self.report_date,
            self.publication_date.is_none(),
            self.publication_date,
            self.raw_doi.as_deref(),
            self.source,
        )
    }

    /// Merge two links with the same pair key. Commutative and associative:
    /// the earliest report wins, provenance becomes the sorted union of both
    /// and the dedup flag is sticky.
    pub fn merge(self, other: FundingLink) -> FundingLink {
        debug_assert_eq!(self.pair_key(), other.pair_key());
        let provenance = merge_provenance(&self.provenance, &other.provenance);
        let deduplicated = self.deduplicated || other.deduplicated;
        let mut winner = if other.precedence() < self.precedence() {
            other
        } else {
            self
        };
        winner.provenance = provenance;
        winner.deduplicated = deduplicated;
        winner
    }
}

fn merge_provenance(a: &str, b: &str) -> String {
    let mut parts: Vec<&str> = a
        .split('|')
        .chain(b.split('|'))
        .filter(|p| !p.is_empty())
        .collect();
    parts.sort_unstable();
    parts.dedup();
    parts.join("|")
}

/// Canonical comparison key `<project_id>::<doi>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PairKey(String);

impl PairKey {
    /// Parses the text form. Checks the separator and the project id; the DOI
    /// part only has to be non-empty.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        split_pair_key(text)?;
        Ok(PairKey(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn project_part(&self) -> &str {
        self.parts().0
    }

    pub fn doi_part(&self) -> &str {
        self.parts().1
    }

    fn parts(&self) -> (&str, &str) {
        self.0
            .split_once(PAIR_KEY_SEPARATOR)
            .expect("PairKey is constructed with a separator")
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for PairKey {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PairKey::parse(s)
    }
}

impl TryFrom<String> for PairKey {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        split_pair_key(&value)?;
        Ok(PairKey(value))
    }
}

impl From<PairKey> for String {
    fn from(k: PairKey) -> String {
        k.0
    }
}

pub fn make_pair_key(project_id: &ProjectId, doi: &NormalizedDoi) -> PairKey {
    PairKey(format!("{}{}{}", project_id.0, PAIR_KEY_SEPARATOR, doi.0))
}

/// Validating variant of [`make_pair_key`] for raw text inputs.
pub fn make_pair_key_str(project_id: &str, doi: &NormalizedDoi) -> Result<PairKey, ModelError> {
    Ok(make_pair_key(&ProjectId::new(project_id)?, doi))
}

/// Splits at the first `::`. Project ids never contain `:`, DOIs may.
pub fn split_pair_key(text: &str) -> Result<(ProjectId, String), ModelError> {
    let (project, doi) = text
        .split_once(PAIR_KEY_SEPARATOR)
        .ok_or_else(|| ModelError::MissingSeparator(text.to_string()))?;
    let project = ProjectId::new(project)?;
    if doi.is_empty() {
        return Err(ModelError::EmptyDoi(text.to_string()));
    }
    Ok((project, doi.to_string()))
}

/// Machine-readable reason attached to a rejected input record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    MalformedDoi,
    InvalidProjectId,
    WrongColumnCount,
    ParseError,
    InvalidDate,
    EndBeforeStart,
    UnknownLabel,
    InvalidPairKey,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).expect("enum serializes");
        f.write_str(text.as_str().unwrap_or_default())
    }
}

/// A record that could not be turned into a domain value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub reason: RejectReason,
    pub raw: String,
}

impl Reject {
    pub fn new(reason: RejectReason, raw: impl Into<String>) -> Self {
        Reject {
            reason,
            raw: raw.into(),
        }
    }
}

/// One side of a comparison: a labelled, dated set of links keyed by pair key.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSnapshot {
    pub label: String,
    pub snapshot_date: NaiveDate,
    pub mode: NormalizationMode,
    pub links: BTreeMap<PairKey, FundingLink>,
    pub rejects: Vec<Reject>,
}

impl DatasetSnapshot {
    pub fn new(
        label: impl Into<String>,
        snapshot_date: NaiveDate,
        mode: NormalizationMode,
    ) -> Self {
        DatasetSnapshot {
            label: label.into(),
            snapshot_date,
            mode,
            links: BTreeMap::new(),
            rejects: Vec::new(),
        }
    }

    /// Inserts a link, merging with an existing entry for the same pair.
    pub fn insert(&mut self, link: FundingLink) {
        let key = link.pair_key();
        match self.links.remove(&key) {
            Some(existing) => {
                self.links.insert(key, existing.merge(link));
            }
            None => {
                self.links.insert(key, link);
            }
        }
    }

    pub fn contains(&self, key: &PairKey) -> bool {
        self.links.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &PairKey> {
        self.links.keys()
    }
}
