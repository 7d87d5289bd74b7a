//! Funder matching rules and `<grant number, doi>` extraction from Crossref works.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::{CrossrefWork, FunderAssertion};
use crate::model::{FundingLink, ProjectId, ProjectRef, Source};

/// Funder registry DOIs accepted by the strict rules.
pub const STRICT_FUNDER_DOIS: [&str; 6] = [
    "10.13039/100010663",
    "10.13039/100010661",
    "10.13039/501100007601",
    "10.13039/100010665",
    "10.13039/501100000780",
    "10.13039/501100000781",
];

/// Funder names accepted by the strict rules (containment, see [`name_matches_strict`]).
pub const STRICT_NAMES: [&str; 2] = [
    "European Union’s Horizon 2020 research and innovation program",
    "European Union's",
];

/// Substrings accepted by the relaxed rules.
pub const RELAXED_KEYWORDS: [&str; 12] = [
    "ERC",
    "ERA",
    "ICT",
    "CSIC",
    "Curie",
    "FET",
    "European",
    "EU",
    "EC",
    "H2020",
    "Horizon 2020",
    "Horizon2020",
];

pub const DEFAULT_GRACE_YEARS: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleLevel {
    #[default]
    Strict,
    Relaxed,
}

impl fmt::Display for RuleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleLevel::Strict => "STRICT",
            RuleLevel::Relaxed => "RELAXED",
        })
    }
}

impl FromStr for RuleLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(RuleLevel::Strict),
            "relaxed" => Ok(RuleLevel::Relaxed),
            other => Err(format!("unknown rule level {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AwardMode {
    #[default]
    Exact,
    NumericToken,
}

impl fmt::Display for AwardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AwardMode::Exact => "EXACT",
            AwardMode::NumericToken => "NUMERIC_TOKEN",
        })
    }
}

impl FromStr for AwardMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Ok(AwardMode::Exact),
            "numeric_token" => Ok(AwardMode::NumericToken),
            other => Err(format!("unknown award mode {other:?}")),
        }
    }
}

/// The rule constants are fixed; only the level and keyword case handling vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleSet {
    pub level: RuleLevel,
    pub keyword_case_sensitive: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::strict()
    }
}

impl RuleSet {
    pub fn strict() -> Self {
        RuleSet {
            level: RuleLevel::Strict,
            keyword_case_sensitive: true,
        }
    }

    pub fn relaxed() -> Self {
        RuleSet {
            level: RuleLevel::Relaxed,
            keyword_case_sensitive: true,
        }
    }

    pub fn with_keyword_case_sensitive(mut self, on: bool) -> Self {
        self.keyword_case_sensitive = on;
        self
    }

    pub fn strict_funder_dois(&self) -> &'static [&'static str] {
        &STRICT_FUNDER_DOIS
    }

    pub fn strict_names(&self) -> &'static [&'static str] {
        &STRICT_NAMES
    }

    pub fn relaxed_keywords(&self) -> &'static [&'static str] {
        &RELAXED_KEYWORDS
    }
}

/// Lowercase, fold apostrophe variants to `'` and spell "programme" as "program".
fn fold_name(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' | '\u{02bc}' | '`' | '\u{b4}' => '\'',
            c => c,
        })
        .collect::<String>()
        .to_lowercase()
        .replace("programme", "program")
}

fn normalize_funder_doi(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase();
    for prefix in crate::doi::RESOLVER_PREFIXES {
        if let Some(rest) = lowered.strip_prefix(prefix) {
            return rest.trim().to_string();
        }
    }
    lowered
}

pub fn funder_doi_matches_strict(funder_doi: &str) -> bool {
    let d = normalize_funder_doi(funder_doi);
    STRICT_FUNDER_DOIS.contains(&d.as_str())
}

pub fn name_matches_strict(name: &str) -> bool {
    let folded = fold_name(name);
    STRICT_NAMES.iter().any(|n| folded.contains(&fold_name(n)))
}

pub fn name_matches_relaxed(name: &str, case_sensitive: bool) -> bool {
    if case_sensitive {
        RELAXED_KEYWORDS.iter().any(|k| name.contains(k))
    } else {
        let lowered = name.to_lowercase();
        RELAXED_KEYWORDS
            .iter()
            .any(|k| lowered.contains(&k.to_lowercase()))
    }
}

/// Which rule fired for an assertion, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunderMatch {
    StrictDoi,
    StrictName,
    RelaxedKeyword,
}

impl FunderMatch {
    fn tag(self) -> &'static str {
        match self {
            FunderMatch::StrictDoi => "strict-doi",
            FunderMatch::StrictName => "strict-name",
            FunderMatch::RelaxedKeyword => "relaxed-keyword",
        }
    }
}

pub fn classify_funder(assertion: &FunderAssertion, rules: &RuleSet) -> Option<FunderMatch> {
    if assertion
        .funder_doi
        .as_deref()
        .is_some_and(funder_doi_matches_strict)
    {
        return Some(FunderMatch::StrictDoi);
    }
    let name = assertion.name.as_deref()?;
    if name_matches_strict(name) {
        return Some(FunderMatch::StrictName);
    }
    if rules.level == RuleLevel::Relaxed && name_matches_relaxed(name, rules.keyword_case_sensitive)
    {
        return Some(FunderMatch::RelaxedKeyword);
    }
    None
}

pub fn matches_h2020_funder(assertion: &FunderAssertion, rules: &RuleSet) -> bool {
    classify_funder(assertion, rules).is_some()
}

pub fn award_to_grant_numbers(award: &str, mode: AwardMode) -> Vec<ProjectId> {
    match mode {
        AwardMode::Exact => ProjectId::new(award.trim()).into_iter().collect(),
        AwardMode::NumericToken => {
            let mut out = Vec::new();
            let bytes = award.as_bytes();
            let mut i = 0;
            while i < bytes.len() {
                if bytes[i].is_ascii_digit() {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if (5..=9).contains(&(i - start)) {
                        out.push(ProjectId::new(&award[start..i]).expect("digit run"));
                    }
                } else {
                    i += 1;
                }
            }
            out
        }
    }
}

/// One link per `<grant number, doi>` from every matching assertion; a grant
/// asserted twice yields one link with both provenances.
pub fn extract_links(work: &CrossrefWork, rules: &RuleSet, mode: AwardMode) -> Vec<FundingLink> {
    let mut by_grant: BTreeMap<ProjectId, FundingLink> = BTreeMap::new();
    for assertion in &work.funders {
        let Some(hit) = classify_funder(assertion, rules) else {
            continue;
        };
        let funder = assertion
            .funder_doi
            .as_deref()
            .map(normalize_funder_doi)
            .or_else(|| assertion.name.clone())
            .unwrap_or_default();
        let provenance = format!("crossref:{}:{}:{}", rules.level, hit.tag(), funder);
        for award in &assertion.awards {
            for grant in award_to_grant_numbers(award, mode) {
                let mut link = FundingLink::new(grant.clone(), work.doi.clone(), Source::Crossref);
                link.provenance = provenance.clone();
                match by_grant.remove(&grant) {
                    Some(prev) => by_grant.insert(grant, prev.merge(link)),
                    None => by_grant.insert(grant, link),
                };
            }
        }
    }
    by_grant.into_values().collect()
}

/// `false` only when the publication year is known and predates the project
/// start year by more than `grace_years`.
pub fn date_plausible(
    publication_year: Option<i32>,
    project: &ProjectRef,
    grace_years: i32,
) -> bool {
    use chrono::Datelike;
    match publication_year {
        None => true,
        Some(year) => year >= project.start_date.year() - grace_years,
    }
}
