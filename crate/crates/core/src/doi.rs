//! DOI cleaning and validation.
//!
//! Two cleaning modes exist. `OpenaireStrict` mirrors the graph's historical
//! rule (trim, then validate). `Aggressive` additionally strips resolver
//! prefixes, one layer of surrounding quotes and any embedded whitespace.
//! Both modes lowercase, since pair-key equality needs a canonical case.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NormalizedDoi;

/// Validation pattern, anchored on both ends.
pub const DOI_PATTERN: &str = r#"^10\.[0-9]{4,}[^\s"/<>]*[^\s"<>]+$"#;

/// Variant with the optional dot after the `10` prefix.
pub const DOI_PATTERN_PERMISSIVE: &str = r#"^10[.]?[0-9]{4,}[^\s"/<>]*[^\s"<>]+$"#;

static STRICT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(DOI_PATTERN).unwrap());
static PERMISSIVE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(DOI_PATTERN_PERMISSIVE).unwrap());

/// Resolver prefixes removed by aggressive cleaning, matched case-insensitively.
pub const RESOLVER_PREFIXES: [&str; 5] = [
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "https://doi.org/",
    "http://doi.org/",
    "doi:",
];

const QUOTE_PAIRS: [(char, char); 5] = [
    ('"', '"'),
    ('\'', '\''),
    ('<', '>'),
    ('\u{201c}', '\u{201d}'),
    ('\u{2018}', '\u{2019}'),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NormalizationMode {
    #[default]
    OpenaireStrict,
    Aggressive,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::OpenaireStrict => "OPENAIRE_STRICT",
            NormalizationMode::Aggressive => "AGGRESSIVE",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" | "openaire_strict" => Ok(NormalizationMode::OpenaireStrict),
            "aggressive" => Ok(NormalizationMode::Aggressive),
            other => Err(format!("unknown normalization mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DoiError {
    #[error("MALFORMED_DOI: {raw:?}")]
    Malformed { raw: String },
}

impl DoiError {
    pub fn raw(&self) -> &str {
        match self {
            DoiError::Malformed { raw } => raw,
        }
    }
}

/// `true` iff `candidate` matches [`DOI_PATTERN`] in full.
pub fn is_valid(candidate: &str) -> bool {
    STRICT_RE.is_match(candidate)
}

/// `true` iff `candidate` matches [`DOI_PATTERN_PERMISSIVE`] in full.
pub fn is_valid_permissive(candidate: &str) -> bool {
    PERMISSIVE_RE.is_match(candidate)
}

/// Normalizes with the default (dot-required) pattern.
pub fn normalize(raw: &str, mode: NormalizationMode) -> Result<NormalizedDoi, DoiError> {
    DoiNormalizer::new(mode).normalize(raw)
}

/// A configured cleaning function: mode plus pattern variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DoiNormalizer {
    pub mode: NormalizationMode,
    pub permissive_dot: bool,
}

impl DoiNormalizer {
    pub fn new(mode: NormalizationMode) -> Self {
        DoiNormalizer {
            mode,
            permissive_dot: false,
        }
    }

    pub fn with_permissive_dot(mut self, on: bool) -> Self {
        self.permissive_dot = on;
        self
    }

    pub fn pattern(&self) -> &'static str {
        if self.permissive_dot {
            DOI_PATTERN_PERMISSIVE
        } else {
            DOI_PATTERN
        }
    }

    pub fn is_valid(&self, candidate: &str) -> bool {
        if self.permissive_dot {
            is_valid_permissive(candidate)
        } else {
            is_valid(candidate)
        }
    }

    pub fn normalize(&self, raw: &str) -> Result<NormalizedDoi, DoiError> {
        let cleaned = match self.mode {
            NormalizationMode::OpenaireStrict => raw.trim().to_lowercase(),
            NormalizationMode::Aggressive => aggressive_clean(raw).to_lowercase(),
        };
        if cleaned.is_empty() || !self.is_valid(&cleaned) {
            return Err(DoiError::Malformed {
                raw: raw.to_string(),
            });
        }
        Ok(NormalizedDoi::new_unchecked(cleaned))
    }
}

fn aggressive_clean(raw: &str) -> String {
    let mut s = raw.trim();
    s = strip_quote_layer(s).trim();
    s = strip_resolver_prefix(s);
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn strip_quote_layer(s: &str) -> &str {
    for (open, close) in QUOTE_PAIRS {
        if let Some(inner) = s.strip_prefix(open).and_then(|r| r.strip_suffix(close)) {
            return inner;
        }
    }
    s
}

fn strip_resolver_prefix(s: &str) -> &str {
    for prefix in RESOLVER_PREFIXES {
        if let Some(head) = s.get(..prefix.len()) {
            if head.eq_ignore_ascii_case(prefix) {
                return s[prefix.len()..].trim_start();
            }
        }
    }
    s
}
