//! Report rendering. Output depends only on the inputs, so identical runs
//! give identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use fundlink_core::doi::{DOI_PATTERN, DOI_PATTERN_PERMISSIVE};
use fundlink_core::funder::{RELAXED_KEYWORDS, STRICT_FUNDER_DOIS, STRICT_NAMES};
use fundlink_core::funnel::NOT_IN_CROSSREF_SHARE;
use fundlink_core::reconcile::SAMPLE_PRNG;
use fundlink_core::{FunnelStats, Share};
use serde_json::json;

use crate::config::AuditConfig;

pub const REPORT_FORMAT: &str = "fundlink-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Human,
    Machine,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "human" | "md" | "markdown" => Ok(ReportFormat::Human),
            "machine" | "json" => Ok(ReportFormat::Machine),
            other => Err(format!(
                "unknown report format {other:?} (expected machine or human)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportInput<'a> {
    pub left_label: &'a str,
    pub right_label: &'a str,
    pub stats: &'a FunnelStats,
    pub config: &'a AuditConfig,
}

pub fn render_report(input: &ReportInput<'_>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => render_machine(input),
        ReportFormat::Human => render_human(input),
    }
}

fn rules_json(config: &AuditConfig) -> serde_json::Value {
    json!({
        "doi_pattern": DOI_PATTERN,
        "doi_pattern_in_use": if config.permissive_dot { DOI_PATTERN_PERMISSIVE } else { DOI_PATTERN },
        "normalization_mode": config.normalization_mode.to_string(),
        "strict_funder_dois": STRICT_FUNDER_DOIS,
        "strict_names": STRICT_NAMES,
        "relaxed_keywords": RELAXED_KEYWORDS,
        "keyword_case_sensitive": config.keyword_case_sensitive,
        "rule_level": config.rule_level.to_string(),
        "award_mode": config.award_mode.to_string(),
        "grace_years": config.grace_years,
    })
}

pub fn rules_document(config: &AuditConfig) -> String {
    let mut s = serde_json::to_string_pretty(&rules_json(config)).unwrap();
    s.push('\n');
    s
}

fn share_json(s: &Share) -> serde_json::Value {
    json!({
        "numerator": s.numerator,
        "denominator": s.denominator,
        "fraction": s.fraction(),
        "percent": s.percent(),
    })
}

/// Counts, shares and checks without rules or config.
pub fn stats_document(stats: &FunnelStats) -> String {
    let shares: serde_json::Map<String, serde_json::Value> = stats
        .shares
        .iter()
        .map(|(k, v)| (k.clone(), share_json(v)))
        .collect();
    let doc = json!({
        "counts": stats.counts,
        "shares": shares,
        "checks": stats.checks,
        "unchecked": stats.unchecked,
    });
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

fn render_machine(input: &ReportInput<'_>) -> String {
    let stats = input.stats;
    let shares: serde_json::Map<String, serde_json::Value> = stats
        .shares
        .iter()
        .map(|(k, v)| (k.clone(), share_json(v)))
        .collect();
    let doc = json!({
        "format": REPORT_FORMAT,
        "datasets": { "left": input.left_label, "right": input.right_label },
        "counts": stats.counts,
        "shares": shares,
        "checks": stats.checks,
        "unchecked": stats.unchecked,
        "rules": rules_json(input.config),
        "sampling": {
            "prng": SAMPLE_PRNG,
            "seed": input.config.sample_seed,
            "n": input.config.sample_n,
        },
        "config": input.config,
    });
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

/// `(count name, label, parent stage)`.
type Row = (&'static str, &'static str, Option<&'static str>);

const OVERVIEW_ROWS: [Row; 3] = [
    ("matched", "Matched (in both)", Some("left_total")),
    ("left_only", "Only in left", Some("left_total")),
    ("right_only", "Only in right", Some("right_total")),
];

const LEFT_ROWS: [Row; 10] = [
    ("left_only", "Only in left", None),
    (
        "late_arrival",
        "Present in a newer right snapshot (late arrival)",
        Some("left_only"),
    ),
    ("left_remaining", "Remaining", Some("left_only")),
    (
        "project_not_in_graph",
        "Project not in graph",
        Some("left_remaining"),
    ),
    (
        "publication_not_in_graph",
        "Publication not in graph",
        Some("left_remaining"),
    ),
    (
        "malformed_doi",
        "DOI fails the graph's cleaning rule",
        Some("left_remaining"),
    ),
    (
        "expected_from_crossref_strict",
        "In Crossref under strict rules (should have been mapped)",
        Some("left_remaining"),
    ),
    (
        "retrievable_via_relaxed",
        "Retrievable from Crossref with relaxed rules",
        Some("left_remaining"),
    ),
    (
        "not_in_crossref_funding",
        "Not in Crossref funding data",
        Some("left_remaining"),
    ),
    (
        "date_implausible",
        "Flag: publication date implausible for the project",
        Some("left_only"),
    ),
];

const RIGHT_ROWS: [Row; 12] = [
    ("right_only", "Only in right", None),
    (
        "crossref_funding_match",
        "Matched to Crossref funding data",
        Some("right_only"),
    ),
    (
        "right_unmatched",
        "Not matched to Crossref",
        Some("right_only"),
    ),
    ("sampled", "Sampled", Some("right_unmatched")),
    ("not_sampled", "Not sampled", Some("right_unmatched")),
    (
        "external_funding_match",
        "Matched to external funding data",
        Some("sampled"),
    ),
    ("manual_review", "Manual review", Some("sampled")),
    (
        "dedup_suspect",
        "Linked to a de-duplicated record",
        Some("manual_review"),
    ),
    (
        "manually_checked",
        "Manually checked",
        Some("manual_review"),
    ),
    ("manually_confirmed", "Confirmed", Some("manually_checked")),
    ("data_mistake", "Data mistake", Some("manually_checked")),
    (
        "unverified",
        "Could not be verified",
        Some("manually_checked"),
    ),
];

fn table(out: &mut String, stats: &FunnelStats, rows: &[Row], header_share: &str) {
    let _ = writeln!(out, "| Stage | Links | {header_share} |");
    out.push_str("|---|---:|---:|\n");
    for (name, label, parent) in rows {
        let count = stats
            .count(name)
            .map(|c| c.to_string())
            .unwrap_or_else(|| "not supplied".into());
        let share = match (parent, stats.count(name)) {
            (Some(p), Some(_)) => match stats.share(&format!("{name}/{p}")) {
                Some(s) => format!("{} of {}", s.percent(), p.replace('_', " ")),
                None => String::new(),
            },
            _ => String::new(),
        };
        let _ = writeln!(out, "| {label} | {count} | {share} |");
    }
}

fn render_human(input: &ReportInput<'_>) -> String {
    let stats = input.stats;
    let config = input.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Funding-link audit: {} vs {}\n",
        input.left_label, input.right_label
    );
    let _ = writeln!(
        out,
        "Left dataset: `{}`. Right dataset: `{}`.\n",
        input.left_label, input.right_label
    );

    out.push_str("## Comparison overview\n\n");
    let _ = writeln!(out, "| Set | Links | Share |");
    out.push_str("|---|---:|---:|\n");
    for (name, label) in [("left_total", "In left"), ("right_total", "In right")] {
        let count = stats
            .count(name)
            .map(|c| c.to_string())
            .unwrap_or_else(|| "not supplied".into());
        let _ = writeln!(out, "| {label} | {count} | |");
    }
    for (name, label, parent) in OVERVIEW_ROWS {
        let parent = parent.unwrap();
        let count = stats
            .count(name)
            .map(|c| c.to_string())
            .unwrap_or_else(|| "not supplied".into());
        let share = stats
            .share(&format!("{name}/{parent}"))
            .map(|s| format!("{} of {}", s.percent(), parent.replace('_', " ")))
            .unwrap_or_default();
        let _ = writeln!(out, "| {label} | {count} | {share} |");
    }

    out.push_str("\n## Links only in left\n\n");
    table(&mut out, stats, &LEFT_ROWS, "Share");
    if let Some(s) = stats.share(NOT_IN_CROSSREF_SHARE) {
        let _ = writeln!(
            out,
            "\nNot recoverable from Crossref funding data under either rule level: {} of {} remaining links ({}).",
            s.numerator,
            s.denominator,
            s.percent()
        );
    }

    out.push_str("\n## Links only in right\n\n");
    table(&mut out, stats, &RIGHT_ROWS, "Share");

    out.push_str("\n## Conservation checks\n\n");
    if stats.checks.is_empty() && stats.unchecked.is_empty() {
        out.push_str("No stages to check.\n");
    }
    for c in &stats.checks {
        let relation = if c.complete { "=" } else { ">=" };
        let _ = writeln!(
            out,
            "- {}: {} {relation} {} (children), ok",
            c.stage, c.total, c.children_sum
        );
    }
    for u in &stats.unchecked {
        let _ = writeln!(out, "- {u}: total not supplied, not checked");
    }

    out.push_str("\n## Rules\n\n");
    let _ = writeln!(
        out,
        "- DOI pattern: `{}`",
        if config.permissive_dot {
            DOI_PATTERN_PERMISSIVE
        } else {
            DOI_PATTERN
        }
    );
    let _ = writeln!(out, "- Normalization mode: {}", config.normalization_mode);
    let _ = writeln!(
        out,
        "- Strict funder DOIs: {}",
        STRICT_FUNDER_DOIS.join(", ")
    );
    let _ = writeln!(out, "- Strict funder names: {}", STRICT_NAMES.join("; "));
    let _ = writeln!(
        out,
        "- Relaxed keywords (case-sensitive: {}): {}",
        config.keyword_case_sensitive,
        RELAXED_KEYWORDS.join("; ")
    );
    let _ = writeln!(
        out,
        "- Rule level: {}; award mode: {}",
        config.rule_level, config.award_mode
    );
    let _ = writeln!(
        out,
        "- Date plausibility grace: {} years",
        config.grace_years
    );
    let _ = writeln!(
        out,
        "- Sampling: {SAMPLE_PRNG}; seed {}; n {}",
        config.sample_seed, config.sample_n
    );

    out.push_str("\n## Configuration\n\n```toml\n");
    out.push_str(&config.to_toml());
    out.push_str("```\n");
    out
}
