use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fundlink_core::funder::DEFAULT_GRACE_YEARS;
use fundlink_core::{AwardMode, DoiNormalizer, NormalizationMode, RuleLevel, RuleSet};
use fundlink_crossref::{RetryPolicy, DEFAULT_BASE_URL, DEFAULT_MAX_IN_FLIGHT};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLE_N: usize = 1000;
pub const DEFAULT_SAMPLE_SEED: u64 = 2021;

/// Effective settings of one invocation. Defaults, then the `--config`
/// file, then command-line flags. Reports embed it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub normalization_mode: NormalizationMode,
    pub permissive_dot: bool,
    pub rule_level: RuleLevel,
    pub award_mode: AwardMode,
    pub keyword_case_sensitive: bool,
    pub grace_years: i32,
    pub sample_n: usize,
    pub sample_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_reject_rate: Option<f64>,
    pub max_in_flight: usize,
    pub crossref_base_url: String,
    pub retry: RetryPolicy,
    pub output_dir: String,
    /// Input paths as given, keyed by role.
    pub inputs: BTreeMap<String, String>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            normalization_mode: NormalizationMode::default(),
            permissive_dot: false,
            rule_level: RuleLevel::Strict,
            award_mode: AwardMode::Exact,
            keyword_case_sensitive: true,
            grace_years: DEFAULT_GRACE_YEARS,
            sample_n: DEFAULT_SAMPLE_N,
            sample_seed: DEFAULT_SAMPLE_SEED,
            max_reject_rate: None,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            crossref_base_url: DEFAULT_BASE_URL.to_string(),
            retry: RetryPolicy::default(),
            output_dir: ".".to_string(),
            inputs: BTreeMap::new(),
        }
    }
}

impl AuditConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: AuditConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.retry.validate()?;
        if self.max_in_flight == 0 {
            anyhow::bail!("max_in_flight must be at least 1");
        }
        if let Some(r) = self.max_reject_rate {
            if !(0.0..=1.0).contains(&r) {
                anyhow::bail!("max_reject_rate must lie in [0, 1], got {r}");
            }
        }
        Ok(())
    }

    pub fn normalizer(&self) -> DoiNormalizer {
        DoiNormalizer::new(self.normalization_mode).with_permissive_dot(self.permissive_dot)
    }

    /// The graph's own cleaning function, which decides MALFORMED_DOI.
    pub fn graph_normalizer(&self) -> DoiNormalizer {
        DoiNormalizer::new(NormalizationMode::OpenaireStrict)
            .with_permissive_dot(self.permissive_dot)
    }

    pub fn rules(&self) -> RuleSet {
        RuleSet {
            level: self.rule_level,
            keyword_case_sensitive: self.keyword_case_sensitive,
        }
    }

    pub fn out_root(&self) -> PathBuf {
        PathBuf::from(&self.output_dir)
    }

    pub fn record_input(&mut self, role: &str, path: &Path) {
        self.inputs
            .insert(role.to_string(), path.display().to_string());
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = AuditConfig {
            max_reject_rate: Some(0.05),
            rule_level: RuleLevel::Relaxed,
            ..AuditConfig::default()
        };
        c.inputs
            .insert("left".into(), "snapshots/sygma.snap".into());
        let text = c.to_toml();
        let back: AuditConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(text.contains("rule_level = \"RELAXED\""));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: AuditConfig =
            toml::from_str("sample_seed = 7\n[retry]\nmax_attempts = 3\n").unwrap();
        assert_eq!(c.sample_seed, 7);
        assert_eq!(c.retry.max_attempts, 3);
        assert_eq!(c.retry.factor, 2.0);
        assert_eq!(c.sample_n, DEFAULT_SAMPLE_N);
        assert!(toml::from_str::<AuditConfig>("no_such_key = 1").is_err());
    }
}
