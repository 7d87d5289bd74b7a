//! Reconciliation and audit of `<project, publication>` funding-link datasets.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the shared domain types and the pair-key scheme.
//! * [`doi`] cleans and validates DOI strings.
//! * [`ingest`] streams the input families into snapshots and indices.
//! * [`funder`] decides whether a Crossref funder assertion denotes H2020/EC funding.
//! * [`reconcile`] diffs snapshots, classifies discrepancies and draws samples.
//! * [`funnel`] turns classification counts into conserved funnel statistics.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! disabled every path runs sequentially.

pub mod doi;
pub mod exec;
pub mod funder;
pub mod funnel;
pub mod ingest;
pub mod keyfile;
pub mod model;
pub mod reconcile;

pub use doi::{is_valid, normalize, DoiError, DoiNormalizer, NormalizationMode};
pub use exec::Exec;
pub use funder::{AwardMode, RuleLevel, RuleSet};
pub use funnel::{funnel_stats, FunnelError, FunnelStats, Share};
pub use model::{
    make_pair_key, split_pair_key, DatasetSnapshot, FundingLink, ModelError, NormalizedDoi,
    PairKey, ProjectId, ProjectRef, Source,
};
pub use reconcile::{Partition, ReconcileError};
