use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use fundlink_core::{AwardMode, NormalizationMode, RuleLevel};
use fundlink_crossref::YearMonth;

use crate::report::ReportFormat;

#[derive(Debug, Parser)]
#[command(
    name = "fundlink-audit",
    version,
    about = "Reconcile and audit <project, publication> funding-link datasets"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults for any setting below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of the output layout (snapshots/, partition/, classifications/, reports/, rejects/, queue/).
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    /// DOI cleaning: strict (trim, lowercase) or aggressive (also strip resolver prefixes, quotes, whitespace).
    #[arg(long, global = true)]
    pub mode: Option<NormalizationMode>,
    /// Funder rule level: strict or relaxed.
    #[arg(long, global = true)]
    pub rules: Option<RuleLevel>,
    /// Award parsing: exact or numeric-token.
    #[arg(long, global = true)]
    pub award_mode: Option<AwardMode>,
    #[arg(long, global = true)]
    pub grace_years: Option<i32>,
    /// Accept DOIs whose "10" prefix is not followed by a dot.
    #[arg(long, global = true)]
    pub permissive_dot: bool,
    #[arg(long, global = true)]
    pub keywords_case_insensitive: bool,
    /// Abort ingestion when the share of rejected rows exceeds this value.
    #[arg(long, global = true)]
    pub max_reject_rate: Option<f64>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an input file and write its cleaned form plus a reject file.
    Ingest {
        #[command(subcommand)]
        source: IngestCommand,
    },
    /// Partition two snapshots into matched, left-only and right-only keys.
    Diff(DiffArgs),
    /// Assign a cause to every left-only key.
    ClassifyLeft(ClassifyLeftArgs),
    /// Assign a verification status to every right-only key.
    VerifyRight(VerifyRightArgs),
    /// Draw a reproducible sample of keys.
    Sample(SampleArgs),
    /// Compute funnel counts, shares and conservation checks.
    Stats(StatsArgs),
    /// Render the audit report.
    Report(ReportArgs),
    /// Query the Crossref API.
    Crossref(CrossrefArgs),
    /// Print the rule constants.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Reported-publications CSV into a snapshot.
    Sygma(SnapshotIngestArgs),
    /// Graph relations (line-delimited JSON) into a snapshot.
    Openaire(SnapshotIngestArgs),
    /// Crossref dump (file or directory; gzip, items documents or NDJSON) into key indices.
    CrossrefDump(DumpArgs),
    /// Project registry CSV.
    Projects(TableArgs),
    /// Manual annotation CSV.
    Annotations(TableArgs),
}

#[derive(Debug, Args)]
pub struct SnapshotIngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub label: String,
    /// Snapshot date, YYYY-MM-DD.
    #[arg(long)]
    pub date: NaiveDate,
    /// Snapshot file (default: <workdir>/snapshots/<label>.snap).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reject file (default: <out>.rejects, or <workdir>/rejects/<label>.rejects).
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Index directory (default: <workdir>/snapshots/crossref).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// Partition directory (default: <workdir>/partition).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyLeftArgs {
    #[arg(long)]
    pub partition: PathBuf,
    /// The left snapshot the partition was built from.
    #[arg(long)]
    pub left: PathBuf,
    /// A later snapshot of the right dataset (late-arrival check).
    #[arg(long)]
    pub newer_right: Option<PathBuf>,
    #[arg(long)]
    pub projects: Option<PathBuf>,
    /// DOIs of the publications present in the graph, one per line.
    #[arg(long)]
    pub publication_index: Option<PathBuf>,
    /// Directory written by `ingest crossref-dump`.
    #[arg(long)]
    pub crossref_index: Option<PathBuf>,
    /// Output CSV (default: <workdir>/classifications/left_only.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyRightArgs {
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Directory written by `ingest crossref-dump`; `--rules` picks the key set.
    #[arg(long)]
    pub crossref_index: Option<PathBuf>,
    /// Output CSV (default: <workdir>/classifications/right_only.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub keys: PathBuf,
    /// Key files whose keys are removed before sampling.
    #[arg(long)]
    pub exclude: Vec<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output key list (default: <workdir>/partition/sample.keys).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountSources {
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long)]
    pub left_class: Option<PathBuf>,
    #[arg(long)]
    pub right_class: Option<PathBuf>,
    /// Sample key list; restricts the right-only funnel below the Crossref stage.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// JSON object of named counts, merged with the counts derived from files.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    #[arg(long)]
    pub left_label: Option<String>,
    #[arg(long)]
    pub right_label: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub sources: CountSources,
    /// Output JSON (default: <workdir>/reports/stats.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub sources: CountSources,
    /// machine (JSON) or human (Markdown).
    #[arg(long, default_value = "human")]
    pub format: ReportFormat,
    /// Output file (default: <workdir>/reports/report.md or report.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossrefArgs {
    #[arg(long, global = true)]
    pub base_url: Option<String>,
    #[command(subcommand)]
    pub command: CrossrefCommand,
}

#[derive(Debug, Subcommand)]
pub enum CrossrefCommand {
    /// Fetch one work by DOI.
    Get {
        #[arg(long)]
        doi: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count works of a type published in a month range.
    Count {
        #[arg(long = "type")]
        work_type: String,
        #[arg(long)]
        from: YearMonth,
        #[arg(long)]
        until: YearMonth,
        #[arg(long)]
        has_funder: Option<bool>,
    },
    /// Fetch the works of keys whose DOI is absent from a local index.
    Enrich {
        #[arg(long)]
        keys: PathBuf,
        /// DOIs already available locally, one per line.
        #[arg(long)]
        local_index: Option<PathBuf>,
        /// Failure queue (default: <workdir>/queue/enrich.queue). A non-empty queue is retried instead of the keys.
        #[arg(long)]
        queue: Option<PathBuf>,
        /// Works file, NDJSON, appended to (default: <workdir>/snapshots/crossref-enriched.ndjson).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_in_flight: Option<usize>,
        /// Required for more than two concurrent requests.
        #[arg(long)]
        allow_high_concurrency: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum RulesCommand {
    Show {
        #[arg(long, default_value = "human")]
        format: ReportFormat,
    },
}
