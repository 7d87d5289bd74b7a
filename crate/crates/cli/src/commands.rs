use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{CommandFactory, FromArgMatches};
use fundlink_core::doi::DOI_PATTERN;
use fundlink_core::funder::{RELAXED_KEYWORDS, STRICT_FUNDER_DOIS, STRICT_NAMES};
use fundlink_core::funnel::{left_counts, overview_counts, right_counts};
use fundlink_core::ingest::{
    build_snapshot, extract_link_index, read_annotations, read_openaire_links,
    read_project_registry, read_snapshot, read_sygma_links, write_rejects, write_snapshot,
    CountingReader, IngestCounts, ANNOTATION_HEADER, PROJECT_HEADER,
};
use fundlink_core::keyfile::{read_dois, read_key_list, read_keys, write_keys};
use fundlink_core::model::Reject;
use fundlink_core::reconcile::{
    classify_left_only_with, diff_with, read_classification, read_partition, sample_unmatched,
    verify_right_only_with, write_left_classification, write_partition, write_right_classification,
    LeftCause, LeftEvidence, LeftVerdict, RightStatus,
};
use fundlink_core::{
    funnel_stats, DatasetSnapshot, Exec, NormalizedDoi, PairKey, Partition, RuleLevel,
};
use fundlink_crossref::{
    dois_to_fetch, read_queue, write_queue, CrossrefClient, FetchOutcome, SystemClock,
    UreqTransport, DEFAULT_MAX_IN_FLIGHT,
};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::config::AuditConfig;
use crate::fsio::{atomic_write, atomic_write_with, open};
use crate::report::{render_report, rules_document, stats_document, ReportFormat, ReportInput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NETWORK: i32 = 3;

/// Error marker carrying a non-default exit code. Errors without it exit with 2.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

fn usage(message: impl fmt::Display) -> anyhow::Error {
    anyhow::Error::new(Exit {
        code: EXIT_USAGE,
        message: message.to_string(),
    })
}

fn network(message: impl fmt::Display) -> anyhow::Error {
    anyhow::Error::new(Exit {
        code: EXIT_NETWORK,
        message: message.to_string(),
    })
}

fn exit_code(e: &anyhow::Error) -> i32 {
    e.chain()
        .find_map(|c| c.downcast_ref::<Exit>())
        .map(|x| x.code)
        .unwrap_or(EXIT_DATA)
}

fn command() -> clap::Command {
    Cli::command().after_help(format!(
        "DOI validation pattern: {DOI_PATTERN}\n\
         Exit codes: 0 success, 1 usage error, 2 data error, 3 network failure after retries.\n\
         Set FUNDLINK_CONTACT to an e-mail address to use the Crossref polite pool."
    ))
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn resolve_config(g: &GlobalArgs) -> anyhow::Result<AuditConfig> {
    let mut c = match &g.config {
        Some(p) => AuditConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => AuditConfig::default(),
    };
    if let Some(w) = &g.workdir {
        c.output_dir = w.display().to_string();
    }
    if let Some(m) = g.mode {
        c.normalization_mode = m;
    }
    if let Some(r) = g.rules {
        c.rule_level = r;
    }
    if let Some(a) = g.award_mode {
        c.award_mode = a;
    }
    if let Some(y) = g.grace_years {
        c.grace_years = y;
    }
    if g.permissive_dot {
        c.permissive_dot = true;
    }
    if g.keywords_case_insensitive {
        c.keyword_case_sensitive = false;
    }
    if let Some(r) = g.max_reject_rate {
        c.max_reject_rate = Some(r);
    }
    c.validate().map_err(|e| usage(format!("{e:#}")))?;
    Ok(c)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = resolve_config(&cli.global)?;
    let exec = if cli.global.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match cli.command {
        Command::Ingest { source } => match source {
            IngestCommand::Sygma(a) => ingest_snapshot(&mut cfg, &a, SnapshotKind::Sygma),
            IngestCommand::Openaire(a) => ingest_snapshot(&mut cfg, &a, SnapshotKind::Openaire),
            IngestCommand::CrossrefDump(a) => ingest_dump(&mut cfg, &a, exec),
            IngestCommand::Projects(a) => ingest_projects(&mut cfg, &a),
            IngestCommand::Annotations(a) => ingest_annotations(&mut cfg, &a),
        },
        Command::Diff(a) => diff_cmd(&mut cfg, &a, exec),
        Command::ClassifyLeft(a) => classify_left(&mut cfg, &a, exec),
        Command::VerifyRight(a) => verify_right(&mut cfg, &a, exec),
        Command::Sample(a) => sample_cmd(&mut cfg, &a),
        Command::Stats(a) => stats_cmd(&mut cfg, &a),
        Command::Report(a) => report_cmd(&mut cfg, &a),
        Command::Crossref(a) => crossref_cmd(&mut cfg, a),
        Command::Rules { command } => match command {
            RulesCommand::Show { format } => rules_show(&cfg, format),
        },
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `--rejects`, else `<out>.rejects` when `--out` was given, else `<workdir>/rejects/<name>.rejects`.
fn rejects_path(
    cfg: &AuditConfig,
    explicit: &Option<PathBuf>,
    out: &Option<PathBuf>,
    name: &str,
) -> PathBuf {
    match (explicit, out) {
        (Some(r), _) => r.clone(),
        (None, Some(o)) => with_suffix(o, ".rejects"),
        (None, None) => cfg
            .out_root()
            .join("rejects")
            .join(format!("{name}.rejects")),
    }
}

fn check_counts(what: &str, counts: &IngestCounts, cfg: &AuditConfig) -> anyhow::Result<()> {
    if !counts.is_conserved() {
        bail!(
            "{what}: conservation violated: rows_in {} != records {} + rejects {} + skipped {}",
            counts.rows_in,
            counts.records_out,
            counts.rejects,
            counts.skipped_no_doi
        );
    }
    counts.check_reject_rate(cfg.max_reject_rate)?;
    Ok(())
}

fn save_rejects(path: &Path, rejects: &[Reject]) -> anyhow::Result<()> {
    atomic_write_with(path, |w| Ok(write_rejects(w, rejects)?))
}

fn load_snapshot(path: &Path) -> anyhow::Result<DatasetSnapshot> {
    read_snapshot(open(path)?).with_context(|| format!("reading snapshot {}", path.display()))
}

enum SnapshotKind {
    Sygma,
    Openaire,
}

fn ingest_snapshot(
    cfg: &mut AuditConfig,
    a: &SnapshotIngestArgs,
    kind: SnapshotKind,
) -> anyhow::Result<()> {
    cfg.record_input("input", &a.input);
    let normalizer = cfg.normalizer();
    let source = open(&a.input)?;
    let (snapshot, counts) = match kind {
        SnapshotKind::Sygma => {
            let mut reader = read_sygma_links(source, normalizer)?;
            let snap = build_snapshot(&mut reader, &a.label, a.date, cfg.normalization_mode)?;
            (snap, reader.counts())
        }
        SnapshotKind::Openaire => {
            let mut reader = read_openaire_links(source, normalizer);
            let snap = build_snapshot(&mut reader, &a.label, a.date, cfg.normalization_mode)?;
            (snap, reader.counts())
        }
    };
    check_counts(&a.input.display().to_string(), &counts, cfg)?;
    let out = a.out.clone().unwrap_or_else(|| {
        cfg.out_root()
            .join("snapshots")
            .join(format!("{}.snap", a.label))
    });
    atomic_write_with(&out, |w| Ok(write_snapshot(w, &snapshot)?))?;
    save_rejects(
        &rejects_path(cfg, &a.rejects, &a.out, &a.label),
        &snapshot.rejects,
    )?;
    eprintln!(
        "{}: {} rows, {} links ({} distinct keys), {} rejected",
        a.label,
        counts.rows_in,
        counts.records_out,
        snapshot.len(),
        counts.rejects
    );
    Ok(())
}

fn ingest_dump(cfg: &mut AuditConfig, a: &DumpArgs, exec: Exec) -> anyhow::Result<()> {
    cfg.record_input("input", &a.input);
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("snapshots").join("crossref"));
    let normalizer = cfg.normalizer();
    let mut index = None;
    atomic_write_with(&out.join("works.dois"), |w| {
        let mut io_err = None;
        let result = extract_link_index(
            &a.input,
            &normalizer,
            cfg.award_mode,
            cfg.keyword_case_sensitive,
            exec,
            a.batch_size,
            |doi| {
                if io_err.is_none() {
                    if let Err(e) = writeln!(w, "{doi}") {
                        io_err = Some(e);
                    }
                }
            },
        )?;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        index = Some(result);
        Ok(())
    })?;
    let index = index.expect("index built");
    check_counts(&a.input.display().to_string(), &index.scan.counts, cfg)?;
    for (name, set) in [
        ("strict.keys", &index.strict),
        ("relaxed.keys", &index.relaxed),
    ] {
        atomic_write_with(&out.join(name), |w| Ok(write_keys(w, set)?))?;
    }
    let mut scan = serde_json::to_string_pretty(&index.scan)?;
    scan.push('\n');
    atomic_write(&out.join("scan.json"), scan.as_bytes())?;
    save_rejects(
        &rejects_path(cfg, &a.rejects, &a.out, "crossref"),
        &index.rejects,
    )?;
    for fe in &index.scan.file_errors {
        log::warn!("{fe:?}");
    }
    let c = index.scan.counts;
    eprintln!(
        "crossref: {} files, {} rows, {} works, {} rejected, {} without DOI, {} file errors; {} strict and {} relaxed link keys",
        index.scan.files,
        c.rows_in,
        c.records_out,
        c.rejects,
        c.skipped_no_doi,
        index.scan.file_errors.len(),
        index.strict.len(),
        index.relaxed.len()
    );
    Ok(())
}

fn ingest_projects(cfg: &mut AuditConfig, a: &TableArgs) -> anyhow::Result<()> {
    cfg.record_input("input", &a.input);
    let (table, rejects, counts) = read_project_registry(open(&a.input)?)?;
    check_counts(&a.input.display().to_string(), &counts, cfg)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("snapshots").join("projects.csv"));
    atomic_write_with(&out, |w| {
        let mut csv = csv_writer(w);
        csv.write_record(PROJECT_HEADER)?;
        for p in table.values() {
            csv.write_record([
                p.grant_number.as_str().to_string(),
                p.acronym.clone().unwrap_or_default(),
                p.start_date.to_string(),
                p.end_date.map(|d| d.to_string()).unwrap_or_default(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    save_rejects(&rejects_path(cfg, &a.rejects, &a.out, "projects"), &rejects)?;
    eprintln!(
        "projects: {} rows, {} projects, {} rejected",
        counts.rows_in,
        table.len(),
        counts.rejects
    );
    Ok(())
}

fn csv_writer(w: &mut dyn Write) -> CsvOut<'_> {
    CsvOut(w)
}

/// Minimal RFC-4180 writer over a borrowed sink.
struct CsvOut<'a>(&'a mut dyn Write);

impl CsvOut<'_> {
    fn write_record<I, S>(&mut self, fields: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.0.write_all(b",")?;
            }
            first = false;
            let f = f.as_ref();
            if f.contains([',', '"', '\n', '\r']) {
                write!(self.0, "\"{}\"", f.replace('"', "\"\""))?;
            } else {
                self.0.write_all(f.as_bytes())?;
            }
        }
        self.0.write_all(b"\n")
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.flush()
    }
}

fn ingest_annotations(cfg: &mut AuditConfig, a: &TableArgs) -> anyhow::Result<()> {
    cfg.record_input("input", &a.input);
    let (table, rejects, counts) = read_annotations(open(&a.input)?)?;
    check_counts(&a.input.display().to_string(), &counts, cfg)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("snapshots").join("annotations.csv"));
    atomic_write_with(&out, |w| {
        let mut csv = csv_writer(w);
        csv.write_record(ANNOTATION_HEADER)?;
        for ann in table.values() {
            csv.write_record([
                ann.pair_key.as_str(),
                ann.label.as_str(),
                ann.evidence_source.as_str(),
                ann.note.as_str(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    save_rejects(
        &rejects_path(cfg, &a.rejects, &a.out, "annotations"),
        &rejects,
    )?;
    eprintln!(
        "annotations: {} rows, {} annotated keys, {} rejected",
        counts.rows_in,
        table.len(),
        counts.rejects
    );
    Ok(())
}

/// Written next to the key files so later stages know the dataset labels.
#[derive(Debug, Serialize, Deserialize)]
struct PartitionMeta {
    left_label: String,
    right_label: String,
    left_snapshot_date: chrono::NaiveDate,
    right_snapshot_date: chrono::NaiveDate,
    normalization_mode: fundlink_core::NormalizationMode,
    matched: usize,
    left_only: usize,
    right_only: usize,
}

const PARTITION_META: &str = "partition.json";

fn diff_cmd(cfg: &mut AuditConfig, a: &DiffArgs, exec: Exec) -> anyhow::Result<()> {
    cfg.record_input("left", &a.left);
    cfg.record_input("right", &a.right);
    let left = load_snapshot(&a.left)?;
    let right = load_snapshot(&a.right)?;
    let partition = diff_with(&left, &right, exec)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("partition"));
    let mut result = Ok(());
    write_partition(&partition, |name, bytes| {
        if result.is_ok() {
            result = atomic_write(&out.join(name), bytes);
        }
        Ok(())
    })?;
    result?;
    let meta = PartitionMeta {
        left_label: left.label.clone(),
        right_label: right.label.clone(),
        left_snapshot_date: left.snapshot_date,
        right_snapshot_date: right.snapshot_date,
        normalization_mode: left.mode,
        matched: partition.matched.len(),
        left_only: partition.left_only.len(),
        right_only: partition.right_only.len(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    atomic_write(&out.join(PARTITION_META), text.as_bytes())?;
    eprintln!(
        "{} vs {}: {} matched, {} only in {}, {} only in {}",
        left.label,
        right.label,
        meta.matched,
        meta.left_only,
        left.label,
        meta.right_only,
        right.label
    );
    Ok(())
}

fn load_partition(dir: &Path) -> anyhow::Result<Partition> {
    let meta_path = dir.join(PARTITION_META);
    let (left, right) = if meta_path.exists() {
        let meta: PartitionMeta = serde_json::from_reader(open(&meta_path)?)
            .with_context(|| format!("reading {}", meta_path.display()))?;
        (meta.left_label, meta.right_label)
    } else {
        ("left".to_string(), "right".to_string())
    };
    Ok(read_partition(dir, &left, &right)?)
}

fn load_keys(path: &Path) -> anyhow::Result<BTreeSet<PairKey>> {
    read_keys(open(path)?).with_context(|| format!("reading keys {}", path.display()))
}

fn rule_keys_file(level: RuleLevel) -> &'static str {
    match level {
        RuleLevel::Strict => "strict.keys",
        RuleLevel::Relaxed => "relaxed.keys",
    }
}

fn classify_left(cfg: &mut AuditConfig, a: &ClassifyLeftArgs, exec: Exec) -> anyhow::Result<()> {
    cfg.record_input("partition", &a.partition);
    cfg.record_input("left", &a.left);
    let partition = load_partition(&a.partition)?;
    let left = load_snapshot(&a.left)?;
    let newer = match &a.newer_right {
        Some(p) => {
            cfg.record_input("newer_right", p);
            Some(load_snapshot(p)?)
        }
        None => None,
    };
    let projects = match &a.projects {
        Some(p) => {
            cfg.record_input("projects", p);
            let (table, rejects, _) = read_project_registry(open(p)?)?;
            if !rejects.is_empty() {
                log::warn!("{}: {} registry rows rejected", p.display(), rejects.len());
            }
            Some(table)
        }
        None => None,
    };
    let publications = match &a.publication_index {
        Some(p) => {
            cfg.record_input("publication_index", p);
            Some(read_dois(open(p)?).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    let (strict, relaxed) = match &a.crossref_index {
        Some(dir) => {
            cfg.record_input("crossref_index", dir);
            (
                Some(load_keys(&dir.join("strict.keys"))?),
                Some(load_keys(&dir.join("relaxed.keys"))?),
            )
        }
        None => (None, None),
    };
    let evidence = LeftEvidence {
        newer_right: newer.as_ref(),
        projects: projects.as_ref(),
        publication_index: publications.as_ref(),
        crossref_strict: strict.as_ref(),
        crossref_relaxed: relaxed.as_ref(),
        grace_years: cfg.grace_years,
        graph_normalizer: cfg.graph_normalizer(),
        ..LeftEvidence::new(&left)
    };
    let missing = partition
        .left_only
        .iter()
        .filter(|k| !left.contains(k))
        .count();
    if missing > 0 {
        bail!(
            "{missing} left-only keys are absent from snapshot {}; partition and snapshot do not belong together",
            a.left.display()
        );
    }
    let result = classify_left_only_with(&partition, &evidence, exec);
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("classifications").join("left_only.csv"));
    atomic_write_with(&out, |w| Ok(write_left_classification(w, &result)?))?;
    let summary: Vec<String> = LeftCause::ALL
        .iter()
        .map(|c| format!("{} {}", c, result.count(*c)))
        .collect();
    eprintln!(
        "left-only: {} keys; {}",
        result.verdicts.len(),
        summary.join(", ")
    );
    Ok(())
}

fn verify_right(cfg: &mut AuditConfig, a: &VerifyRightArgs, exec: Exec) -> anyhow::Result<()> {
    cfg.record_input("partition", &a.partition);
    cfg.record_input("right", &a.right);
    let partition = load_partition(&a.partition)?;
    let right = load_snapshot(&a.right)?;
    let annotations = match &a.annotations {
        Some(p) => {
            cfg.record_input("annotations", p);
            let (table, rejects, _) = read_annotations(open(p)?)?;
            if !rejects.is_empty() {
                log::warn!(
                    "{}: {} annotation rows rejected",
                    p.display(),
                    rejects.len()
                );
            }
            table
        }
        None => Default::default(),
    };
    let crossref = match &a.crossref_index {
        Some(dir) => {
            cfg.record_input("crossref_index", dir);
            Some(load_keys(&dir.join(rule_keys_file(cfg.rule_level)))?)
        }
        None => {
            log::warn!("no Crossref index given; the Crossref funding match stage is skipped");
            None
        }
    };
    let result = verify_right_only_with(&partition, crossref.as_ref(), &annotations, &right, exec);
    let out = a.out.clone().unwrap_or_else(|| {
        cfg.out_root()
            .join("classifications")
            .join("right_only.csv")
    });
    atomic_write_with(&out, |w| Ok(write_right_classification(w, &result)?))?;
    let summary: Vec<String> = RightStatus::ALL
        .iter()
        .map(|s| format!("{} {}", s, result.count(*s)))
        .collect();
    eprintln!(
        "right-only: {} keys; {}",
        result.verdicts.len(),
        summary.join(", ")
    );
    Ok(())
}

fn sample_cmd(cfg: &mut AuditConfig, a: &SampleArgs) -> anyhow::Result<()> {
    cfg.record_input("keys", &a.keys);
    let mut keys = load_keys(&a.keys)?;
    for ex in &a.exclude {
        for k in load_keys(ex)? {
            keys.remove(&k);
        }
    }
    let n = a.n.unwrap_or(cfg.sample_n);
    let seed = a.seed.unwrap_or(cfg.sample_seed);
    let sample = sample_unmatched(&keys, n, seed);
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("partition").join("sample.keys"));
    atomic_write_with(&out, |w| Ok(write_keys(w, &sample)?))?;
    eprintln!(
        "sampled {} of {} keys (seed {seed})",
        sample.len(),
        keys.len()
    );
    Ok(())
}

fn merge_counts(
    into: &mut BTreeMap<String, u64>,
    from: BTreeMap<String, u64>,
    origin: &str,
) -> anyhow::Result<()> {
    for (k, v) in from {
        match into.get(&k) {
            Some(&old) if old != v => {
                bail!("count {k} is {old} from earlier inputs but {v} from {origin}")
            }
            _ => {
                into.insert(k, v);
            }
        }
    }
    Ok(())
}

struct Gathered {
    left_label: String,
    right_label: String,
    counts: BTreeMap<String, u64>,
}

fn gather(cfg: &mut AuditConfig, s: &CountSources) -> anyhow::Result<Gathered> {
    let mut counts = BTreeMap::new();
    let mut labels = ("left".to_string(), "right".to_string());
    if let Some(dir) = &s.partition {
        cfg.record_input("partition", dir);
        let p = load_partition(dir)?;
        labels = (p.left_label.clone(), p.right_label.clone());
        merge_counts(&mut counts, overview_counts(&p), "partition")?;
    }
    if let Some(path) = &s.left_class {
        cfg.record_input("left_class", path);
        let rows = read_classification(open(path)?, &path.display().to_string())?;
        let verdicts = rows
            .into_iter()
            .map(|r| {
                Ok(LeftVerdict {
                    cause: r
                        .value
                        .parse::<LeftCause>()
                        .map_err(|e| anyhow!("{}: {e}", path.display()))?,
                    date_implausible: r.date_implausible.unwrap_or(false),
                    evidence: r.evidence,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        merge_counts(&mut counts, left_counts(&verdicts), "left classification")?;
    }
    if let Some(path) = &s.right_class {
        cfg.record_input("right_class", path);
        let rows = read_classification(open(path)?, &path.display().to_string())?;
        let statuses = rows
            .into_iter()
            .map(|r| {
                let status = r
                    .value
                    .parse::<RightStatus>()
                    .map_err(|e| anyhow!("{}: {e}", path.display()))?;
                Ok((r.pair_key, status))
            })
            .collect::<anyhow::Result<BTreeMap<_, _>>>()?;
        let sample = match &s.sample {
            Some(p) => {
                cfg.record_input("sample", p);
                let list =
                    read_key_list(open(p)?).with_context(|| format!("reading {}", p.display()))?;
                Some(list.into_iter().collect::<BTreeSet<_>>())
            }
            None => None,
        };
        merge_counts(
            &mut counts,
            right_counts(&statuses, sample.as_ref()),
            "right classification",
        )?;
    }
    if let Some(path) = &s.counts {
        cfg.record_input("counts", path);
        let extra: BTreeMap<String, u64> = serde_json::from_reader(open(path)?)
            .with_context(|| format!("reading counts {}", path.display()))?;
        merge_counts(&mut counts, extra, &path.display().to_string())?;
    }
    if let Some(l) = &s.left_label {
        labels.0 = l.clone();
    }
    if let Some(r) = &s.right_label {
        labels.1 = r.clone();
    }
    Ok(Gathered {
        left_label: labels.0,
        right_label: labels.1,
        counts,
    })
}

fn stats_cmd(cfg: &mut AuditConfig, a: &StatsArgs) -> anyhow::Result<()> {
    let g = gather(cfg, &a.sources)?;
    let stats = funnel_stats(&g.counts)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_root().join("reports").join("stats.json"));
    atomic_write(&out, stats_document(&stats).as_bytes())?;
    eprintln!(
        "{} counts, {} stage checks passed, {} stages unchecked",
        stats.counts.len(),
        stats.checks.len(),
        stats.unchecked.len()
    );
    Ok(())
}

fn report_cmd(cfg: &mut AuditConfig, a: &ReportArgs) -> anyhow::Result<()> {
    let g = gather(cfg, &a.sources)?;
    let stats = funnel_stats(&g.counts)?;
    let input = ReportInput {
        left_label: &g.left_label,
        right_label: &g.right_label,
        stats: &stats,
        config: cfg,
    };
    let text = render_report(&input, a.format);
    let out = a.out.clone().unwrap_or_else(|| {
        cfg.out_root().join("reports").join(match a.format {
            ReportFormat::Human => "report.md",
            ReportFormat::Machine => "report.json",
        })
    });
    atomic_write(&out, text.as_bytes())?;
    eprintln!("report written to {}", out.display());
    Ok(())
}

fn rules_show(cfg: &AuditConfig, format: ReportFormat) -> anyhow::Result<()> {
    let text = match format {
        ReportFormat::Machine => rules_document(cfg),
        ReportFormat::Human => {
            let mut s = String::new();
            s.push_str(&format!("DOI pattern: {DOI_PATTERN}\n"));
            s.push_str("Strict funder DOIs:\n");
            for d in STRICT_FUNDER_DOIS {
                s.push_str(&format!("  {d}\n"));
            }
            s.push_str("Strict funder names:\n");
            for n in STRICT_NAMES {
                s.push_str(&format!("  {n}\n"));
            }
            s.push_str(&format!(
                "Relaxed keywords (case-sensitive: {}):\n",
                cfg.keyword_case_sensitive
            ));
            for k in RELAXED_KEYWORDS {
                s.push_str(&format!("  {k}\n"));
            }
            s.push_str(&format!(
                "Rule level: {}\nAward mode: {}\nGrace years: {}\n",
                cfg.rule_level, cfg.award_mode, cfg.grace_years
            ));
            s
        }
    };
    print!("{text}");
    Ok(())
}

type LiveClient = CrossrefClient<UreqTransport, SystemClock>;

fn client(cfg: &AuditConfig, base_url: Option<&str>) -> LiveClient {
    CrossrefClient::new(UreqTransport::default(), SystemClock, cfg.retry.clone())
        .with_base_url(base_url.unwrap_or(&cfg.crossref_base_url))
        .with_contact_from_env()
        .with_normalizer(cfg.normalizer())
}

fn crossref_cmd(cfg: &mut AuditConfig, a: CrossrefArgs) -> anyhow::Result<()> {
    if let Some(url) = &a.base_url {
        cfg.crossref_base_url = url.clone();
    }
    match a.command {
        CrossrefCommand::Get { doi, out } => {
            let doi = cfg.normalizer().normalize(&doi)?;
            let fetch = client(cfg, None).get_work(&doi);
            match fetch.outcome {
                FetchOutcome::Found(work) => {
                    let mut text = serde_json::to_string_pretty(&work.to_crossref_json())?;
                    text.push('\n');
                    match out {
                        Some(p) => atomic_write(&p, text.as_bytes())?,
                        None => print!("{text}"),
                    }
                    Ok(())
                }
                FetchOutcome::NotFound => bail!("{doi}: not found in Crossref"),
                FetchOutcome::Failed {
                    attempts,
                    last_error,
                    ..
                } => Err(network(format!(
                    "{doi}: failed after {attempts} attempts: {last_error}"
                ))),
            }
        }
        CrossrefCommand::Count {
            work_type,
            from,
            until,
            has_funder,
        } => {
            let fetch = client(cfg, None)
                .count_works(&work_type, from, until, has_funder)
                .map_err(usage)?;
            match fetch.outcome {
                FetchOutcome::Found(n) => {
                    println!("{n}");
                    Ok(())
                }
                FetchOutcome::NotFound => bail!("work type {work_type:?} not found"),
                FetchOutcome::Failed {
                    attempts,
                    last_error,
                    ..
                } => Err(network(format!(
                    "count failed after {attempts} attempts: {last_error}"
                ))),
            }
        }
        CrossrefCommand::Enrich {
            keys,
            local_index,
            queue,
            out,
            max_in_flight,
            allow_high_concurrency,
        } => {
            let max_in_flight = max_in_flight.unwrap_or(cfg.max_in_flight);
            if max_in_flight == 0 {
                return Err(usage("--max-in-flight must be at least 1"));
            }
            if max_in_flight > DEFAULT_MAX_IN_FLIGHT && !allow_high_concurrency {
                return Err(usage(format!(
                    "more than {DEFAULT_MAX_IN_FLIGHT} concurrent requests needs --allow-high-concurrency"
                )));
            }
            cfg.max_in_flight = max_in_flight;
            cfg.record_input("keys", &keys);
            let queue = queue.unwrap_or_else(|| cfg.out_root().join("queue").join("enrich.queue"));
            let out = out.unwrap_or_else(|| {
                cfg.out_root()
                    .join("snapshots")
                    .join("crossref-enriched.ndjson")
            });
            let queued = if queue.exists() {
                read_queue(open(&queue)?)
                    .with_context(|| format!("reading queue {}", queue.display()))?
            } else {
                Vec::new()
            };
            let dois: Vec<NormalizedDoi> = if !queued.is_empty() {
                eprintln!(
                    "resuming {} queued DOIs from {}",
                    queued.len(),
                    queue.display()
                );
                queued
                    .iter()
                    .map(|e| NormalizedDoi::from_normalized(&e.doi))
                    .collect::<Result<_, _>>()?
            } else {
                let keys = load_keys(&keys)?;
                let local = match &local_index {
                    Some(p) => {
                        cfg.record_input("local_index", p);
                        read_dois(open(p)?).with_context(|| format!("reading {}", p.display()))?
                    }
                    None => HashSet::new(),
                };
                dois_to_fetch(&keys, &local)
            };
            let existing = if out.exists() {
                std::fs::read(&out).with_context(|| format!("reading {}", out.display()))?
            } else {
                Vec::new()
            };
            let client = client(cfg, None);
            let mut report = None;
            atomic_write_with(&out, |w| {
                w.write_all(&existing)?;
                let mut io_err = None;
                let r = client.enrich(&dois, max_in_flight, |work| {
                    if io_err.is_none() {
                        let line = work.to_crossref_json().to_string();
                        if let Err(e) = writeln!(w, "{line}") {
                            io_err = Some(e);
                        }
                    }
                });
                if let Some(e) = io_err {
                    return Err(e.into());
                }
                report = Some(r);
                Ok(())
            })?;
            let report = report.expect("enrich ran");
            atomic_write_with(&queue, |w| Ok(write_queue(w, &report.failed)?))?;
            eprintln!(
                "enrich: {} DOIs requested, {} fetched, {} not found, {} failed, {} HTTP requests",
                report.requested,
                report.fetched,
                report.not_found.len(),
                report.failed.len(),
                report.requests
            );
            if !report.failed.is_empty() {
                return Err(network(format!(
                    "{} DOIs failed; re-run to retry the queue in {}",
                    report.failed.len(),
                    queue.display()
                )));
            }
            Ok(())
        }
    }
}
