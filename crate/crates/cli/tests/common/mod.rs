#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fundlink-audit")
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .env("FUNDLINK_CONTACT", "audit@example.org")
        .output()
        .expect("spawn fundlink-audit")
}

pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "fundlink-audit {} exited {:?}\n{}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Copies the fixture corpus into `dir/fx` and writes `dir/audit.toml`.
pub fn stage_fixtures(dir: &Path) {
    let fx = dir.join("fx");
    std::fs::create_dir_all(&fx).unwrap();
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), fx.join(entry.file_name())).unwrap();
    }
    std::fs::write(
        dir.join("audit.toml"),
        "normalization_mode = \"AGGRESSIVE\"\nsample_n = 25\nsample_seed = 2021\n",
    )
    .unwrap();
}

/// Every pipeline step over the staged fixture corpus, with relative paths.
pub fn run_pipeline(dir: &Path) {
    let c = ["--config", "audit.toml"];
    let step = |args: &[&str]| {
        let mut all: Vec<&str> = c.to_vec();
        all.extend_from_slice(args);
        ok(dir, &all);
    };
    step(&[
        "ingest",
        "sygma",
        "--input",
        "fx/sygma.csv",
        "--label",
        "SYGMA",
        "--date",
        "2020-12-02",
    ]);
    step(&[
        "ingest",
        "openaire",
        "--input",
        "fx/openaire.jsonl",
        "--label",
        "OPENAIRE",
        "--date",
        "2020-12-02",
    ]);
    step(&[
        "ingest",
        "openaire",
        "--input",
        "fx/openaire_newer.jsonl",
        "--label",
        "OPENAIRE_2021",
        "--date",
        "2021-06-01",
    ]);
    step(&[
        "ingest",
        "crossref-dump",
        "--input",
        "fx/crossref_works.ndjson",
    ]);
    step(&["ingest", "projects", "--input", "fx/projects.csv"]);
    step(&["ingest", "annotations", "--input", "fx/annotations.csv"]);
    step(&[
        "diff",
        "--left",
        "snapshots/SYGMA.snap",
        "--right",
        "snapshots/OPENAIRE.snap",
    ]);
    step(&[
        "classify-left",
        "--partition",
        "partition",
        "--left",
        "snapshots/SYGMA.snap",
        "--newer-right",
        "snapshots/OPENAIRE_2021.snap",
        "--projects",
        "snapshots/projects.csv",
        "--publication-index",
        "fx/publications.dois",
        "--crossref-index",
        "snapshots/crossref",
    ]);
    step(&[
        "verify-right",
        "--partition",
        "partition",
        "--right",
        "snapshots/OPENAIRE.snap",
        "--annotations",
        "snapshots/annotations.csv",
        "--crossref-index",
        "snapshots/crossref",
    ]);
    step(&[
        "sample",
        "--keys",
        "partition/right_only.keys",
        "--exclude",
        "snapshots/crossref/strict.keys",
    ]);
    let sources = [
        "--partition",
        "partition",
        "--left-class",
        "classifications/left_only.csv",
        "--right-class",
        "classifications/right_only.csv",
        "--sample",
        "partition/sample.keys",
    ];
    let mut stats = vec!["stats"];
    stats.extend_from_slice(&sources);
    step(&stats);
    for format in ["human", "machine"] {
        let mut report = vec!["report", "--format", format];
        report.extend_from_slice(&sources);
        step(&report);
    }
}

/// `pair_key -> remaining columns` of a CSV with a header row.
pub fn csv_map(path: &Path) -> std::collections::BTreeMap<String, Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut cols = l.split(',').map(str::to_string);
            let key = cols.next().unwrap();
            (key, cols.collect())
        })
        .collect()
}
