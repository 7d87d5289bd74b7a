//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//! Run with `cargo test -p fundlink-cli --test acceptance`; the live Crossref
//! check needs `-- --ignored` and network access.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use fundlink_core::doi::DOI_PATTERN;
use fundlink_core::funder::{
    classify_funder, FunderMatch, RELAXED_KEYWORDS, STRICT_FUNDER_DOIS, STRICT_NAMES,
};
use fundlink_core::ingest::FunderAssertion;
use fundlink_core::reconcile::diff_with;
use fundlink_core::{
    funnel_stats, DatasetSnapshot, DoiNormalizer, Exec, FundingLink, NormalizationMode,
    NormalizedDoi, PairKey, ProjectId, RuleSet, Source,
};
use fundlink_crossref::mock::{MockReply, MockServer};
use fundlink_crossref::{
    read_queue, write_queue, CrossrefClient, FetchOutcome, RetryPolicy, SystemClock, UreqTransport,
    VirtualClock,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs `body`, prints the verdict line (bypassing libtest capture) and re-raises failures.
fn criterion(n: u32, title: &str, budget: Option<Duration>, body: impl FnOnce()) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed < b);
    let verdict = if result.is_ok() && in_budget {
        "PASS"
    } else {
        "FAIL"
    };
    let limit = budget
        .map(|b| format!(" (limit {b:?})"))
        .unwrap_or_default();
    let line = format!("criterion {n}: {verdict} {title} [{elapsed:.2?}{limit}]\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    if let Err(e) = result {
        resume_unwind(e);
    }
    assert!(
        in_budget,
        "criterion {n} took {elapsed:?}, limit {budget:?}"
    );
}

#[test]
fn criterion_1_funnel_arithmetic() {
    criterion(
        1,
        "funnel arithmetic on the published counts",
        Some(Duration::from_secs(1)),
        || {
            let counts: BTreeMap<String, u64> = [
                ("left_only", 13580),
                ("late_arrival", 6411),
                ("left_remaining", 7169),
                ("retrievable_via_relaxed", 457),
                ("crossref_funding_match", 23402),
                ("sampled", 1000),
                ("external_funding_match", 658),
                ("manual_review", 342),
                ("dedup_suspect", 263),
                ("manually_checked", 79),
                ("manually_confirmed", 46),
                ("data_mistake", 3),
                ("unverified", 30),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
            let stats = funnel_stats(&counts).expect("conservation checks pass");
            let pct = |key: &str| {
                stats
                    .share(key)
                    .unwrap_or_else(|| panic!("share {key}"))
                    .ratio()
                    .unwrap()
                    * 100.0
            };
            for (key, expected) in [
                ("late_arrival/left_only", 47.2),
                ("not_in_crossref/left_remaining", 93.6),
                ("external_funding_match/sampled", 65.8),
            ] {
                let got = pct(key);
                assert!((got - expected).abs() <= 0.05, "{key}: {got} vs {expected}");
            }
            assert_eq!(
                stats.share("late_arrival/left_only").unwrap().percent(),
                "47.2%"
            );
            assert_eq!(
                stats
                    .share("not_in_crossref/left_remaining")
                    .unwrap()
                    .percent(),
                "93.6%"
            );
            assert_eq!(
                stats
                    .share("external_funding_match/sampled")
                    .unwrap()
                    .percent(),
                "65.8%"
            );
            for stage in ["left_only", "manual_review", "manually_checked", "sampled"] {
                let check = stats.checks.iter().find(|c| c.stage == stage).expect(stage);
                assert!(check.complete, "{stage}");
                assert_eq!(check.total, check.children_sum, "{stage}");
            }
            // stages with unreported children are bounds, not equalities
            for c in &stats.checks {
                if c.complete {
                    assert_eq!(c.total, c.children_sum, "{}", c.stage);
                } else {
                    assert!(c.children_sum <= c.total, "{}", c.stage);
                }
            }
        },
    );
}

#[test]
fn criterion_2_rule_fidelity() {
    criterion(2, "strict funder DOIs and relaxed keywords", None, || {
        assert_eq!(
            STRICT_FUNDER_DOIS,
            [
                "10.13039/100010663",
                "10.13039/100010661",
                "10.13039/501100007601",
                "10.13039/100010665",
                "10.13039/501100000780",
                "10.13039/501100000781",
            ]
        );
        assert_eq!(
            RELAXED_KEYWORDS,
            [
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
            ]
        );
        assert_eq!(
            STRICT_NAMES,
            [
                "European Union’s Horizon 2020 research and innovation program",
                "European Union's"
            ]
        );
        let strict = RuleSet::strict();
        let relaxed = RuleSet::relaxed();
        for d in STRICT_FUNDER_DOIS {
            let a = FunderAssertion {
                funder_doi: Some(d.to_string()),
                name: None,
                awards: vec!["101000001".into()],
            };
            assert_eq!(
                classify_funder(&a, &strict),
                Some(FunderMatch::StrictDoi),
                "{d}"
            );
            assert!(classify_funder(&a, &relaxed).is_some(), "{d}");
        }
        for kw in RELAXED_KEYWORDS {
            let a = FunderAssertion {
                funder_doi: None,
                name: Some(format!("Funded by the {kw} programme")),
                awards: vec![],
            };
            assert_eq!(
                classify_funder(&a, &relaxed),
                Some(FunderMatch::RelaxedKeyword),
                "{kw}"
            );
            assert_eq!(
                classify_funder(&a, &strict),
                None,
                "{kw} must not pass strict rules"
            );
        }
        let other = FunderAssertion {
            funder_doi: Some("10.13039/100000001".into()),
            name: Some("National Science Foundation".into()),
            awards: vec![],
        };
        assert_eq!(classify_funder(&other, &relaxed), None);
    });
}

fn random_snapshot(
    rng: &mut ChaCha8Rng,
    label: &str,
    pool: &[(String, String)],
) -> DatasetSnapshot {
    let mut s = DatasetSnapshot::new(
        label,
        "2020-12-02".parse().unwrap(),
        NormalizationMode::Aggressive,
    );
    let n = rng.gen_range(0..=pool.len().min(1000));
    for (p, d) in pool.choose_multiple(rng, n) {
        s.insert(FundingLink::new(
            ProjectId::new(p).unwrap(),
            NormalizedDoi::from_normalized(d).unwrap(),
            Source::Sygma,
        ));
    }
    s
}

#[test]
fn criterion_3_diff_oracle() {
    criterion(
        3,
        "diff equals a brute-force oracle on 200 random pairs",
        Some(Duration::from_secs(30)),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for case in 0..200 {
                let projects = rng.gen_range(1..40);
                let dois = rng.gen_range(1..60);
                let pool: Vec<(String, String)> = (0..projects)
                    .flat_map(|p| {
                        (0..dois).map(move |d| (format!("{}", 700000 + p), format!("10.5555/d{d}")))
                    })
                    .collect();
                let left = random_snapshot(&mut rng, "L", &pool);
                let right = random_snapshot(&mut rng, "R", &pool);
                let partition = diff_with(&left, &right, Exec::default()).unwrap();
                assert_eq!(
                    partition,
                    diff_with(&left, &right, Exec::Sequential).unwrap()
                );

                let lk: Vec<&PairKey> = left.keys().collect();
                let rk: Vec<&PairKey> = right.keys().collect();
                let mut matched = BTreeSet::new();
                let mut left_only = BTreeSet::new();
                for l in &lk {
                    let mut found = false;
                    for r in &rk {
                        if l.as_str() == r.as_str() {
                            found = true;
                        }
                    }
                    if found {
                        matched.insert((*l).clone());
                    } else {
                        left_only.insert((*l).clone());
                    }
                }
                let mut right_only = BTreeSet::new();
                for r in &rk {
                    if !lk.iter().any(|l| l.as_str() == r.as_str()) {
                        right_only.insert((*r).clone());
                    }
                }
                assert_eq!(partition.matched, matched, "case {case}");
                assert_eq!(partition.left_only, left_only, "case {case}");
                assert_eq!(partition.right_only, right_only, "case {case}");

                assert!(partition.matched.is_disjoint(&partition.left_only));
                assert!(partition.matched.is_disjoint(&partition.right_only));
                assert!(partition.left_only.is_disjoint(&partition.right_only));
                let left_union: BTreeSet<_> = partition
                    .matched
                    .union(&partition.left_only)
                    .cloned()
                    .collect();
                let right_union: BTreeSet<_> = partition
                    .matched
                    .union(&partition.right_only)
                    .cloned()
                    .collect();
                assert_eq!(left_union, lk.into_iter().cloned().collect());
                assert_eq!(right_union, rk.into_iter().cloned().collect());
            }
        },
    );
}

#[test]
fn criterion_4_fixture_audit() {
    criterion(
        4,
        "fixture corpus yields the planted classification map",
        Some(Duration::from_secs(5)),
        || {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path();
            stage_fixtures(d);
            run_pipeline(d);

            let expected_left = csv_map(&fixtures().join("expected_left.csv"));
            let got_left: BTreeMap<String, Vec<String>> =
                csv_map(&d.join("classifications/left_only.csv"))
                    .into_iter()
                    .map(|(k, v)| (k, v[..2].to_vec()))
                    .collect();
            assert_eq!(got_left, expected_left);

            let expected_right = csv_map(&fixtures().join("expected_right.csv"));
            let got_right: BTreeMap<String, Vec<String>> =
                csv_map(&d.join("classifications/right_only.csv"))
                    .into_iter()
                    .map(|(k, v)| (k, v[..1].to_vec()))
                    .collect();
            assert_eq!(got_right, expected_right);

            let causes: BTreeSet<&str> = expected_left.values().map(|v| v[0].as_str()).collect();
            assert_eq!(causes.len(), 7, "every left cause is planted");
            let statuses: BTreeSet<&str> = expected_right.values().map(|v| v[0].as_str()).collect();
            assert_eq!(statuses.len(), 6, "every right status is planted");
        },
    );
}

#[test]
fn criterion_5_doi_normalization() {
    criterion(
        5,
        "normalizer idempotence, monotonicity and pattern table",
        None,
        || {
            let strict = DoiNormalizer::new(NormalizationMode::OpenaireStrict);
            let aggressive = DoiNormalizer::new(NormalizationMode::Aggressive);

            // Independent oracle: the pattern compiled from its own literal.
            let oracle = regex::Regex::new(r#"^10\.[0-9]{4,}[^\s"/<>]*[^\s"<>]+$"#).unwrap();
            assert_eq!(DOI_PATTERN, oracle.as_str());

            let table: [(&str, bool); 8] = [
                ("10.1234/abcd", true),
                ("10.123/abcd", false),
                ("10.1234/ab cd", false),
                ("10.12345", true),
                ("10.1234/a\"b", false),
                ("10.1234/<b>", false),
                ("11.1234/abcd", false),
                ("10.1234/", true),
            ];
            for (candidate, valid) in table {
                assert_eq!(strict.is_valid(candidate), valid, "{candidate:?}");
                assert_eq!(
                    oracle.is_match(candidate),
                    valid,
                    "oracle disagrees on {candidate:?}"
                );
            }
            assert_eq!(
                strict.normalize("10.1234/AbC ").unwrap().as_str(),
                "10.1234/abc"
            );
            assert_eq!(
                aggressive
                    .normalize("https://doi.org/10.1234/abc")
                    .unwrap()
                    .as_str(),
                "10.1234/abc"
            );
            assert!(strict.normalize("https://doi.org/10.1234/abc").is_err());
            assert!(strict.normalize("banana").is_err());
            assert!(aggressive.normalize("banana").is_err());

            let pieces = [
                "10.",
                "1234",
                "5555",
                "123",
                "/",
                "abc",
                "ABC",
                "x.y",
                " ",
                "\t",
                "\"",
                "<",
                ">",
                "'",
                "doi:",
                "DOI:",
                "https://doi.org/",
                "http://dx.doi.org/",
                "-",
                "_",
                ";",
                "(",
                ")",
                "é",
                "0",
                "9",
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut accepted = 0;
            for _ in 0..10_000 {
                let n = rng.gen_range(1..8);
                let mut s = String::new();
                if rng.gen_bool(0.5) {
                    s.push_str("10.");
                    s.push_str(pieces[rng.gen_range(1..3)]);
                    s.push('/');
                }
                for _ in 0..n {
                    s.push_str(pieces.choose(&mut rng).unwrap());
                }
                if rng.gen_bool(0.2) {
                    s = format!("<{s}>");
                }
                assert_eq!(strict.is_valid(&s), oracle.is_match(&s), "{s:?}");
                for norm in [strict, aggressive] {
                    if let Ok(d) = norm.normalize(&s) {
                        assert!(oracle.is_match(d.as_str()), "{s:?} -> {d}");
                        assert_eq!(
                            norm.normalize(d.as_str()).unwrap(),
                            d,
                            "not idempotent on {s:?}"
                        );
                    }
                }
                if let Ok(d) = strict.normalize(&s) {
                    accepted += 1;
                    assert_eq!(aggressive.normalize(&s).unwrap(), d, "{s:?}");
                }
            }
            assert!(
                accepted > 100,
                "generator produced too few valid DOIs ({accepted})"
            );
        },
    );
}

const RECORDS: u64 = 1_000_000;

/// Writes the synthetic dump; returns `(works, rejects, skipped_no_doi)`.
fn write_big_dump(path: &Path) -> (u64, u64, u64) {
    let mut w = BufWriter::new(std::fs::File::create(path).unwrap());
    let (mut works, mut rejects, mut skipped) = (0, 0, 0);
    for i in 0..RECORDS {
        match i % 100 {
            7 => {
                writeln!(
                    w,
                    r#"{{"type":"journal-article","issued":{{"date-parts":[[2019]]}}}}"#
                )
                .unwrap();
                skipped += 1;
            }
            13 => {
                writeln!(w, r#"{{"DOI":"10.12/short{i}","type":"journal-article"}}"#).unwrap();
                rejects += 1;
            }
            29 => {
                writeln!(w, r#"{{"DOI":"10.5555/cut{i}","#).unwrap();
                rejects += 1;
            }
            k if k % 3 == 0 => {
                writeln!(
                    w,
                    r#"{{"DOI":"10.5555/W{i}","type":"journal-article","issued":{{"date-parts":[[2019,5,1]]}},"funder":[{{"DOI":"10.13039/501100000780","name":"European Commission","award":["{}"]}}]}}"#,
                    700000 + i % 5000
                )
                .unwrap();
                works += 1;
            }
            _ => {
                writeln!(
                    w,
                    r#"{{"DOI":"10.5555/w{i}","type":"proceedings-article","published-online":{{"date-parts":[[2020]]}},"funder":[{{"name":"National Science Foundation","award":["1234567"]}}]}}"#
                )
                .unwrap();
                works += 1;
            }
        }
    }
    w.flush().unwrap();
    (works, rejects, skipped)
}

/// Runs the binary and returns (exit status, peak resident set in KiB).
#[allow(clippy::zombie_processes)] // reaped by wait4
fn run_measured(dir: &Path, args: &[&str]) -> (i32, u64) {
    let child = std::process::Command::new(bin())
        .args(args)
        .current_dir(dir)
        .stdout(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let pid = child.id() as libc::pid_t;
    let mut status = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    assert_eq!(rc, pid, "wait4 failed");
    assert!(libc::WIFEXITED(status));
    (libc::WEXITSTATUS(status), usage.ru_maxrss as u64)
}

#[test]
fn criterion_6_streaming_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (works, rejects, skipped) = write_big_dump(&d.join("big.ndjson"));
    criterion(
        6,
        "1M-record dump under 256 MB and 120 s",
        Some(Duration::from_secs(120)),
        || {
            let (code, peak_kib) = run_measured(
                d,
                &[
                    "--mode",
                    "aggressive",
                    "ingest",
                    "crossref-dump",
                    "--input",
                    "big.ndjson",
                    "--out",
                    "idx",
                ],
            );
            assert_eq!(code, 0);
            let _ = writeln!(
                std::io::stdout().lock(),
                "criterion 6: peak resident set {} MiB",
                peak_kib / 1024
            );
            assert!(peak_kib < 256 * 1024, "peak RSS {peak_kib} KiB");
            let scan: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(d.join("idx/scan.json")).unwrap())
                    .unwrap();
            let c = &scan["counts"];
            let get = |k: &str| c[k].as_u64().unwrap_or_else(|| panic!("{k} in {c}"));
            assert_eq!(get("rows_in"), RECORDS);
            assert_eq!(
                get("rows_in"),
                get("records_out") + get("rejects") + get("skipped_no_doi")
            );
            assert_eq!(
                (get("records_out"), get("rejects"), get("skipped_no_doi")),
                (works, rejects, skipped)
            );
            let strict = std::fs::read_to_string(d.join("idx/strict.keys")).unwrap();
            let funded = (0..RECORDS)
                .filter(|i| i % 100 % 3 == 0 && ![7, 13, 29].contains(&(i % 100)))
                .count();
            assert_eq!(strict.lines().count(), funded);
        },
    );
}

fn work_body(path: &str) -> String {
    let d = path.trim_start_matches("/works/");
    format!(r#"{{"status":"ok","message":{{"DOI":"{d}","type":"journal-article"}}}}"#)
}

fn mock_client<'c>(
    server: &MockServer,
    clock: &'c VirtualClock,
) -> CrossrefClient<UreqTransport, &'c VirtualClock> {
    CrossrefClient::new(
        UreqTransport::new(Duration::from_secs(5)),
        clock,
        RetryPolicy::default(),
    )
    .with_base_url(&server.url())
    .with_contact(Some("audit@example.org".into()))
}

fn ndoi(s: &str) -> NormalizedDoi {
    NormalizedDoi::from_normalized(s).unwrap()
}

#[test]
fn criterion_7_client_contract() {
    criterion(
        7,
        "Crossref client contract against a scripted server",
        None,
        || {
            let server = MockServer::start(Duration::ZERO, |_, _| MockReply::status(404)).unwrap();
            let clock = VirtualClock::new();
            let f = mock_client(&server, &clock).get_work(&ndoi("10.5555/missing"));
            assert_eq!(f.outcome, FetchOutcome::NotFound);
            assert_eq!(f.attempts(), 1);
            assert!(clock.sleeps().is_empty());

            let server = MockServer::start(Duration::ZERO, |req, nth| {
                if nth < 2 {
                    MockReply::status(503)
                } else {
                    MockReply::json(work_body(req.path()))
                }
            })
            .unwrap();
            let clock = VirtualClock::new();
            let f = mock_client(&server, &clock).get_work(&ndoi("10.5555/x"));
            assert!(
                matches!(f.outcome, FetchOutcome::Found(_)),
                "{:?}",
                f.outcome
            );
            assert_eq!(f.attempts(), 3);
            let sleeps = clock.sleeps();
            assert_eq!(sleeps.len(), 2);
            assert!(sleeps[0] <= sleeps[1], "{sleeps:?}");

            let server = MockServer::start(Duration::ZERO, |_, _| MockReply::Drop).unwrap();
            let clock = VirtualClock::new();
            let f = mock_client(&server, &clock).get_work(&ndoi("10.5555/x"));
            assert!(
                matches!(f.outcome, FetchOutcome::Failed { attempts: 5, .. }),
                "{:?}",
                f.outcome
            );
            assert_eq!(server.hits("/works/10.5555/x"), 5);

            let dois: Vec<NormalizedDoi> =
                (0..12).map(|i| ndoi(&format!("10.5555/b{i}"))).collect();
            for bound in [1, 2, 3] {
                let server = MockServer::start(Duration::from_millis(20), |req, _| {
                    MockReply::json(work_body(req.path()))
                })
                .unwrap();
                let clock = VirtualClock::new();
                let report = mock_client(&server, &clock).enrich(&dois, bound, |_| {});
                assert_eq!(report.fetched, 12);
                assert!(
                    server.max_in_flight() <= bound,
                    "bound {bound}, saw {}",
                    server.max_in_flight()
                );
            }

            let dois = vec![ndoi("10.5555/a"), ndoi("10.5555/b"), ndoi("10.5555/c")];
            let healthy = MockServer::start(Duration::ZERO, |req, _| {
                MockReply::json(work_body(req.path()))
            })
            .unwrap();
            let clock = VirtualClock::new();
            let mut expected = BTreeSet::new();
            mock_client(&healthy, &clock).enrich(&dois, 2, |w| {
                expected.insert(w.doi);
            });
            let flaky = MockServer::start(Duration::ZERO, |req, nth| {
                if req.path().ends_with("/b") && nth < 5 {
                    MockReply::status(500)
                } else {
                    MockReply::json(work_body(req.path()))
                }
            })
            .unwrap();
            let clock = VirtualClock::new();
            let client = mock_client(&flaky, &clock);
            let mut got = BTreeSet::new();
            let first = client.enrich(&dois, 2, |w| {
                got.insert(w.doi);
            });
            assert_eq!(first.failed.len(), 1);
            let mut buf = Vec::new();
            write_queue(&mut buf, &first.failed).unwrap();
            let queued: Vec<NormalizedDoi> = read_queue(buf.as_slice())
                .unwrap()
                .into_iter()
                .map(|e| ndoi(&e.doi))
                .collect();
            let second = client.enrich(&queued, 2, |w| {
                got.insert(w.doi);
            });
            assert!(second.failed.is_empty());
            assert_eq!(got, expected);
        },
    );
}

fn tree(root: &Path, sub: &str) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(root.join(sub)).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            out.insert(
                format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()),
                std::fs::read(&p).unwrap(),
            );
        }
    }
    out
}

#[test]
fn criterion_8_determinism() {
    criterion(8, "two pipeline runs are byte-identical", None, || {
        let runs: Vec<tempfile::TempDir> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                stage_fixtures(dir.path());
                run_pipeline(dir.path());
                dir
            })
            .collect();
        for sub in [
            "partition",
            "classifications",
            "reports",
            "rejects",
            "snapshots",
            "snapshots/crossref",
        ] {
            let a = tree(runs[0].path(), sub);
            let b = tree(runs[1].path(), sub);
            assert!(!a.is_empty(), "{sub} is empty");
            assert_eq!(
                a.keys().collect::<Vec<_>>(),
                b.keys().collect::<Vec<_>>(),
                "{sub}"
            );
            for (name, bytes) in &a {
                assert!(bytes == &b[name], "{name} differs between runs");
            }
        }
    });
}

#[test]
#[ignore = "queries the live Crossref API"]
fn criterion_9_live_smoke() {
    criterion(9, "live 2019 funder coverage shares", None, || {
        let client = CrossrefClient::new(
            UreqTransport::default(),
            SystemClock,
            RetryPolicy::default(),
        )
        .with_contact_from_env();
        let from = "2019-01".parse().unwrap();
        let until = "2019-12".parse().unwrap();
        let count = |t: &str, funder: Option<bool>| match client
            .count_works(t, from, until, funder)
            .unwrap()
            .outcome
        {
            FetchOutcome::Found(n) => n,
            other => panic!("{t}: {other:?}"),
        };
        for (t, lo, hi) in [
            ("journal-article", 15.0, 35.0),
            ("proceedings-article", 0.5, 8.0),
        ] {
            let total = count(t, None);
            let funded = count(t, Some(true));
            assert!(total > 0, "{t}: no works");
            let share = funded as f64 / total as f64 * 100.0;
            let _ = writeln!(
                std::io::stdout().lock(),
                "criterion 9: {t} {funded}/{total} = {share:.1}%"
            );
            assert!(
                (lo..=hi).contains(&share),
                "{t}: {share:.1}% outside [{lo}, {hi}]"
            );
        }
    });
}
