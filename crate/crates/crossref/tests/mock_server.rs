use std::collections::BTreeSet;
use std::time::Duration;

use fundlink_core::NormalizedDoi;
use fundlink_crossref::mock::{MockReply, MockServer};
use fundlink_crossref::{
    read_queue, write_queue, CrossrefClient, FetchOutcome, RetryPolicy, UreqTransport, VirtualClock,
};

fn doi(s: &str) -> NormalizedDoi {
    NormalizedDoi::from_normalized(s).unwrap()
}

fn work_body(path: &str) -> String {
    let d = path.trim_start_matches("/works/");
    format!(
        r#"{{"status":"ok","message":{{"DOI":"{d}","type":"journal-article","funder":[{{"name":"European Commission","award":["101000001"]}}]}}}}"#
    )
}

fn policy() -> RetryPolicy {
    RetryPolicy {
        jitter_fraction: 0.0,
        ..RetryPolicy::default()
    }
}

fn client<'c>(
    server: &MockServer,
    clock: &'c VirtualClock,
) -> CrossrefClient<UreqTransport, &'c VirtualClock> {
    CrossrefClient::new(UreqTransport::new(Duration::from_secs(5)), clock, policy())
        .with_base_url(&server.url())
        .with_contact(Some("audit@example.org".into()))
}

#[test]
fn not_found_single_attempt() {
    let server = MockServer::start(Duration::ZERO, |_, _| MockReply::status(404)).unwrap();
    let clock = VirtualClock::new();
    let f = client(&server, &clock).get_work(&doi("10.1234/missing"));
    assert_eq!(f.outcome, FetchOutcome::NotFound);
    assert_eq!(f.attempts(), 1);
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn two_unavailable_then_ok() {
    let server = MockServer::start(Duration::ZERO, |req, nth| {
        if nth < 2 {
            MockReply::status(503)
        } else {
            MockReply::json(work_body(req.path()))
        }
    })
    .unwrap();
    let clock = VirtualClock::new();
    let f = client(&server, &clock).get_work(&doi("10.1234/x"));
    assert!(matches!(f.outcome, FetchOutcome::Found(ref w) if w.doi == doi("10.1234/x")));
    assert_eq!(f.attempts(), 3);
    assert_eq!(
        clock.sleeps(),
        vec![Duration::from_secs(1), Duration::from_secs(2)]
    );
    for req in server.requests() {
        assert!(req.target.contains("mailto=audit@example.org"));
        assert!(req
            .header("user-agent")
            .unwrap()
            .contains("mailto:audit@example.org"));
    }
}

#[test]
fn persistent_failure_exhausts_attempts() {
    let server = MockServer::start(Duration::ZERO, |_, _| MockReply::Drop).unwrap();
    let clock = VirtualClock::new();
    let f = client(&server, &clock).get_work(&doi("10.1234/x"));
    let FetchOutcome::Failed { attempts, .. } = f.outcome else {
        panic!("{:?}", f.outcome)
    };
    assert_eq!(attempts, 5);
    assert_eq!(server.hits("/works/10.1234/x"), 5);
    let sleeps = clock.sleeps();
    assert!(sleeps.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn count_passthrough() {
    let server = MockServer::start(Duration::ZERO, |_, _| {
        MockReply::json(r#"{"status":"ok","message":{"total-results":42,"items":[]}}"#)
    })
    .unwrap();
    let clock = VirtualClock::new();
    let c = client(&server, &clock);
    let f = c
        .count_works(
            "proceedings-article",
            "2019-01".parse().unwrap(),
            "2019-12".parse().unwrap(),
            Some(true),
        )
        .unwrap();
    assert_eq!(f.outcome, FetchOutcome::Found(42));
    let req = &server.requests()[0];
    assert!(req.target.starts_with(
        "/types/proceedings-article/works?rows=0&filter=from-pub-date:2019-01,until-pub-date:2019-12,has-funder:true"
    ));
}

#[test]
fn in_flight_bound() {
    let dois: Vec<NormalizedDoi> = (0..16).map(|i| doi(&format!("10.1234/w{i}"))).collect();
    for bound in [1, 2, 4] {
        let server = MockServer::start(Duration::from_millis(25), |req, _| {
            MockReply::json(work_body(req.path()))
        })
        .unwrap();
        let clock = VirtualClock::new();
        let mut n = 0;
        let report = client(&server, &clock).enrich(&dois, bound, |_| n += 1);
        assert_eq!(n, 16);
        assert!(report.failed.is_empty());
        assert!(
            server.max_in_flight() <= bound,
            "bound {bound}: saw {}",
            server.max_in_flight()
        );
        if bound > 1 {
            assert!(server.max_in_flight() > 1, "requests never overlapped");
        }
    }
}

#[test]
fn queue_rerun_converges() {
    let dois = vec![doi("10.1234/a"), doi("10.1234/b"), doi("10.1234/c")];

    let healthy = MockServer::start(Duration::ZERO, |req, _| {
        MockReply::json(work_body(req.path()))
    })
    .unwrap();
    let clock = VirtualClock::new();
    let mut expected = BTreeSet::new();
    client(&healthy, &clock).enrich(&dois, 2, |w| {
        expected.insert(w.doi);
    });

    // b fails for its first five requests, i.e. for the whole first run
    let flaky = MockServer::start(Duration::ZERO, |req, nth| {
        if req.path().ends_with("/b") && nth < 5 {
            MockReply::status(503)
        } else {
            MockReply::json(work_body(req.path()))
        }
    })
    .unwrap();
    let clock = VirtualClock::new();
    let c = client(&flaky, &clock);
    let mut got = BTreeSet::new();
    let first = c.enrich(&dois, 2, |w| {
        got.insert(w.doi);
    });
    assert_eq!(got.len(), 2);
    assert_eq!(first.failed.len(), 1);
    assert_eq!(first.failed[0].last_status, Some(503));

    let dir = tempfile::tempdir().unwrap();
    let qpath = dir.path().join("enrich.queue.jsonl");
    write_queue(std::fs::File::create(&qpath).unwrap(), &first.failed).unwrap();
    let queued: Vec<NormalizedDoi> = read_queue(std::io::BufReader::new(
        std::fs::File::open(&qpath).unwrap(),
    ))
    .unwrap()
    .into_iter()
    .map(|e| doi(&e.doi))
    .collect();
    assert_eq!(queued, vec![doi("10.1234/b")]);

    let before_a = flaky.hits("/works/10.1234/a");
    let second = c.enrich(&queued, 2, |w| {
        got.insert(w.doi);
    });
    assert!(second.failed.is_empty());
    assert_eq!(
        flaky.hits("/works/10.1234/a"),
        before_a,
        "re-run touched a non-queued DOI"
    );
    assert_eq!(got, expected);
}
