use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use fundlink_core::ingest::CrossrefWork;
use fundlink_core::{NormalizedDoi, PairKey};

use crate::client::{CrossrefClient, Fetch, FetchOutcome};
use crate::clock::Clock;
use crate::queue::QueueEntry;
use crate::transport::Transport;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 2;

/// Distinct DOIs of `keys` absent from the local index, sorted.
/// Key DOI parts that are not in normalized form are skipped with a warning.
pub fn dois_to_fetch(
    keys: &BTreeSet<PairKey>,
    local_index: &HashSet<NormalizedDoi>,
) -> Vec<NormalizedDoi> {
    let mut out = BTreeSet::new();
    for key in keys {
        match NormalizedDoi::from_normalized(key.doi_part()) {
            Ok(d) if !local_index.contains(&d) => {
                out.insert(d);
            }
            Ok(_) => {}
            Err(_) => log::warn!("skipping key with unusable DOI part: {key}"),
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnrichReport {
    pub requested: usize,
    pub fetched: usize,
    pub not_found: Vec<NormalizedDoi>,
    pub failed: Vec<QueueEntry>,
    pub requests: u64,
}

impl<T: Transport, C: Clock> CrossrefClient<T, C> {
    /// Fetches every DOI once with at most `max_in_flight` concurrent
    /// requests. Works reach `sink` in input order on the calling thread.
    /// Failures end up in the report's `failed` list, ready for a queue file.
    pub fn enrich<F>(
        &self,
        dois: &[NormalizedDoi],
        max_in_flight: usize,
        mut sink: F,
    ) -> EnrichReport
    where
        F: FnMut(CrossrefWork),
    {
        let mut seen = HashSet::new();
        let dois: Vec<&NormalizedDoi> = dois.iter().filter(|d| seen.insert(*d)).collect();
        let mut report = EnrichReport {
            requested: dois.len(),
            ..EnrichReport::default()
        };
        if dois.is_empty() {
            return report;
        }
        let workers = max_in_flight.max(1).min(dois.len());
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, Fetch<CrossrefWork>)>();

        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                let dois = &dois;
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(doi) = dois.get(i) else { break };
                    if tx.send((i, self.get_work(doi))).is_err() {
                        break;
                    }
                });
            }
            drop(tx);

            let mut pending = BTreeMap::new();
            let mut emit_from = 0;
            for (i, fetch) in rx {
                pending.insert(i, fetch);
                while let Some(fetch) = pending.remove(&emit_from) {
                    let doi = dois[emit_from];
                    emit_from += 1;
                    report.requests += fetch.log.len() as u64;
                    match fetch.outcome {
                        FetchOutcome::Found(work) => {
                            report.fetched += 1;
                            sink(work);
                        }
                        FetchOutcome::NotFound => report.not_found.push(doi.clone()),
                        FetchOutcome::Failed {
                            attempts,
                            last_error,
                            last_status,
                        } => report.failed.push(QueueEntry {
                            doi: doi.to_string(),
                            attempts,
                            last_error,
                            last_status,
                        }),
                    }
                }
            }
        });
        report
    }
}
