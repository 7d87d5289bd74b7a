use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use fundlink_core::ingest::{work_from_value, CrossrefWork, WorkOutcome};
use fundlink_core::{DoiNormalizer, NormalizedDoi};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::policy::{Backoff, RetryPolicy};
use crate::transport::{Transport, TransportErrorKind};

pub const DEFAULT_BASE_URL: &str = "https://api.crossref.org";
pub const CONTACT_ENV: &str = "FUNDLINK_CONTACT";

const PATH: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~')
    .remove(b'/');
const QUERY: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~')
    .remove(b'@');

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, RangeError> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(RangeError::BadYearMonth(format!("{year}-{month}")));
        }
        Ok(YearMonth { year, month })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = RangeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RangeError::BadYearMonth(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = RangeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(v: YearMonth) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("expected YYYY-MM, got {0:?}")]
    BadYearMonth(String),
    #[error("from {from} is after until {until}")]
    Reversed { from: YearMonth, until: YearMonth },
}

/// One HTTP attempt as seen by the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub at_ms: u64,
    pub status: Option<u16>,
    pub error: Option<String>,
    pub delay_before_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FetchOutcome<T> {
    Found(T),
    NotFound,
    Failed {
        attempts: u32,
        last_error: String,
        last_status: Option<u16>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fetch<T> {
    pub outcome: FetchOutcome<T>,
    pub log: Vec<AttemptRecord>,
}

impl<T> Fetch<T> {
    pub fn attempts(&self) -> u32 {
        self.log.len() as u32
    }
}

enum Step<T> {
    Done(FetchOutcome<T>),
    Retry {
        error: String,
        status: Option<u16>,
        hint: Option<std::time::Duration>,
    },
    Fatal {
        error: String,
        status: Option<u16>,
    },
}

pub struct CrossrefClient<T, C> {
    base_url: String,
    contact: Option<String>,
    transport: T,
    clock: C,
    policy: RetryPolicy,
    normalizer: DoiNormalizer,
    seed: u64,
}

impl<T: Transport, C: Clock> CrossrefClient<T, C> {
    pub fn new(transport: T, clock: C, policy: RetryPolicy) -> Self {
        CrossrefClient {
            base_url: DEFAULT_BASE_URL.to_string(),
            contact: None,
            transport,
            clock,
            policy,
            normalizer: DoiNormalizer::default(),
            seed: 0,
        }
    }

    pub fn with_base_url(mut self, url: &str) -> Self {
        self.base_url = url.trim_end_matches('/').to_string();
        self
    }

    pub fn with_contact(mut self, contact: Option<String>) -> Self {
        self.contact = contact.filter(|c| !c.trim().is_empty());
        self
    }

    /// Reads the contact address from `FUNDLINK_CONTACT`, warning when unset.
    pub fn with_contact_from_env(self) -> Self {
        let contact = std::env::var(CONTACT_ENV)
            .ok()
            .filter(|c| !c.trim().is_empty());
        if contact.is_none() {
            log::warn!("{CONTACT_ENV} is not set; requests will not use the polite pool");
        }
        self.with_contact(contact)
    }

    pub fn with_normalizer(mut self, normalizer: DoiNormalizer) -> Self {
        self.normalizer = normalizer;
        self
    }

    /// Seed for backoff jitter. Each request derives its own stream from
    /// this seed and its URL.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    pub fn contact(&self) -> Option<&str> {
        self.contact.as_deref()
    }

    fn headers(&self) -> Vec<(&'static str, String)> {
        let agent = match &self.contact {
            Some(c) => format!("fundlink-audit/{} (mailto:{c})", env!("CARGO_PKG_VERSION")),
            None => format!("fundlink-audit/{}", env!("CARGO_PKG_VERSION")),
        };
        vec![
            ("User-Agent", agent),
            ("Accept", "application/json".to_string()),
        ]
    }

    fn with_mailto(&self, mut url: String) -> String {
        if let Some(c) = &self.contact {
            url.push(if url.contains('?') { '&' } else { '?' });
            url.push_str("mailto=");
            url.extend(utf8_percent_encode(c, QUERY));
        }
        url
    }

    pub fn work_url(&self, doi: &NormalizedDoi) -> String {
        let path: String = utf8_percent_encode(doi.as_str(), PATH).collect();
        self.with_mailto(format!("{}/works/{path}", self.base_url))
    }

    pub fn count_url(
        &self,
        work_type: &str,
        from: YearMonth,
        until: YearMonth,
        has_funder: Option<bool>,
    ) -> String {
        let work_type: String = utf8_percent_encode(work_type, PATH).collect();
        let mut filter = format!("from-pub-date:{from},until-pub-date:{until}");
        if let Some(h) = has_funder {
            filter.push_str(&format!(",has-funder:{h}"));
        }
        self.with_mailto(format!(
            "{}/types/{work_type}/works?rows=0&filter={filter}",
            self.base_url
        ))
    }

    fn run<R>(&self, url: &str, parse: impl Fn(&str) -> Result<R, String>) -> Fetch<R> {
        let headers = self.headers();
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        url.hash(&mut hasher);
        let mut backoff = Backoff::new(&self.policy, self.seed ^ hasher.finish());
        let mut log = Vec::new();
        let mut delay_before = 0;
        let max = self.policy.max_attempts.max(1);
        for attempt in 1..=max {
            let at_ms = self.clock.now_ms();
            let step = match self.transport.get(url, &headers) {
                Err(e) => Step::Retry {
                    error: match e.kind {
                        TransportErrorKind::Timeout => "timeout".to_string(),
                        _ => e.to_string(),
                    },
                    status: None,
                    hint: None,
                },
                Ok(resp) => match resp.status {
                    200..=299 => match parse(&resp.body) {
                        Ok(v) => Step::Done(FetchOutcome::Found(v)),
                        Err(e) => Step::Retry {
                            error: format!("malformed body: {e}"),
                            status: Some(resp.status),
                            hint: None,
                        },
                    },
                    404 => Step::Done(FetchOutcome::NotFound),
                    429 | 500..=599 => Step::Retry {
                        error: format!("http {}", resp.status),
                        status: Some(resp.status),
                        hint: resp.retry_after,
                    },
                    s => Step::Fatal {
                        error: format!("http {s}"),
                        status: Some(s),
                    },
                },
            };
            let (status, error) = match &step {
                Step::Done(FetchOutcome::NotFound) => (Some(404), None),
                Step::Done(_) => (Some(200), None),
                Step::Retry { error, status, .. } | Step::Fatal { error, status } => {
                    (*status, Some(error.clone()))
                }
            };
            log.push(AttemptRecord {
                attempt,
                at_ms,
                status,
                error,
                delay_before_ms: delay_before,
            });
            match step {
                Step::Done(outcome) => return Fetch { outcome, log },
                Step::Fatal { error, status } => {
                    return Fetch {
                        outcome: FetchOutcome::Failed {
                            attempts: attempt,
                            last_error: error,
                            last_status: status,
                        },
                        log,
                    }
                }
                Step::Retry {
                    error,
                    status,
                    hint,
                } => {
                    if attempt == max {
                        return Fetch {
                            outcome: FetchOutcome::Failed {
                                attempts: attempt,
                                last_error: error,
                                last_status: status,
                            },
                            log,
                        };
                    }
                    let d = backoff.next_delay(hint);
                    log::debug!("{url}: attempt {attempt} failed ({error}); retrying in {d:?}");
                    self.clock.sleep(d);
                    delay_before = d.as_millis() as u64;
                }
            }
        }
        unreachable!("max_attempts is at least one")
    }

    pub fn get_work(&self, doi: &NormalizedDoi) -> Fetch<CrossrefWork> {
        let url = self.work_url(doi);
        self.run(&url, |body| {
            let mut v: serde_json::Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
            let message = v
                .get_mut("message")
                .map(serde_json::Value::take)
                .ok_or("no message")?;
            match work_from_value(message, &self.normalizer) {
                WorkOutcome::Work(w) => Ok(w),
                WorkOutcome::NoDoi => Err("work without DOI".to_string()),
                WorkOutcome::Rejected(r) => Err(format!("{:?}", r.reason)),
            }
        })
    }

    pub fn count_works(
        &self,
        work_type: &str,
        from: YearMonth,
        until: YearMonth,
        has_funder: Option<bool>,
    ) -> Result<Fetch<u64>, RangeError> {
        if from > until {
            return Err(RangeError::Reversed { from, until });
        }
        let url = self.count_url(work_type, from, until, has_funder);
        Ok(self.run(&url, |body| {
            let v: serde_json::Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
            v.pointer("/message/total-results")
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| "no message.total-results".to_string())
        }))
    }
}
