//! A polite, retrying client for the Crossref works API.
//!
//! Used to backfill metadata for DOIs missing from a local dump and to run
//! funder-coverage count queries. HTTP goes through the [`Transport`] trait
//! and all waiting through the [`Clock`] trait, so retry schedules can be
//! tested against scripted responses without real sleeps.

mod client;
mod clock;
mod enrich;
#[cfg(feature = "mock-server")]
pub mod mock;
mod policy;
mod queue;
mod transport;

pub use client::{
    AttemptRecord, CrossrefClient, Fetch, FetchOutcome, RangeError, YearMonth, CONTACT_ENV,
    DEFAULT_BASE_URL,
};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use enrich::{dois_to_fetch, EnrichReport, DEFAULT_MAX_IN_FLIGHT};
pub use policy::{Backoff, PolicyError, RetryPolicy};
pub use queue::{read_queue, write_queue, QueueEntry};
pub use transport::{HttpResponse, Transport, TransportError, TransportErrorKind, UreqTransport};
