//! Streaming parsers for the input families.
//!
//! Every parser yields [`Parsed`] items: a domain record or a [`Reject`]
//! with a machine-readable reason. Bad rows never abort a run; only
//! unreadable streams, missing headers and the fatal conditions named on
//! each reader do. Each reader keeps [`IngestCounts`] so that
//! `rows_in == records_out + rejects + skipped_no_doi` can be asserted.

mod crossref;
mod openaire;
mod registry;
mod snapshot_io;
mod sygma;

use std::io::{self, Write};
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doi::NormalizationMode;
use crate::model::{DatasetSnapshot, FundingLink, Reject};

pub use crossref::{
    extract_link_index, read_crossref_works, work_from_value, CrossrefIndex, CrossrefScan,
    CrossrefWork, FileError, FunderAssertion, WorkEvent, WorkOutcome,
};
pub use openaire::{read_openaire_links, OpenaireReader};
pub use registry::{
    read_annotations, read_project_registry, Annotation, AnnotationLabel, AnnotationTable,
    ProjectTable, ANNOTATION_HEADER, PROJECT_HEADER,
};
pub use snapshot_io::{read_snapshot, write_snapshot, SnapshotHeader, SNAPSHOT_FORMAT};
pub use sygma::{read_sygma_links, SygmaReader, SYGMA_HEADER};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing or unexpected header: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("duplicate grant number {0} in project registry")]
    DuplicateProject(String),
    #[error("unparseable date {value:?} in project registry row {raw:?}")]
    RegistryDate { value: String, raw: String },
    #[error("conflicting annotation labels for {key}: {first} vs {second}")]
    ConflictingAnnotation {
        key: String,
        first: AnnotationLabel,
        second: AnnotationLabel,
    },
    #[error("reject rate {rate:.4} exceeds --max-reject-rate {limit}")]
    RejectRateExceeded { rate: f64, limit: f64 },
    #[error("snapshot file: {0}")]
    SnapshotFormat(String),
    #[error("input path not found: {}", .0.display())]
    NotFound(PathBuf),
}

/// One parsed item: a record or a reject.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed<T> {
    Record(T),
    Rejected(Reject),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub rows_in: u64,
    pub records_out: u64,
    pub rejects: u64,
    pub skipped_no_doi: u64,
}

impl IngestCounts {
    pub fn is_conserved(&self) -> bool {
        self.rows_in == self.records_out + self.rejects + self.skipped_no_doi
    }

    pub fn reject_rate(&self) -> f64 {
        if self.rows_in == 0 {
            0.0
        } else {
            self.rejects as f64 / self.rows_in as f64
        }
    }

    /// Fails when `limit` is set and the reject share is above it.
    pub fn check_reject_rate(&self, limit: Option<f64>) -> Result<(), IngestError> {
        match limit {
            Some(limit) if self.reject_rate() > limit => Err(IngestError::RejectRateExceeded {
                rate: self.reject_rate(),
                limit,
            }),
            _ => Ok(()),
        }
    }

    pub(crate) fn record(&mut self) {
        self.rows_in += 1;
        self.records_out += 1;
    }

    pub(crate) fn reject(&mut self) {
        self.rows_in += 1;
        self.rejects += 1;
    }

    pub(crate) fn skip_no_doi(&mut self) {
        self.rows_in += 1;
        self.skipped_no_doi += 1;
    }
}

/// Readers that expose their running counts.
pub trait CountingReader {
    fn counts(&self) -> IngestCounts;
}

/// Folds a link stream into a keyed snapshot, collecting rejects.
pub fn build_snapshot<I>(
    links: I,
    label: &str,
    snapshot_date: NaiveDate,
    mode: NormalizationMode,
) -> Result<DatasetSnapshot, IngestError>
where
    I: IntoIterator<Item = Result<Parsed<FundingLink>, IngestError>>,
{
    let mut snapshot = DatasetSnapshot::new(label, snapshot_date, mode);
    for item in links {
        match item? {
            Parsed::Record(link) => snapshot.insert(link),
            Parsed::Rejected(r) => snapshot.rejects.push(r),
        }
    }
    Ok(snapshot)
}

/// Line-delimited `{reason, raw}` records.
pub fn write_rejects<W: Write>(mut w: W, rejects: &[Reject]) -> io::Result<()> {
    for r in rejects {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub(crate) fn parse_optional_date(field: &str) -> Result<Option<NaiveDate>, ()> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map(Some)
        .map_err(|_| ())
}

pub(crate) fn csv_raw(record: &csv::StringRecord) -> String {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(record).expect("in-memory csv write");
    let mut bytes = w.into_inner().expect("in-memory csv flush");
    if bytes.last() == Some(&b'\n') {
        bytes.pop();
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

pub(crate) fn check_header(
    reader: &mut csv::Reader<impl io::Read>,
    expected: &[&str],
) -> Result<(), IngestError> {
    let found = reader.headers()?.clone();
    let matches =
        found.len() == expected.len() && found.iter().zip(expected).all(|(f, e)| f.trim() == *e);
    if !matches {
        return Err(IngestError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}
