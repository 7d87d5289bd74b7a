//! Crossref public-data-file reader.
//!
//! A dump is a file or a directory of files. Each file is either a
//! gzip-compressed `{"items": [...]}` document or line-delimited work
//! records (optionally gzipped); the kind is sniffed from the first bytes.
//! Records are handed to the caller one at a time, so memory stays at one
//! record plus the decoder buffers regardless of file size.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Cursor, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::de::{DeserializeSeed, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use walkdir::WalkDir;

use super::{IngestCounts, IngestError};
use crate::doi::DoiNormalizer;
use crate::exec::Exec;
use crate::funder::{extract_links, AwardMode, RuleSet};
use crate::model::{NormalizedDoi, PairKey, Reject, RejectReason};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunderAssertion {
    pub funder_doi: Option<String>,
    pub name: Option<String>,
    pub awards: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossrefWork {
    pub doi: NormalizedDoi,
    pub work_type: Option<String>,
    pub issued_year: Option<i32>,
    pub funders: Vec<FunderAssertion>,
}

impl CrossrefWork {
    /// The work in Crossref's own field names, readable by [`read_crossref_works`].
    pub fn to_crossref_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("DOI".into(), self.doi.as_str().into());
        if let Some(t) = &self.work_type {
            obj.insert("type".into(), t.as_str().into());
        }
        if let Some(y) = self.issued_year {
            obj.insert("issued".into(), serde_json::json!({ "date-parts": [[y]] }));
        }
        if !self.funders.is_empty() {
            let funders: Vec<_> = self
                .funders
                .iter()
                .map(|f| {
                    let mut m = serde_json::Map::new();
                    if let Some(d) = &f.funder_doi {
                        m.insert("DOI".into(), d.as_str().into());
                    }
                    if let Some(n) = &f.name {
                        m.insert("name".into(), n.as_str().into());
                    }
                    m.insert("award".into(), f.awards.clone().into());
                    serde_json::Value::Object(m)
                })
                .collect();
            obj.insert("funder".into(), funders.into());
        }
        serde_json::Value::Object(obj)
    }
}

#[derive(Deserialize)]
struct RawDate {
    #[serde(rename = "date-parts", default)]
    date_parts: Vec<Vec<Option<serde_json::Value>>>,
}

impl RawDate {
    fn year(&self) -> Option<i32> {
        let v = self.date_parts.first()?.first()?.as_ref()?;
        match v {
            serde_json::Value::Number(n) => n.as_i64().and_then(|y| i32::try_from(y).ok()),
            serde_json::Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
struct RawFunder {
    #[serde(rename = "DOI")]
    doi: Option<String>,
    name: Option<String>,
    #[serde(default)]
    award: Vec<String>,
}

#[derive(Deserialize)]
struct RawWork {
    #[serde(rename = "DOI")]
    doi: Option<String>,
    #[serde(rename = "type")]
    work_type: Option<String>,
    issued: Option<RawDate>,
    #[serde(rename = "published-print")]
    published_print: Option<RawDate>,
    #[serde(rename = "published-online")]
    published_online: Option<RawDate>,
    #[serde(default)]
    funder: Vec<RawFunder>,
}

/// Result of converting one work record.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkOutcome {
    Work(CrossrefWork),
    NoDoi,
    Rejected(Reject),
}

fn convert(
    raw: RawWork,
    raw_text: impl FnOnce() -> String,
    normalizer: &DoiNormalizer,
) -> WorkOutcome {
    let Some(doi_text) = raw.doi.filter(|d| !d.trim().is_empty()) else {
        return WorkOutcome::NoDoi;
    };
    let doi = match normalizer.normalize(&doi_text) {
        Ok(d) => d,
        Err(_) => {
            return WorkOutcome::Rejected(Reject::new(RejectReason::MalformedDoi, raw_text()))
        }
    };
    let issued_year = [&raw.issued, &raw.published_print, &raw.published_online]
        .into_iter()
        .flatten()
        .find_map(RawDate::year);
    let funders = raw
        .funder
        .into_iter()
        .filter(|f| f.doi.is_some() || f.name.is_some())
        .map(|f| FunderAssertion {
            funder_doi: f.doi,
            name: f.name,
            awards: f.award,
        })
        .collect();
    WorkOutcome::Work(CrossrefWork {
        doi,
        work_type: raw.work_type,
        issued_year,
        funders,
    })
}

/// Converts a work given as a JSON value (dump element or API `message`).
pub fn work_from_value(value: serde_json::Value, normalizer: &DoiNormalizer) -> WorkOutcome {
    let text = || value.to_string();
    match RawWork::deserialize(&value) {
        Ok(raw) => convert(raw, text, normalizer),
        Err(_) => WorkOutcome::Rejected(Reject::new(RejectReason::ParseError, text())),
    }
}

fn work_from_line(line: &[u8], normalizer: &DoiNormalizer) -> WorkOutcome {
    let text = || String::from_utf8_lossy(line).into_owned();
    match serde_json::from_slice::<RawWork>(line) {
        Ok(raw) => convert(raw, text, normalizer),
        Err(_) => WorkOutcome::Rejected(Reject::new(RejectReason::ParseError, text())),
    }
}

/// Items passed to the sink of [`read_crossref_works`].
#[derive(Debug, Clone, PartialEq)]
pub enum WorkEvent {
    Work(CrossrefWork),
    Rejected(Reject),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileError {
    pub path: PathBuf,
    pub error: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.error)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrossrefScan {
    pub files: u64,
    pub counts: IngestCounts,
    pub file_errors: Vec<FileError>,
}

fn dump_files(path: &Path) -> Result<Vec<PathBuf>, IngestError> {
    if !path.exists() {
        return Err(IngestError::NotFound(path.to_path_buf()));
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(io::Error::from)?;
        let name = entry.file_name().to_string_lossy();
        if entry.file_type().is_file() && !name.starts_with('.') {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

/// Streams every work in a file or directory to `sink`.
///
/// A corrupt file is recorded in [`CrossrefScan::file_errors`] and the scan
/// moves on to the next file; records read before the failure still count.
pub fn read_crossref_works<F>(
    path: &Path,
    normalizer: &DoiNormalizer,
    mut sink: F,
) -> Result<CrossrefScan, IngestError>
where
    F: FnMut(WorkEvent),
{
    let mut scan = CrossrefScan::default();
    for file in dump_files(path)? {
        scan.files += 1;
        if let Err(e) = read_one_file(&file, normalizer, &mut scan.counts, &mut sink) {
            log::warn!("crossref dump file {} failed: {e}", file.display());
            scan.file_errors.push(FileError {
                path: file,
                error: e.to_string(),
            });
        }
    }
    Ok(scan)
}

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

fn peek<R: Read>(mut reader: R, n: usize) -> io::Result<(Vec<u8>, R)> {
    let mut prefix = vec![0u8; n];
    let mut filled = 0;
    while filled < n {
        match reader.read(&mut prefix[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    prefix.truncate(filled);
    Ok((prefix, reader))
}

fn is_items_document(prefix: &[u8]) -> bool {
    let mut rest = prefix.trim_ascii_start();
    if rest.starts_with(&[0xef, 0xbb, 0xbf]) {
        rest = rest[3..].trim_ascii_start();
    }
    match rest.strip_prefix(b"{") {
        Some(after) => after.trim_ascii_start().starts_with(b"\"items\""),
        None => false,
    }
}

fn read_one_file<F: FnMut(WorkEvent)>(
    path: &Path,
    normalizer: &DoiNormalizer,
    counts: &mut IngestCounts,
    sink: &mut F,
) -> io::Result<()> {
    let file = BufReader::with_capacity(1 << 16, File::open(path)?);
    let (magic, file) = peek(file, 2)?;
    let body: Box<dyn Read> = if magic == GZIP_MAGIC {
        Box::new(MultiGzDecoder::new(Cursor::new(magic).chain(file)))
    } else {
        Box::new(Cursor::new(magic).chain(file))
    };
    let (prefix, body) = peek(body, 256)?;
    let reader = BufReader::with_capacity(1 << 16, Cursor::new(prefix.clone()).chain(body));
    let mut emit = |outcome: WorkOutcome| match outcome {
        WorkOutcome::Work(w) => {
            counts.record();
            sink(WorkEvent::Work(w));
        }
        WorkOutcome::NoDoi => counts.skip_no_doi(),
        WorkOutcome::Rejected(r) => {
            counts.reject();
            sink(WorkEvent::Rejected(r));
        }
    };
    if is_items_document(&prefix) {
        let mut de = serde_json::Deserializer::from_reader(reader);
        DocumentSeed {
            on_item: &mut |v: serde_json::Value| emit(work_from_value(v, normalizer)),
        }
        .deserialize(&mut de)
        .map_err(io::Error::other)?;
        Ok(())
    } else {
        read_lines(reader, |line| emit(work_from_line(line, normalizer)))
    }
}

fn read_lines<R: BufRead>(mut reader: R, mut on_line: impl FnMut(&[u8])) -> io::Result<()> {
    let mut buf = Vec::with_capacity(4096);
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = buf.trim_ascii();
        if !line.is_empty() {
            on_line(line);
        }
    }
}

/// Top-level object: visits `items` element by element, skips other keys.
struct DocumentSeed<'a> {
    on_item: &'a mut dyn FnMut(serde_json::Value),
}

impl<'de> DeserializeSeed<'de> for DocumentSeed<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for DocumentSeed<'_> {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an object with an `items` array")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<(), A::Error> {
        while let Some(key) = map.next_key::<String>()? {
            if key == "items" {
                map.next_value_seed(ItemsSeed {
                    on_item: &mut *self.on_item,
                })?;
            } else {
                map.next_value::<IgnoredAny>()?;
            }
        }
        Ok(())
    }
}

struct ItemsSeed<'a> {
    on_item: &'a mut dyn FnMut(serde_json::Value),
}

impl<'de> DeserializeSeed<'de> for ItemsSeed<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for ItemsSeed<'_> {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an array of work records")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<(), A::Error> {
        while let Some(v) = seq.next_element::<serde_json::Value>()? {
            (self.on_item)(v);
        }
        Ok(())
    }
}

/// Strict and relaxed `<grant, doi>` key sets extracted from a dump.
#[derive(Debug, Clone, Default)]
pub struct CrossrefIndex {
    pub strict: BTreeSet<PairKey>,
    pub relaxed: BTreeSet<PairKey>,
    pub scan: CrossrefScan,
    pub rejects: Vec<Reject>,
}

/// Scans a dump and extracts link keys under both rule levels.
///
/// Works are buffered in batches of `batch_size` and the extraction of a
/// batch runs through `exec`; `on_doi` sees every work DOI in input order.
pub fn extract_link_index(
    path: &Path,
    normalizer: &DoiNormalizer,
    award_mode: AwardMode,
    keyword_case_sensitive: bool,
    exec: Exec,
    batch_size: usize,
    mut on_doi: impl FnMut(&NormalizedDoi),
) -> Result<CrossrefIndex, IngestError> {
    let strict_rules = RuleSet::strict().with_keyword_case_sensitive(keyword_case_sensitive);
    let relaxed_rules = RuleSet::relaxed().with_keyword_case_sensitive(keyword_case_sensitive);
    let batch_size = batch_size.max(1);
    let mut index = CrossrefIndex::default();
    let mut batch: Vec<CrossrefWork> = Vec::with_capacity(batch_size);

    let flush = |batch: &mut Vec<CrossrefWork>, index: &mut CrossrefIndex| {
        let extracted = exec.map(batch, |w| {
            let strict: Vec<PairKey> = extract_links(w, &strict_rules, award_mode)
                .iter()
                .map(|l| l.pair_key())
                .collect();
            let relaxed: Vec<PairKey> = extract_links(w, &relaxed_rules, award_mode)
                .iter()
                .map(|l| l.pair_key())
                .collect();
            (strict, relaxed)
        });
        for (strict, relaxed) in extracted {
            index.strict.extend(strict);
            index.relaxed.extend(relaxed);
        }
        batch.clear();
    };

    let mut rejects = Vec::new();
    let scan = read_crossref_works(path, normalizer, |event| match event {
        WorkEvent::Work(w) => {
            on_doi(&w.doi);
            if !w.funders.is_empty() {
                batch.push(w);
                if batch.len() >= batch_size {
                    flush(&mut batch, &mut index);
                }
            }
        }
        WorkEvent::Rejected(r) => rejects.push(r),
    })?;
    flush(&mut batch, &mut index);
    index.scan = scan;
    index.rejects = rejects;
    Ok(index)
}
