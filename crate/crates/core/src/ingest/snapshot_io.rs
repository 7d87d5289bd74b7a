//! Snapshot files: a JSON header line followed by one link per line, sorted by pair key.

use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::doi::NormalizationMode;
use crate::model::{DatasetSnapshot, FundingLink};

pub const SNAPSHOT_FORMAT: &str = "fundlink-snapshot/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub label: String,
    pub snapshot_date: NaiveDate,
    pub normalization_mode: NormalizationMode,
    pub links: u64,
    pub rejects: u64,
}

pub fn write_snapshot<W: Write>(mut w: W, snapshot: &DatasetSnapshot) -> std::io::Result<()> {
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.to_string(),
        label: snapshot.label.clone(),
        snapshot_date: snapshot.snapshot_date,
        normalization_mode: snapshot.mode,
        links: snapshot.links.len() as u64,
        rejects: snapshot.rejects.len() as u64,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for link in snapshot.links.values() {
        serde_json::to_writer(&mut w, link)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads a snapshot file back. The reject list is not stored in the file and comes back empty.
pub fn read_snapshot<R: BufRead>(r: R) -> Result<DatasetSnapshot, IngestError> {
    let bad = |msg: String| IngestError::SnapshotFormat(msg);
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let header: SnapshotHeader =
        serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(bad(format!("unsupported format {:?}", header.format)));
    }
    let mut snapshot = DatasetSnapshot::new(
        header.label.clone(),
        header.snapshot_date,
        header.normalization_mode,
    );
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let link: FundingLink =
            serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
        snapshot.insert(link);
    }
    if snapshot.links.len() as u64 != header.links {
        return Err(bad(format!(
            "header announces {} links, file holds {}",
            header.links,
            snapshot.links.len()
        )));
    }
    Ok(snapshot)
}
