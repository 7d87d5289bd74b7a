use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

/// A DOI whose fetch failed; re-runs retry exactly these.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueueEntry {
    pub doi: String,
    pub attempts: u32,
    pub last_error: String,
    pub last_status: Option<u16>,
}

pub fn write_queue<W: Write>(mut w: W, entries: &[QueueEntry]) -> io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_queue<R: BufRead>(r: R) -> io::Result<Vec<QueueEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("queue line {}: {e}", i + 1),
            )
        })?;
        out.push(entry);
    }
    Ok(out)
}
