//! Plain-text key and DOI lists: one entry per line.

use std::collections::{BTreeSet, HashSet};
use std::io::{self, BufRead, Write};

use crate::model::{ModelError, NormalizedDoi, PairKey};

#[derive(Debug, thiserror::Error)]
pub enum KeyFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
}

pub fn write_keys<'a, W: Write>(
    mut w: W,
    keys: impl IntoIterator<Item = &'a PairKey>,
) -> io::Result<()> {
    for k in keys {
        writeln!(w, "{k}")?;
    }
    w.flush()
}

pub fn read_keys<R: BufRead>(r: R) -> Result<BTreeSet<PairKey>, KeyFileError> {
    let mut keys = BTreeSet::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let key = PairKey::parse(line).map_err(|source| KeyFileError::Invalid {
            line: i + 1,
            source,
        })?;
        keys.insert(key);
    }
    Ok(keys)
}

/// Keys in file order, duplicates kept (sample files are ordered).
pub fn read_key_list<R: BufRead>(r: R) -> Result<Vec<PairKey>, KeyFileError> {
    let mut keys = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        keys.push(
            PairKey::parse(line).map_err(|source| KeyFileError::Invalid {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(keys)
}

pub fn read_dois<R: BufRead>(r: R) -> Result<HashSet<NormalizedDoi>, KeyFileError> {
    let mut dois = HashSet::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let doi = NormalizedDoi::from_normalized(line).map_err(|source| KeyFileError::Invalid {
            line: i + 1,
            source,
        })?;
        dois.insert(doi);
    }
    Ok(dois)
}
