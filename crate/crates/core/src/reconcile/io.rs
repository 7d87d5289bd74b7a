//! Partition key files and classification CSVs.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::{LeftClassification, Partition, ReconcileError, RightClassification};
use crate::keyfile::{read_keys, write_keys};
use crate::model::PairKey;

pub const PARTITION_FILES: [&str; 3] = ["matched.keys", "left_only.keys", "right_only.keys"];
pub const CLASSIFICATION_HEADER: [&str; 4] = [
    "pair_key",
    "cause_or_status",
    "date_implausible",
    "evidence",
];

/// Writes the three sorted key files into `dir` through `write_file`, which
/// receives the file name and its bytes (so callers control atomicity).
pub fn write_partition(
    partition: &Partition,
    mut write_file: impl FnMut(&str, &[u8]) -> std::io::Result<()>,
) -> std::io::Result<()> {
    for (name, set) in PARTITION_FILES.iter().zip([
        &partition.matched,
        &partition.left_only,
        &partition.right_only,
    ]) {
        let mut buf = Vec::new();
        write_keys(&mut buf, set)?;
        write_file(name, &buf)?;
    }
    Ok(())
}

pub fn read_partition(
    dir: &Path,
    left_label: &str,
    right_label: &str,
) -> Result<Partition, ReconcileError> {
    let mut sets = Vec::with_capacity(3);
    for name in PARTITION_FILES {
        let path = dir.join(name);
        let file = File::open(&path)?;
        let keys = read_keys(BufReader::new(file)).map_err(|e| ReconcileError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        sets.push(keys);
    }
    let right_only = sets.pop().unwrap();
    let left_only = sets.pop().unwrap();
    let matched = sets.pop().unwrap();
    Ok(Partition {
        left_label: left_label.to_string(),
        right_label: right_label.to_string(),
        matched,
        left_only,
        right_only,
    })
}

pub fn write_left_classification<W: Write>(w: W, c: &LeftClassification) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CLASSIFICATION_HEADER)?;
    for (key, v) in &c.verdicts {
        out.write_record([
            key.as_str(),
            v.cause.as_str(),
            if v.date_implausible { "true" } else { "false" },
            v.evidence.as_str(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Right-only rows leave `date_implausible` empty: the graph feed carries no publication dates.
pub fn write_right_classification<W: Write>(w: W, c: &RightClassification) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CLASSIFICATION_HEADER)?;
    for (key, v) in &c.verdicts {
        out.write_record([key.as_str(), v.status.as_str(), "", v.evidence.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationRow {
    pub pair_key: PairKey,
    pub value: String,
    pub date_implausible: Option<bool>,
    pub evidence: String,
}

pub fn read_classification<R: Read>(
    r: R,
    origin: &str,
) -> Result<Vec<ClassificationRow>, ReconcileError> {
    let fail = |message: String| ReconcileError::Format {
        path: origin.to_string(),
        message,
    };
    let mut csv = csv::Reader::from_reader(r);
    let header = csv.headers().map_err(|e| fail(e.to_string()))?.clone();
    if header.iter().ne(CLASSIFICATION_HEADER) {
        return Err(fail(format!("unexpected header {:?}", header)));
    }
    let mut rows = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let pair_key = PairKey::parse(&rec[0]).map_err(|e| fail(e.to_string()))?;
        let date_implausible = match &rec[2] {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(fail(format!("bad date_implausible value {other:?}"))),
        };
        rows.push(ClassificationRow {
            pair_key,
            value: rec[1].to_string(),
            date_implausible,
            evidence: rec[3].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconcile::{LeftCause, LeftVerdict, RightStatus, RightVerdict};

    #[test]
    fn left_csv_round_trip() {
        let mut c = LeftClassification::default();
        c.verdicts.insert(
            PairKey::parse("1::10.1000/a,b").unwrap(),
            LeftVerdict {
                cause: LeftCause::MalformedDoi,
                date_implausible: true,
                evidence: "doi: 10.1000/a,b".into(),
            },
        );
        let mut buf = Vec::new();
        write_left_classification(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "pair_key,cause_or_status,date_implausible,evidence\n\"1::10.1000/a,b\",MALFORMED_DOI,true,\"doi: 10.1000/a,b\"\n"
        );
        let rows = read_classification(&buf[..], "mem").unwrap();
        assert_eq!(rows[0].value, "MALFORMED_DOI");
        assert_eq!(rows[0].date_implausible, Some(true));
    }

    #[test]
    fn right_csv_has_empty_date_column() {
        let mut c = RightClassification::default();
        c.verdicts.insert(
            PairKey::parse("1::10.1000/a").unwrap(),
            RightVerdict {
                status: RightStatus::DedupSuspect,
                evidence: "deduplicated record".into(),
            },
        );
        let mut buf = Vec::new();
        write_right_classification(&mut buf, &c).unwrap();
        let rows = read_classification(&buf[..], "mem").unwrap();
        assert_eq!(rows[0].date_implausible, None);
        assert_eq!(rows[0].value, "DEDUP_SUSPECT");
    }
}
