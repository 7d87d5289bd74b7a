use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_header, csv_raw, parse_optional_date, IngestCounts, IngestError};
use crate::model::{PairKey, ProjectId, ProjectRef, Reject, RejectReason};

pub const PROJECT_HEADER: [&str; 4] = ["grant_number", "acronym", "start_date", "end_date"];
pub const ANNOTATION_HEADER: [&str; 4] = ["pair_key", "label", "evidence_source", "note"];

pub type ProjectTable = BTreeMap<ProjectId, ProjectRef>;
pub type AnnotationTable = BTreeMap<PairKey, Annotation>;

/// Reads the project registry. Duplicate grant numbers and unparseable
/// dates are fatal; a bad grant number or an end date before the start
/// date rejects the row.
pub fn read_project_registry<R: Read>(
    source: R,
) -> Result<(ProjectTable, Vec<Reject>, IngestCounts), IngestError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(&mut csv, &PROJECT_HEADER)?;
    let mut table = ProjectTable::new();
    let mut rejects = Vec::new();
    let mut counts = IngestCounts::default();
    for rec in csv.records() {
        let rec = rec?;
        let raw = csv_raw(&rec);
        if rec.len() != PROJECT_HEADER.len() {
            counts.reject();
            rejects.push(Reject::new(RejectReason::WrongColumnCount, raw));
            continue;
        }
        let Ok(grant) = ProjectId::new(rec[0].trim()) else {
            counts.reject();
            rejects.push(Reject::new(RejectReason::InvalidProjectId, raw));
            continue;
        };
        let date = |field: &str| {
            parse_optional_date(field).map_err(|_| IngestError::RegistryDate {
                value: field.to_string(),
                raw: raw.clone(),
            })
        };
        let start = date(&rec[2])?.ok_or_else(|| IngestError::RegistryDate {
            value: rec[2].to_string(),
            raw: raw.clone(),
        })?;
        let end = date(&rec[3])?;
        let acronym = Some(rec[1].trim().to_string()).filter(|a| !a.is_empty());
        let project = match ProjectRef::new(grant.clone(), acronym, start, end) {
            Ok(p) => p,
            Err(_) => {
                counts.reject();
                rejects.push(Reject::new(RejectReason::EndBeforeStart, raw));
                continue;
            }
        };
        if table.contains_key(&grant) {
            return Err(IngestError::DuplicateProject(grant.to_string()));
        }
        counts.record();
        table.insert(grant, project);
    }
    Ok((table, rejects, counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnnotationLabel {
    Confirmed,
    DataMistake,
    Unverified,
    DedupSuspect,
    ExternalMatch,
}

impl AnnotationLabel {
    pub const ALL: [AnnotationLabel; 5] = [
        AnnotationLabel::Confirmed,
        AnnotationLabel::DataMistake,
        AnnotationLabel::Unverified,
        AnnotationLabel::DedupSuspect,
        AnnotationLabel::ExternalMatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationLabel::Confirmed => "CONFIRMED",
            AnnotationLabel::DataMistake => "DATA_MISTAKE",
            AnnotationLabel::Unverified => "UNVERIFIED",
            AnnotationLabel::DedupSuspect => "DEDUP_SUSPECT",
            AnnotationLabel::ExternalMatch => "EXTERNAL_MATCH",
        }
    }
}

impl fmt::Display for AnnotationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnotationLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnnotationLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown annotation label {s:?}"))
    }
}

/// One manual-verification verdict from an annotation sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub pair_key: PairKey,
    pub label: AnnotationLabel,
    pub evidence_source: String,
    pub note: String,
}

/// Reads an annotation sheet keyed by pair key. Repeated keys with the same
/// label collapse to the first row; conflicting labels are fatal.
pub fn read_annotations<R: Read>(
    source: R,
) -> Result<(AnnotationTable, Vec<Reject>, IngestCounts), IngestError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(&mut csv, &ANNOTATION_HEADER)?;
    let mut table = AnnotationTable::new();
    let mut rejects = Vec::new();
    let mut counts = IngestCounts::default();
    for rec in csv.records() {
        let rec = rec?;
        let raw = csv_raw(&rec);
        if rec.len() != ANNOTATION_HEADER.len() {
            counts.reject();
            rejects.push(Reject::new(RejectReason::WrongColumnCount, raw));
            continue;
        }
        let Ok(key) = PairKey::parse(rec[0].trim()) else {
            counts.reject();
            rejects.push(Reject::new(RejectReason::InvalidPairKey, raw));
            continue;
        };
        let Ok(label) = rec[1].trim().parse::<AnnotationLabel>() else {
            counts.reject();
            rejects.push(Reject::new(RejectReason::UnknownLabel, raw));
            continue;
        };
        counts.record();
        if let Some(existing) = table.get(&key) {
            if existing.label != label {
                return Err(IngestError::ConflictingAnnotation {
                    key: key.to_string(),
                    first: existing.label,
                    second: label,
                });
            }
            continue;
        }
        table.insert(
            key.clone(),
            Annotation {
                pair_key: key,
                label,
                evidence_source: rec[2].to_string(),
                note: rec[3].to_string(),
            },
        );
    }
    Ok((table, rejects, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projects(body: &str) -> Result<(ProjectTable, Vec<Reject>, IngestCounts), IngestError> {
        read_project_registry(
            format!("grant_number,acronym,start_date,end_date\n{body}").as_bytes(),
        )
    }

    fn annotations(
        body: &str,
    ) -> Result<(AnnotationTable, Vec<Reject>, IngestCounts), IngestError> {
        read_annotations(format!("pair_key,label,evidence_source,note\n{body}").as_bytes())
    }

    #[test]
    fn project_row() {
        let (t, rejects, counts) =
            projects("696656,GrapheneCore1,2016-04-01,2018-03-31\n").unwrap();
        let p = &t[&ProjectId::new("696656").unwrap()];
        assert_eq!(p.acronym.as_deref(), Some("GrapheneCore1"));
        assert_eq!(p.start_date, "2016-04-01".parse().unwrap());
        assert_eq!(p.end_date, Some("2018-03-31".parse().unwrap()));
        assert!(rejects.is_empty());
        assert!(counts.is_conserved());
    }

    #[test]
    fn project_errors() {
        assert!(matches!(
            projects("1,A,2016-01-01,\n1,B,2017-01-01,\n"),
            Err(IngestError::DuplicateProject(g)) if g == "1"
        ));
        assert!(matches!(
            projects("1,A,01/02/2016,\n"),
            Err(IngestError::RegistryDate { .. })
        ));
        assert!(matches!(
            projects("1,A,,\n"),
            Err(IngestError::RegistryDate { .. })
        ));
        let (t, rejects, counts) =
            projects("1,A,2018-01-01,2017-01-01\nx,B,2018-01-01,\n2,C,2018-01-01,\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            rejects.iter().map(|r| r.reason).collect::<Vec<_>>(),
            vec![RejectReason::EndBeforeStart, RejectReason::InvalidProjectId]
        );
        assert!(counts.is_conserved());
    }

    #[test]
    fn annotation_rows() {
        let (t, rejects, _) = annotations(
            "696656::10.1000/x,CONFIRMED,repository,found in acknowledgments\n\
             1::10.1000/y,MAYBE,wos,\n\
             1::10.1000/z,DATA_MISTAKE,wos,\n\
             1::10.1000/z,DATA_MISTAKE,wos,again\n\
             nokey,CONFIRMED,x,y\n",
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        let a = &t[&PairKey::parse("696656::10.1000/x").unwrap()];
        assert_eq!(a.label, AnnotationLabel::Confirmed);
        assert_eq!(a.evidence_source, "repository");
        assert_eq!(a.note, "found in acknowledgments");
        assert_eq!(t[&PairKey::parse("1::10.1000/z").unwrap()].note, "");
        assert_eq!(
            rejects.iter().map(|r| r.reason).collect::<Vec<_>>(),
            vec![RejectReason::UnknownLabel, RejectReason::InvalidPairKey]
        );
    }

    #[test]
    fn conflicting_annotation_is_fatal() {
        let r = annotations("1::10.1000/z,CONFIRMED,a,\n1::10.1000/z,DATA_MISTAKE,b,\n");
        assert!(matches!(r, Err(IngestError::ConflictingAnnotation { .. })));
    }
}
