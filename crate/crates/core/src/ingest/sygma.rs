use std::io::Read;

use csv::StringRecord;

use super::{
    check_header, csv_raw, parse_optional_date, CountingReader, IngestCounts, IngestError, Parsed,
};
use crate::doi::DoiNormalizer;
use crate::model::{FundingLink, ProjectId, Reject, RejectReason, Source};

pub const SYGMA_HEADER: [&str; 6] = [
    "project_id",
    "doi",
    "title",
    "publication_date",
    "report_date",
    "record_id",
];

/// Reported-publications CSV reader.
pub struct SygmaReader<R> {
    csv: csv::Reader<R>,
    normalizer: DoiNormalizer,
    record: StringRecord,
    counts: IngestCounts,
}

/// Opens a SyGMA links CSV; fails only on an unreadable stream or a missing header.
pub fn read_sygma_links<R: Read>(
    source: R,
    normalizer: DoiNormalizer,
) -> Result<SygmaReader<R>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    check_header(&mut csv, &SYGMA_HEADER)?;
    Ok(SygmaReader {
        csv,
        normalizer,
        record: StringRecord::new(),
        counts: IngestCounts::default(),
    })
}

impl<R: Read> SygmaReader<R> {
    fn convert(&self, rec: &StringRecord) -> Result<FundingLink, RejectReason> {
        if rec.len() != SYGMA_HEADER.len() {
            return Err(RejectReason::WrongColumnCount);
        }
        let project = ProjectId::new(rec[0].trim()).map_err(|_| RejectReason::InvalidProjectId)?;
        let raw_doi = &rec[1];
        let doi = self
            .normalizer
            .normalize(raw_doi)
            .map_err(|_| RejectReason::MalformedDoi)?;
        let publication_date =
            parse_optional_date(&rec[3]).map_err(|_| RejectReason::InvalidDate)?;
        let report_date = parse_optional_date(&rec[4]).map_err(|_| RejectReason::InvalidDate)?;
        let mut link = FundingLink::new(project, doi, Source::Sygma);
        if link.doi.as_str() != raw_doi {
            link.raw_doi = Some(raw_doi.to_string());
        }
        link.provenance = format!("sygma:{}", rec[5].trim());
        link.publication_date = publication_date;
        link.report_date = report_date;
        Ok(link)
    }
}

impl<R: Read> Iterator for SygmaReader<R> {
    type Item = Result<Parsed<FundingLink>, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut rec = std::mem::take(&mut self.record);
        let item = match self.csv.read_record(&mut rec) {
            Ok(false) => None,
            Ok(true) => Some(Ok(match self.convert(&rec) {
                Ok(link) => {
                    self.counts.record();
                    Parsed::Record(link)
                }
                Err(reason) => {
                    self.counts.reject();
                    Parsed::Rejected(Reject::new(reason, csv_raw(&rec)))
                }
            })),
            Err(e) if e.is_io_error() => Some(Err(e.into())),
            Err(e) => {
                // invalid UTF-8 and similar per-row decoding failures
                self.counts.reject();
                Some(Ok(Parsed::Rejected(Reject::new(
                    RejectReason::ParseError,
                    e.to_string(),
                ))))
            }
        };
        self.record = rec;
        item
    }
}

impl<R> CountingReader for SygmaReader<R> {
    fn counts(&self) -> IngestCounts {
        self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doi::NormalizationMode;

    const HEADER: &str = "project_id,doi,title,publication_date,report_date,record_id\n";

    fn parse(body: &str, mode: NormalizationMode) -> (Vec<Parsed<FundingLink>>, IngestCounts) {
        let text = format!("{HEADER}{body}");
        let mut reader = read_sygma_links(text.as_bytes(), DoiNormalizer::new(mode)).unwrap();
        let items: Vec<_> = reader.by_ref().map(Result::unwrap).collect();
        (items, reader.counts())
    }

    #[test]
    fn well_formed_row() {
        let (items, counts) = parse(
            "696656,10.1000/xyz1,Some Title,2017-03-01,2017-06-30,r1\n",
            NormalizationMode::OpenaireStrict,
        );
        let Parsed::Record(link) = &items[0] else {
            panic!("expected record")
        };
        assert_eq!(link.pair_key().as_str(), "696656::10.1000/xyz1");
        assert_eq!(link.source, Source::Sygma);
        assert_eq!(link.report_date, Some("2017-06-30".parse().unwrap()));
        assert_eq!(link.raw_doi, None);
        assert_eq!(counts.records_out, 1);
        assert!(counts.is_conserved());
    }

    #[test]
    fn bad_rows_are_rejected() {
        let (items, counts) = parse(
            "696656,banana,T,,,r1\n\
             69a,10.1000/x,T,,,r2\n\
             1,10.1000/x,T\n\
             1,10.1000/x,T,2019-13-40,,r3\n\
             1,\"10.1000/x, with comma\",\"T, quoted\",,,r4\n",
            NormalizationMode::OpenaireStrict,
        );
        let reasons: Vec<_> = items
            .iter()
            .map(|p| match p {
                Parsed::Rejected(r) => Some(r.reason),
                Parsed::Record(_) => None,
            })
            .collect();
        assert_eq!(
            reasons,
            vec![
                Some(RejectReason::MalformedDoi),
                Some(RejectReason::InvalidProjectId),
                Some(RejectReason::WrongColumnCount),
                Some(RejectReason::InvalidDate),
                Some(RejectReason::MalformedDoi),
            ]
        );
        let Parsed::Rejected(r) = &items[0] else {
            unreachable!()
        };
        assert_eq!(r.raw, "696656,banana,T,,,r1");
        let Parsed::Rejected(r) = &items[4] else {
            unreachable!()
        };
        assert_eq!(r.raw, "1,\"10.1000/x, with comma\",\"T, quoted\",,,r4");
        assert_eq!(counts.rows_in, 5);
        assert!(counts.is_conserved());
    }

    #[test]
    fn header_only_is_empty() {
        let (items, counts) = parse("", NormalizationMode::OpenaireStrict);
        assert!(items.is_empty());
        assert_eq!(counts, IngestCounts::default());
    }

    #[test]
    fn missing_header_is_fatal() {
        let r = read_sygma_links(&b""[..], DoiNormalizer::default());
        assert!(matches!(r, Err(IngestError::Header { .. })));
        let r = read_sygma_links(&b"a,b,c\n1,2,3\n"[..], DoiNormalizer::default());
        assert!(matches!(r, Err(IngestError::Header { .. })));
    }

    #[test]
    fn aggressive_mode_keeps_raw() {
        let (items, _) = parse(
            "1,https://doi.org/10.1000/ABC,T,,,r\n",
            NormalizationMode::Aggressive,
        );
        let Parsed::Record(link) = &items[0] else {
            panic!()
        };
        assert_eq!(link.doi.as_str(), "10.1000/abc");
        assert_eq!(link.raw_doi.as_deref(), Some("https://doi.org/10.1000/ABC"));
    }
}
