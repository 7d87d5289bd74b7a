use std::io::BufRead;

use serde::Deserialize;

use super::{CountingReader, IngestCounts, IngestError, Parsed};
use crate::doi::DoiNormalizer;
use crate::model::{FundingLink, ProjectId, Reject, RejectReason, Source};

#[derive(Deserialize)]
struct RelationLine {
    project_code: String,
    doi: String,
    provenance: String,
    deduplicated: bool,
}

/// Line-delimited graph relations reader. Blank lines are ignored.
pub struct OpenaireReader<R> {
    source: R,
    normalizer: DoiNormalizer,
    buf: Vec<u8>,
    counts: IngestCounts,
}

pub fn read_openaire_links<R: BufRead>(source: R, normalizer: DoiNormalizer) -> OpenaireReader<R> {
    OpenaireReader {
        source,
        normalizer,
        buf: Vec::with_capacity(1024),
        counts: IngestCounts::default(),
    }
}

impl<R: BufRead> OpenaireReader<R> {
    fn convert(&self, line: &str) -> Result<FundingLink, RejectReason> {
        let rel: RelationLine = serde_json::from_str(line).map_err(|_| RejectReason::ParseError)?;
        let project =
            ProjectId::new(rel.project_code.trim()).map_err(|_| RejectReason::InvalidProjectId)?;
        let doi = self
            .normalizer
            .normalize(&rel.doi)
            .map_err(|_| RejectReason::MalformedDoi)?;
        let mut link = FundingLink::new(project, doi, Source::Openaire);
        if link.doi.as_str() != rel.doi {
            link.raw_doi = Some(rel.doi);
        }
        link.provenance = rel.provenance;
        link.deduplicated = rel.deduplicated;
        Ok(link)
    }
}

impl<R: BufRead> Iterator for OpenaireReader<R> {
    type Item = Result<Parsed<FundingLink>, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let line = String::from_utf8_lossy(&self.buf);
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let parsed = match self.convert(line) {
                Ok(link) => {
                    self.counts.record();
                    Parsed::Record(link)
                }
                Err(reason) => {
                    self.counts.reject();
                    Parsed::Rejected(Reject::new(reason, line))
                }
            };
            return Some(Ok(parsed));
        }
    }
}

impl<R> CountingReader for OpenaireReader<R> {
    fn counts(&self) -> IngestCounts {
        self.counts
    }
}
