//! JSON Lines ingestion format.
//!
//! One document per line:
//! `{"f": "<file name>", "s": {"<feature id>": {"w": "<word>", "s": <score>}}}`.
//! Only raw scores are read; normalized and squared weights are derived at
//! indexing time.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{IndexError, InvertedIndex};
use crate::num::Weight;
use crate::vecmodel::{FeatureId, SparseVector, VectorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestFeature {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRecord {
    pub f: String,
    pub s: BTreeMap<String, IngestFeature>,
}

#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct IngestError {
    pub line: usize,
    pub kind: IngestErrorKind,
}

#[derive(Debug, Error)]
pub enum IngestErrorKind {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed record: {0}")]
    Format(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl IngestErrorKind {
    /// True for problems with the data itself rather than the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Self::Io(_))
    }
}

impl IngestRecord {
    pub fn from_vector<T: Weight>(file_name: impl Into<String>, v: &SparseVector<T>) -> Self {
        Self {
            f: file_name.into(),
            s: v.iter()
                .map(|(id, w)| {
                    (
                        id.to_string(),
                        IngestFeature {
                            w: None,
                            s: w.as_f64(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Validated feature vector plus any label words.
    pub fn to_vector<T: Weight>(
        &self,
    ) -> Result<(SparseVector<T>, BTreeMap<FeatureId, String>), VectorError> {
        let mut entries = Vec::with_capacity(self.s.len());
        let mut labels = BTreeMap::new();
        for (id, feat) in &self.s {
            let id = FeatureId::new(id.as_str())?;
            let w = T::from_f64(feat.s)
                .filter(|w| w.is_finite() && *w >= T::zero())
                .ok_or_else(|| VectorError::InvalidWeight {
                    feature: id.clone(),
                    value: feat.s,
                })?;
            if let Some(word) = &feat.w {
                labels.insert(id.clone(), word.clone());
            }
            entries.push((id, w));
        }
        Ok((SparseVector::new(entries)?, labels))
    }
}

/// Parses every non-blank line, stopping at the first bad one.
///
/// Returned pairs carry the 1-based line number of each record.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<(usize, IngestRecord)>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IngestError {
            line: line_no,
            kind: e.into(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: IngestRecord = serde_json::from_str(&line).map_err(|e| IngestError {
            line: line_no,
            kind: IngestErrorKind::Format(e.to_string()),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

pub fn write_jsonl<'a, W: Write>(
    records: impl IntoIterator<Item = &'a IngestRecord>,
    mut out: W,
) -> io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

impl<T: Weight> InvertedIndex<T> {
    /// Indexes every record of a JSON Lines stream; returns the number added.
    pub fn ingest_jsonl<R: BufRead>(&mut self, reader: R) -> Result<usize, IngestError> {
        let records = parse_jsonl(reader)?;
        for (line, rec) in &records {
            let at = |kind: IngestErrorKind| IngestError { line: *line, kind };
            let (features, labels) = rec.to_vector::<T>().map_err(|e| at(e.into()))?;
            if !features.within_softmax_mass() {
                log::warn!(
                    "line {line}: {:?} has total mass {} above 1",
                    rec.f,
                    features.l1_norm()
                );
            }
            self.index_document(&rec.f, features, Some(labels))
                .map_err(|e| at(e.into()))?;
        }
        Ok(records.len())
    }
}
