//! Inverted index over sparse vectors with per-feature statistics.
//!
//! Each posting carries the raw weight `s`, the L2-normalized weight
//! `c = s / ||y||` and the square `ss = s * s`. Documents keep their L1, L2
//! and squared L2 norms so distance scores need only one lookup per
//! candidate.

mod ingest;
mod persist;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::num::Weight;
use crate::vecmodel::{FeatureId, SparseVector, VectorError, VectorNorms};

pub use ingest::{
    parse_jsonl, write_jsonl, IngestError, IngestErrorKind, IngestFeature, IngestRecord,
};
pub use persist::{
    load_index, read_index, save_index, write_index, PersistError, FORMAT_VERSION, MAGIC,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("document {0:?} has no positive weight")]
    ZeroVector(String),
    #[error("file {0:?} is already indexed")]
    DuplicateFile(String),
    #[error("index is full ({0} documents)")]
    Full(usize),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Dense document handle, assigned in ingestion order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct DocId(u32);

impl DocId {
    pub fn new(raw: u32) -> Self {
        Self(raw)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Stored document: file name, raw feature weights, cached norms.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord<T> {
    pub doc_id: DocId,
    pub file_name: String,
    pub features: SparseVector<T>,
    pub norms: VectorNorms<T>,
    /// Optional human-readable word per feature. Kept in memory only.
    pub labels: BTreeMap<FeatureId, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting<T> {
    pub doc_id: DocId,
    /// Raw weight.
    pub s: T,
    /// Weight divided by the document's L2 norm.
    pub c: T,
    /// Squared raw weight.
    pub ss: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexStats {
    pub doc_count: usize,
    pub distinct_features: usize,
    pub total_postings: usize,
    pub mean_postings_per_doc: f64,
}

/// Append-only inverted index.
///
/// Built by a single writer; immutable and freely shareable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex<T> {
    postings: BTreeMap<FeatureId, Vec<Posting<T>>>,
    documents: Vec<DocumentRecord<T>>,
    by_file: HashMap<String, DocId>,
    max_features: Option<usize>,
}

impl<T: Weight> Default for InvertedIndex<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Weight> InvertedIndex<T> {
    pub fn new() -> Self {
        Self {
            postings: BTreeMap::new(),
            documents: Vec::new(),
            by_file: HashMap::new(),
            max_features: None,
        }
    }

    /// Index that truncates every ingested document to its `m` heaviest
    /// features.
    pub fn with_max_features(max_features: Option<usize>) -> Self {
        Self {
            max_features,
            ..Self::new()
        }
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// Adds a document and returns its id (the previous document count).
    ///
    /// Zero-weight entries are dropped before storage; the document must keep
    /// at least one positive weight.
    pub fn index_document(
        &mut self,
        file_name: &str,
        features: SparseVector<T>,
        labels: Option<BTreeMap<FeatureId, String>>,
    ) -> Result<DocId, IndexError> {
        if self.by_file.contains_key(file_name) {
            return Err(IndexError::DuplicateFile(file_name.to_owned()));
        }
        let mut features = features.without_zeros();
        if let Some(m) = self.max_features {
            features = features.truncate_top_m(m);
        }
        if features.is_empty() {
            return Err(IndexError::ZeroVector(file_name.to_owned()));
        }
        let raw = u32::try_from(self.documents.len())
            .map_err(|_| IndexError::Full(self.documents.len()))?;
        let doc_id = DocId(raw);

        let norms = features.norms();
        for (id, s) in features.iter() {
            self.postings.entry(id.clone()).or_default().push(Posting {
                doc_id,
                s,
                c: s / norms.l2,
                ss: s * s,
            });
        }
        let mut labels = labels.unwrap_or_default();
        labels.retain(|k, _| features.get(k.as_str()).is_some());

        self.by_file.insert(file_name.to_owned(), doc_id);
        self.documents.push(DocumentRecord {
            doc_id,
            file_name: file_name.to_owned(),
            features,
            norms,
            labels,
        });
        Ok(doc_id)
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, doc_id: DocId) -> Option<&DocumentRecord<T>> {
        self.documents.get(doc_id.index())
    }

    pub fn documents(&self) -> &[DocumentRecord<T>] {
        &self.documents
    }

    pub fn doc_id_of(&self, file_name: &str) -> Option<DocId> {
        self.by_file.get(file_name).copied()
    }

    pub fn postings(&self, feature: &str) -> &[Posting<T>] {
        self.postings.get(feature).map_or(&[], Vec::as_slice)
    }

    /// All posting lists in feature-id order.
    pub fn posting_lists(&self) -> impl ExactSizeIterator<Item = (&FeatureId, &[Posting<T>])> {
        self.postings.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn feature_ids(&self) -> impl ExactSizeIterator<Item = &FeatureId> {
        self.postings.keys()
    }

    pub fn stats(&self) -> IndexStats {
        let total_postings: usize = self.postings.values().map(Vec::len).sum();
        let doc_count = self.documents.len();
        IndexStats {
            doc_count,
            distinct_features: self.postings.len(),
            total_postings,
            mean_postings_per_doc: if doc_count == 0 {
                0.0
            } else {
                total_postings as f64 / doc_count as f64
            },
        }
    }

    /// Rebuilds a document's vector from the posting lists alone.
    pub fn reconstruct(&self, doc_id: DocId) -> SparseVector<T> {
        let entries = self
            .postings
            .iter()
            .filter_map(|(id, list)| {
                list.binary_search_by(|p| p.doc_id.cmp(&doc_id))
                    .ok()
                    .map(|i| (id.clone(), list[i].s))
            })
            .collect();
        SparseVector::from_canonical(entries)
    }

    /// Assembles an index from persisted parts without recomputing any
    /// stored statistic.
    pub(crate) fn from_parts(
        documents: Vec<DocumentRecord<T>>,
        postings: BTreeMap<FeatureId, Vec<Posting<T>>>,
    ) -> Result<Self, String> {
        let mut by_file = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.doc_id.index() != i {
                return Err(format!("document {i} carries id {}", doc.doc_id));
            }
            if by_file.insert(doc.file_name.clone(), doc.doc_id).is_some() {
                return Err(format!("duplicate file name {:?}", doc.file_name));
            }
        }
        let mut per_doc = vec![0usize; documents.len()];
        for (id, list) in &postings {
            if list.is_empty() {
                return Err(format!("empty posting list for {id}"));
            }
            for pair in list.windows(2) {
                if pair[0].doc_id >= pair[1].doc_id {
                    return Err(format!("posting list {id} not strictly sorted"));
                }
            }
            for p in list {
                let doc = documents.get(p.doc_id.index()).ok_or_else(|| {
                    format!("posting {id} references unknown document {}", p.doc_id)
                })?;
                if doc.features.get(id.as_str()) != Some(p.s) {
                    return Err(format!("posting {id} disagrees with document {}", p.doc_id));
                }
                per_doc[p.doc_id.index()] += 1;
            }
        }
        for doc in &documents {
            if per_doc[doc.doc_id.index()] != doc.features.len() {
                return Err(format!("document {} missing postings", doc.doc_id));
            }
        }
        Ok(Self {
            postings,
            documents,
            by_file,
            max_features: None,
        })
    }
}
