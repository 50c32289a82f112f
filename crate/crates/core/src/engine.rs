//! Query execution over an [`InvertedIndex`].
//!
//! Term-at-a-time: each query feature's posting list is walked once, adding
//! the method's per-feature term into a dense accumulator keyed by doc id.
//! Candidates are then finalized with their stored norms and fed through a
//! bounded heap for top-k selection. Ties are broken by ascending doc id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::invindex::{DocId, InvertedIndex};
use crate::num::{rank_order, Weight};
use crate::scoring::{self, ScoringMethod};
use crate::vecmodel::{SparseVector, VectorError, VectorNorms};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("query vector is empty after truncation")]
    ZeroVector,
    #[error("index holds no documents")]
    EmptyIndex,
    #[error("unknown document {0}")]
    UnknownDocument(DocId),
    #[error("top_k must be at least 1")]
    InvalidTopK,
}

impl From<VectorError> for EngineError {
    fn from(_: VectorError) -> Self {
        Self::ZeroVector
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    /// Score every document, as a match-all query would.
    #[default]
    Exhaustive,
    /// Score only documents sharing at least one feature with the query.
    #[serde(rename = "posting")]
    PostingDriven,
}

impl std::str::FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "posting" | "posting-driven" => Ok(Self::PostingDriven),
            other => Err(format!(
                "unknown candidate mode {other:?} (expected exhaustive or posting)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec<T> {
    pub vector: SparseVector<T>,
    pub method: ScoringMethod,
    pub top_k: usize,
    /// Keep only this many of the query's heaviest features.
    pub feature_number: Option<usize>,
    pub candidate_mode: CandidateMode,
}

impl<T: Weight> QuerySpec<T> {
    pub fn new(vector: SparseVector<T>, method: ScoringMethod, top_k: usize) -> Self {
        Self {
            vector,
            method,
            top_k,
            feature_number: None,
            candidate_mode: CandidateMode::default(),
        }
    }

    pub fn with_feature_number(mut self, m: Option<usize>) -> Self {
        self.feature_number = m;
        self
    }

    pub fn with_mode(mut self, mode: CandidateMode) -> Self {
        self.candidate_mode = mode;
        self
    }

    /// The vector actually scored: truncated, zero weights removed.
    pub fn effective_vector(&self) -> SparseVector<T> {
        let v = self.vector.without_zeros();
        match self.feature_number {
            Some(m) => v.truncate_top_m(m),
            None => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit<T> {
    pub doc_id: DocId,
    pub file_name: String,
    pub score: T,
}

/// Work counters for one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SearchStats {
    /// Posting entries visited.
    pub postings_traversed: usize,
    /// Additions into the score accumulator.
    pub accumulator_updates: usize,
    /// Documents finalized and offered to top-k selection.
    pub candidates_scored: usize,
}

/// Runs a query and returns the top hits, best first.
pub fn search<T: Weight>(
    idx: &InvertedIndex<T>,
    q: &QuerySpec<T>,
) -> Result<Vec<SearchHit<T>>, EngineError> {
    search_with_stats(idx, q).map(|(hits, _)| hits)
}

pub fn search_with_stats<T: Weight>(
    idx: &InvertedIndex<T>,
    q: &QuerySpec<T>,
) -> Result<(Vec<SearchHit<T>>, SearchStats), EngineError> {
    if q.top_k == 0 {
        return Err(EngineError::InvalidTopK);
    }
    if idx.is_empty() {
        return Err(EngineError::EmptyIndex);
    }
    let query = q.effective_vector();
    if query.is_empty() {
        return Err(EngineError::ZeroVector);
    }
    if q.method.is_distance() && q.candidate_mode == CandidateMode::PostingDriven {
        log::warn!(
            "{} with posting-driven candidates ignores documents sharing no query feature",
            q.method.label()
        );
    }
    let mut stats = SearchStats::default();

    let ranked = match q.method {
        ScoringMethod::DotThenCosRerank { k_rerank } => {
            let window = accumulate_top(
                idx,
                &query,
                ScoringMethod::Dot,
                k_rerank,
                q.candidate_mode,
                &mut stats,
            );
            let docs = window
                .iter()
                .map(|(id, _)| (*id, &idx.documents()[id.index()].features));
            let mut reranked = scoring::rerank_by_exact_cosine(&query, docs, k_rerank)?;
            reranked.truncate(q.top_k);
            reranked
        }
        method => accumulate_top(idx, &query, method, q.top_k, q.candidate_mode, &mut stats),
    };

    let hits = ranked
        .into_iter()
        .map(|(doc_id, score)| SearchHit {
            doc_id,
            file_name: idx.documents()[doc_id.index()].file_name.clone(),
            score,
        })
        .collect();
    Ok((hits, stats))
}

/// Heap entry ordered so that the *worst* hit is the heap's maximum.
struct Worst<T>(T, DocId);

impl<T: Weight> PartialEq for Worst<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Weight> Eq for Worst<T> {}

impl<T: Weight> PartialOrd for Worst<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Weight> Ord for Worst<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order((self.0, self.1), (other.0, other.1))
    }
}

fn accumulate_top<T: Weight>(
    idx: &InvertedIndex<T>,
    query: &SparseVector<T>,
    method: ScoringMethod,
    k: usize,
    mode: CandidateMode,
    stats: &mut SearchStats,
) -> Vec<(DocId, T)> {
    let n = idx.doc_count();
    let mut acc = vec![T::zero(); n];
    let mut touched: Vec<u32> = Vec::new();
    let mut seen = vec![false; n];

    for (fid, x) in query.iter() {
        for p in idx.postings(fid.as_str()) {
            let slot = p.doc_id.index();
            acc[slot] = acc[slot] + method.term(x, p.s, p.c);
            stats.postings_traversed += 1;
            stats.accumulator_updates += 1;
            if !seen[slot] {
                seen[slot] = true;
                touched.push(p.doc_id.raw());
            }
        }
    }

    let qn = query.norms();
    let docs = idx.documents();
    let mut heap: BinaryHeap<Worst<T>> = BinaryHeap::with_capacity(k.min(n) + 1);
    let mut offer = |id: DocId, score: T| {
        if heap.len() < k {
            heap.push(Worst(score, id));
        } else if let Some(top) = heap.peek() {
            if rank_order((score, id), (top.0, top.1)) == Ordering::Less {
                heap.pop();
                heap.push(Worst(score, id));
            }
        }
    };
    match mode {
        CandidateMode::Exhaustive => {
            for doc in docs {
                let score = method.finalize(acc[doc.doc_id.index()], &qn, &doc.norms);
                offer(doc.doc_id, score);
            }
            stats.candidates_scored = n;
        }
        CandidateMode::PostingDriven => {
            for &raw in &touched {
                let doc = &docs[raw as usize];
                let score = method.finalize(acc[raw as usize], &qn, &doc.norms);
                offer(doc.doc_id, score);
            }
            stats.candidates_scored = touched.len();
        }
    }
    let mut out: Vec<(DocId, T)> = heap.into_iter().map(|Worst(s, id)| (id, s)).collect();
    out.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
    out
}

/// One named contribution to an explained score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

/// Additive breakdown of one document's score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub doc_id: DocId,
    pub method: String,
    /// One entry per feature shared by query and document.
    pub feature_terms: Vec<Term>,
    /// Norm-derived and constant terms.
    pub norm_terms: Vec<Term>,
    pub score: f64,
}

impl Explanation {
    pub fn total(&self) -> f64 {
        self.feature_terms
            .iter()
            .chain(&self.norm_terms)
            .map(|t| t.value)
            .sum()
    }
}

/// Breaks `doc_id`'s score under `q` into per-feature and norm terms that sum
/// to the score.
pub fn explain<T: Weight>(
    idx: &InvertedIndex<T>,
    q: &QuerySpec<T>,
    doc_id: DocId,
) -> Result<Explanation, EngineError> {
    let doc = idx
        .document(doc_id)
        .ok_or(EngineError::UnknownDocument(doc_id))?;
    let query = q.effective_vector();
    if query.is_empty() {
        return Err(EngineError::ZeroVector);
    }
    let method = match q.method {
        ScoringMethod::DotThenCosRerank { .. } => ScoringMethod::CosineExact,
        m => m,
    };
    let qn = query.norms();
    let dn: VectorNorms<T> = doc.norms;

    let mut acc = T::zero();
    let mut shared = Vec::new();
    for (fid, x) in query.iter() {
        let list = idx.postings(fid.as_str());
        if let Ok(i) = list.binary_search_by(|p| p.doc_id.cmp(&doc_id)) {
            let p = &list[i];
            let term = method.term(x, p.s, p.c);
            acc = acc + term;
            shared.push((fid.to_string(), term));
        }
    }
    let score = method.finalize(acc, &qn, &dn);

    let term = |name: &str, v: T| Term {
        name: name.to_owned(),
        value: v.as_f64(),
    };
    let (feature_terms, norm_terms) = match method {
        ScoringMethod::Dot | ScoringMethod::CosineIndexed => (
            shared.iter().map(|(n, t)| term(n, *t)).collect(),
            Vec::new(),
        ),
        ScoringMethod::CosineExact => {
            let denom = qn.l2 * dn.l2;
            (
                shared.iter().map(|(n, t)| term(n, *t / denom)).collect(),
                Vec::new(),
            )
        }
        ScoringMethod::Manhattan => (
            shared.iter().map(|(n, t)| term(n, -*t)).collect(),
            vec![
                term("complement", T::lit(2.0)),
                term("-query_l1", -qn.l1),
                term("-doc_l1", -dn.l1),
            ],
        ),
        ScoringMethod::Euclid => (
            shared
                .iter()
                .map(|(n, t)| term(n, T::lit(2.0) * *t))
                .collect(),
            vec![term("-doc_l2_squared", -dn.l2_squared)],
        ),
        ScoringMethod::DotThenCosRerank { .. } => unreachable!(),
    };
    Ok(Explanation {
        doc_id,
        method: q.method.label().to_owned(),
        feature_terms,
        norm_terms,
        score: score.as_f64(),
    })
}
