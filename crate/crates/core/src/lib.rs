//! Sparse-vector inverted index with norm-precomputed scoring.
//!
//! Documents are sparse nonnegative feature vectors (for example the
//! strongest softmax outputs of an image classifier). At indexing time every
//! posting stores the raw weight, the L2-normalized weight and its square,
//! and every document stores its L1/L2 norms. At search time inner product,
//! cosine, Manhattan and Euclidean rankings all come out of one pass over the
//! query's posting lists.
//!
//! The library is generic over the weight scalar ([`Weight`], implemented for
//! `f32` and `f64`); the aliases below fix it to `f64` or `f32`.
//!
//! ```
//! use nsix_core::{search, Index, QuerySpec, ScoringMethod, Vector};
//!
//! let mut idx = Index::new();
//! idx.index_document("cat.jpg", Vector::from_pairs(&[("n02123045", 0.7), ("n02124075", 0.2)])?, None)?;
//! idx.index_document("dog.jpg", Vector::from_pairs(&[("n02099601", 0.9)])?, None)?;
//!
//! let q = Vector::from_pairs(&[("n02123045", 0.6), ("n02124075", 0.3)])?;
//! let hits = search(&idx, &QuerySpec::new(q, ScoringMethod::CosineIndexed, 10))?;
//! assert_eq!(hits[0].file_name, "cat.jpg");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod engine;
pub mod evalbench;
pub mod invindex;
pub mod num;
pub mod scoring;
pub mod vecmodel;

pub use engine::{
    explain, search, search_with_stats, CandidateMode, EngineError, Explanation, QuerySpec,
    SearchHit, SearchStats,
};
pub use invindex::{
    load_index, save_index, DocId, IndexError, IndexStats, InvertedIndex, PersistError,
};
pub use num::Weight;
pub use scoring::ScoringMethod;
pub use vecmodel::{FeatureId, SparseVector, VectorError, VectorNorms};

/// `f64` sparse vector.
pub type Vector = SparseVector<f64>;
/// `f32` sparse vector.
pub type Vector32 = SparseVector<f32>;
/// `f64` inverted index.
pub type Index = InvertedIndex<f64>;
/// `f32` inverted index.
pub type Index32 = InvertedIndex<f32>;
/// `f64` query.
pub type Query = QuerySpec<f64>;
/// `f64` search hit.
pub type Hit = SearchHit<f64>;
