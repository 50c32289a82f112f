//! Sparse feature vectors and their norm arithmetic.
//!
//! A [`SparseVector`] holds `(FeatureId, weight)` pairs sorted by feature id,
//! which makes every pairwise kernel a linear merge. Weights are nonnegative
//! and finite; they are typically the strongest components of a classifier's
//! softmax output.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::num::Weight;

/// Slack allowed on the total mass of an untruncated softmax vector.
pub const SOFTMAX_MASS_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("feature id must be non-empty")]
    EmptyFeatureId,
    #[error("duplicate feature id {0}")]
    DuplicateFeature(FeatureId),
    #[error("feature {feature} has invalid weight {value} (weights must be finite and >= 0)")]
    InvalidWeight { feature: FeatureId, value: f64 },
    #[error("vector has no positive weight")]
    ZeroVector,
}

/// Opaque feature token such as a WordNet synset id (`n02123045`).
///
/// Ordered lexicographically by bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(Box<str>);

impl FeatureId {
    pub fn new(id: impl Into<String>) -> Result<Self, VectorError> {
        let id: String = id.into();
        if id.is_empty() {
            return Err(VectorError::EmptyFeatureId);
        }
        Ok(Self(id.into_boxed_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for FeatureId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<&str> for FeatureId {
    type Error = VectorError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

/// L1, L2 and squared L2 norms of one vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VectorNorms<T> {
    pub l1: T,
    pub l2: T,
    pub l2_squared: T,
}

/// Sparse vector with entries sorted ascending by [`FeatureId`].
#[derive(Clone, PartialEq, Default)]
pub struct SparseVector<T> {
    entries: Vec<(FeatureId, T)>,
}

impl<T: Weight> SparseVector<T> {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Builds a vector from entries in any order.
    ///
    /// Rejects duplicate ids and weights that are negative or not finite.
    pub fn new(mut entries: Vec<(FeatureId, T)>) -> Result<Self, VectorError> {
        for (id, w) in &entries {
            if !w.is_finite() || *w < T::zero() {
                return Err(VectorError::InvalidWeight {
                    feature: id.clone(),
                    value: w.as_f64(),
                });
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(pair) = entries.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(VectorError::DuplicateFeature(pair[0].0.clone()));
        }
        Ok(Self { entries })
    }

    /// Convenience constructor from string ids.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, T)]) -> Result<Self, VectorError> {
        let entries = pairs
            .iter()
            .map(|(id, w)| FeatureId::new(id.as_ref()).map(|id| (id, *w)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(entries)
    }

    /// Wraps entries already in canonical order with valid weights.
    pub(crate) fn from_canonical(entries: Vec<(FeatureId, T)>) -> Self {
        debug_assert!(entries.windows(2).all(|p| p[0].0 < p[1].0));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(FeatureId, T)] {
        &self.entries
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&FeatureId, T)> + '_ {
        self.entries.iter().map(|(id, w)| (id, *w))
    }

    pub fn get(&self, id: &str) -> Option<T> {
        self.entries
            .binary_search_by(|(f, _)| f.as_str().cmp(id))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn into_entries(self) -> Vec<(FeatureId, T)> {
        self.entries
    }

    /// True when at least one weight is strictly positive.
    pub fn has_positive_weight(&self) -> bool {
        self.entries.iter().any(|(_, w)| *w > T::zero())
    }

    /// Drops zero-weight entries.
    pub fn without_zeros(&self) -> Self {
        Self::from_canonical(
            self.entries
                .iter()
                .filter(|(_, w)| *w > T::zero())
                .cloned()
                .collect(),
        )
    }

    pub fn l1_norm(&self) -> T {
        self.entries.iter().map(|(_, w)| *w).sum()
    }

    pub fn l2_squared(&self) -> T {
        self.entries.iter().map(|(_, w)| *w * *w).sum()
    }

    pub fn l2_norm(&self) -> T {
        self.l2_squared().sqrt()
    }

    pub fn norms(&self) -> VectorNorms<T> {
        let l2_squared = self.l2_squared();
        VectorNorms {
            l1: self.l1_norm(),
            l2: l2_squared.sqrt(),
            l2_squared,
        }
    }

    /// Whether the total mass fits the softmax bound `sum <= 1 + 1e-6`.
    pub fn within_softmax_mass(&self) -> bool {
        self.l1_norm().as_f64() <= 1.0 + SOFTMAX_MASS_SLACK
    }

    /// Scales the vector to unit L2 norm.
    pub fn normalize_l2(&self) -> Result<Self, VectorError> {
        if !self.has_positive_weight() {
            return Err(VectorError::ZeroVector);
        }
        let l2 = self.l2_norm();
        Ok(Self::from_canonical(
            self.entries
                .iter()
                .map(|(id, w)| (id.clone(), *w / l2))
                .collect(),
        ))
    }

    /// Keeps the `m` heaviest entries.
    ///
    /// Equal weights keep the smaller feature id. `m == 0` yields the empty
    /// vector; `m >= len` returns a copy.
    pub fn truncate_top_m(&self, m: usize) -> Self {
        if m >= self.entries.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        // entries are id-sorted, so an index tie-break is an id tie-break
        order.sort_by(|&a, &b| {
            self.entries[b]
                .1
                .partial_cmp(&self.entries[a].1)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        order.truncate(m);
        order.sort_unstable();
        Self::from_canonical(order.into_iter().map(|i| self.entries[i].clone()).collect())
    }
}

impl<T: fmt::Debug> fmt::Debug for SparseVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(k, v)| (k, v)))
            .finish()
    }
}

impl<T: Weight> TryFrom<Vec<(FeatureId, T)>> for SparseVector<T> {
    type Error = VectorError;

    fn try_from(entries: Vec<(FeatureId, T)>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}
