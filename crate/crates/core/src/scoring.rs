//! Scoring kernels.
//!
//! Every method reduces to a sum over features shared by the query and a
//! document, followed by an O(1) adjustment using stored norms:
//!
//! | method        | per shared feature      | finalize                          |
//! |---------------|-------------------------|-----------------------------------|
//! | `dot`         | `x * s`                 | identity                          |
//! | `cos`         | `x * c`                 | identity (`= cos * ||x||`)        |
//! | `cos-exact`   | `x * s`                 | `/ (||x|| * ||y||)`               |
//! | `l1`          | `|x - s| - x - s`       | `2 - (|x|_1 + |y|_1 + acc)`       |
//! | `l2`          | `x * s`                 | `2 * acc - ||y||^2`               |
//!
//! All scores are higher-is-better. Distances are turned into scores by a
//! strictly decreasing complement, so rankings are unchanged.

use std::fmt;
use std::str::FromStr;

use crate::num::{rank_order, Weight};
use crate::vecmodel::{SparseVector, VectorError, VectorNorms};

/// Default window for [`ScoringMethod::DotThenCosRerank`].
pub const DEFAULT_RERANK_K: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoringMethod {
    /// Plain inner product of raw weights.
    Dot,
    /// Cosine similarity computed from the dot product and both norms.
    CosineExact,
    /// Inner product with index-time L2-normalized weights.
    CosineIndexed,
    /// Complemented Manhattan distance.
    Manhattan,
    /// Euclidean rank value `2 x.y - ||y||^2`.
    Euclid,
    /// Dot-product retrieval of `k_rerank` candidates re-sorted by exact cosine.
    DotThenCosRerank { k_rerank: usize },
}

impl ScoringMethod {
    /// Row order used by report tables.
    pub const TABLE_ORDER: [&'static str; 6] = ["dot", "l1", "l2", "cos", "cos-exact", "dot+cos"];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Dot => "dot",
            Self::CosineExact => "cos-exact",
            Self::CosineIndexed => "cos",
            Self::Manhattan => "l1",
            Self::Euclid => "l2",
            Self::DotThenCosRerank { .. } => "dot+cos",
        }
    }

    pub fn table_rank(&self) -> usize {
        Self::TABLE_ORDER
            .iter()
            .position(|l| *l == self.label())
            .unwrap_or(usize::MAX)
    }

    /// Methods whose score is a complemented distance; documents sharing no
    /// feature with the query still get a meaningful score.
    pub fn is_distance(&self) -> bool {
        matches!(self, Self::Manhattan | Self::Euclid)
    }

    pub fn rerank_k(&self) -> Option<usize> {
        match self {
            Self::DotThenCosRerank { k_rerank } => Some(*k_rerank),
            _ => None,
        }
    }

    /// Contribution of one shared feature with query weight `x`, raw document
    /// weight `s` and normalized document weight `c`.
    #[inline]
    pub fn term<T: Weight>(&self, x: T, s: T, c: T) -> T {
        match self {
            Self::CosineIndexed => x * c,
            Self::Manhattan => manhattan_term(x, s),
            Self::Dot | Self::CosineExact | Self::Euclid | Self::DotThenCosRerank { .. } => x * s,
        }
    }

    /// Turns an accumulated sum of [`term`](Self::term)s into the final score.
    #[inline]
    pub fn finalize<T: Weight>(&self, acc: T, query: &VectorNorms<T>, doc: &VectorNorms<T>) -> T {
        match self {
            Self::Dot | Self::CosineIndexed => acc,
            Self::CosineExact | Self::DotThenCosRerank { .. } => {
                cosine_from_dot(acc, query.l2, doc.l2)
            }
            Self::Manhattan => distance_to_score(
                manhattan_from_acc(acc, query.l1, doc.l1),
                Complement::Manhattan,
            ),
            Self::Euclid => euclid_rank_score(acc, doc.l2_squared),
        }
    }
}

impl fmt::Display for ScoringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DotThenCosRerank { k_rerank } if *k_rerank != DEFAULT_RERANK_K => {
                write!(f, "dot+cos:{k_rerank}")
            }
            _ => f.write_str(self.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scoring method {0:?} (expected dot, l1, l2, cos, cos-exact, dot+cos[:K])")]
pub struct UnknownMethod(pub String);

impl FromStr for ScoringMethod {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s {
            "dot" => Self::Dot,
            "cos" | "cosine" => Self::CosineIndexed,
            "cos-exact" => Self::CosineExact,
            "l1" | "manhattan" => Self::Manhattan,
            "l2" | "euclid" => Self::Euclid,
            "dot+cos" => Self::DotThenCosRerank {
                k_rerank: DEFAULT_RERANK_K,
            },
            other => {
                let k = other
                    .strip_prefix("dot+cos:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| UnknownMethod(other.to_owned()))?;
                Self::DotThenCosRerank { k_rerank: k }
            }
        })
    }
}

/// Inner product over shared features; 0 for disjoint supports.
pub fn score_dot<T: Weight>(x: &SparseVector<T>, y: &SparseVector<T>) -> T {
    let mut acc = T::zero();
    for_each_shared(x, y, |a, b| acc = acc + a * b);
    acc
}

/// Cosine similarity. Fails if either vector has zero norm.
pub fn score_cosine_exact<T: Weight>(
    x: &SparseVector<T>,
    y: &SparseVector<T>,
) -> Result<T, VectorError> {
    let (xn, yn) = (x.l2_norm(), y.l2_norm());
    if xn == T::zero() || yn == T::zero() {
        return Err(VectorError::ZeroVector);
    }
    Ok(cosine_from_dot(score_dot(x, y), xn, yn))
}

#[inline]
pub fn cosine_from_dot<T: Weight>(dot: T, x_l2: T, y_l2: T) -> T {
    dot / (x_l2 * y_l2)
}

/// Sum of `x_i * c_i` over shared features, given `(x_i, c_i)` pairs.
///
/// Equals `cos(x, y) * ||x||`, so it ranks documents exactly as cosine does
/// for a fixed query.
pub fn score_cosine_indexed<T: Weight>(shared: impl IntoIterator<Item = (T, T)>) -> T {
    shared
        .into_iter()
        .fold(T::zero(), |acc, (x, c)| acc + x * c)
}

#[inline]
pub fn manhattan_term<T: Weight>(x: T, y: T) -> T {
    (x - y).abs() - x - y
}

#[inline]
fn manhattan_from_acc<T: Weight>(acc: T, x_l1: T, y_l1: T) -> T {
    x_l1 + y_l1 + acc
}

/// `||x - y||_1` from the shared `(x_i, y_i)` pairs and both L1 norms.
///
/// Non-shared coordinates contribute their own weight, which the two L1
/// norms already account for.
pub fn manhattan_distance<T: Weight>(
    shared: impl IntoIterator<Item = (T, T)>,
    x_l1: T,
    y_l1: T,
) -> T {
    let acc = shared
        .into_iter()
        .fold(T::zero(), |acc, (x, y)| acc + manhattan_term(x, y));
    manhattan_from_acc(acc, x_l1, y_l1)
}

/// `-(||y||^2 - 2 x.y)`. Ranks documents by ascending Euclidean distance to
/// the query, since `||x||^2` is the same for every document.
#[inline]
pub fn euclid_rank_score<T: Weight>(dot_xy: T, y_l2_squared: T) -> T {
    -(y_l2_squared - T::lit(2.0) * dot_xy)
}

/// Recovers the metric distance from a rank score and the query's squared norm.
pub fn euclid_distance_from_rank<T: Weight>(rank_score: T, x_l2_squared: T) -> T {
    (x_l2_squared - rank_score).max(T::zero()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Complement {
    /// `2 - d`; 2 bounds the L1 distance of two vectors of mass at most 1.
    Manhattan,
    /// The Euclid rank value is already higher-is-better.
    EuclidRank,
}

/// Maps a distance to a higher-is-better score.
///
/// The Manhattan complement is not clamped, so vectors heavier than a
/// softmax output get negative scores but keep their order.
#[inline]
pub fn distance_to_score<T: Weight>(d: T, mode: Complement) -> T {
    match mode {
        Complement::Manhattan => T::lit(2.0) - d,
        Complement::EuclidRank => d,
    }
}

/// Inverse of the Manhattan complement.
#[inline]
pub fn manhattan_distance_from_score<T: Weight>(score: T) -> T {
    T::lit(2.0) - score
}

/// Re-scores the first `k_rerank` candidates with exact cosine and sorts
/// them; the rest are dropped.
///
/// `candidates` must already be ordered by dot product.
pub fn rerank_by_exact_cosine<'a, T: Weight, K: Ord + Copy>(
    query: &SparseVector<T>,
    candidates: impl IntoIterator<Item = (K, &'a SparseVector<T>)>,
    k_rerank: usize,
) -> Result<Vec<(K, T)>, VectorError> {
    let mut out = candidates
        .into_iter()
        .take(k_rerank)
        .map(|(key, doc)| score_cosine_exact(query, doc).map(|s| (key, s)))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
    Ok(out)
}

/// Calls `f(x_i, y_i)` for every feature present in both vectors, in id order.
pub fn for_each_shared<T: Weight>(
    x: &SparseVector<T>,
    y: &SparseVector<T>,
    mut f: impl FnMut(T, T),
) {
    let (a, b) = (x.entries(), y.entries());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DIM: usize = 60;

    fn sv(pairs: &[(&str, f64)]) -> SparseVector<f64> {
        SparseVector::from_pairs(pairs).unwrap()
    }

    fn to_sparse(dense: &[f64]) -> SparseVector<f64> {
        let pairs: Vec<(String, f64)> = dense
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| (format!("f{i:03}"), *w))
            .collect();
        SparseVector::from_pairs(&pairs).unwrap()
    }

    fn random_dense(rng: &mut ChaCha8Rng, nnz: usize) -> Vec<f64> {
        let mut d = vec![0.0; DIM];
        for _ in 0..nnz {
            d[rng.gen_range(0..DIM)] = rng.gen_range(0.001..1.0);
        }
        let total: f64 = d.iter().sum();
        d.iter_mut().for_each(|w| *w /= total);
        d
    }

    // Dense oracles over the full ambient dimension.
    fn dense_dot(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    fn dense_norm(x: &[f64]) -> f64 {
        dense_dot(x, x).sqrt()
    }

    fn dense_cos(x: &[f64], y: &[f64]) -> f64 {
        dense_dot(x, y) / (dense_norm(x) * dense_norm(y))
    }

    fn dense_l1(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
    }

    fn dense_l2(x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn shared(x: &SparseVector<f64>, y: &SparseVector<f64>) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for_each_shared(x, y, |a, b| out.push((a, b)));
        out
    }

    #[test]
    fn dot_examples() {
        assert_eq!(score_dot(&sv(&[("a", 1.0)]), &sv(&[("b", 1.0)])), 0.0);
        let u = sv(&[("a", 0.6), ("b", 0.8)]);
        assert!((score_dot(&u, &u) - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = (random_dense(&mut rng, 20), random_dense(&mut rng, 20));
        assert!((score_dot(&to_sparse(&x), &to_sparse(&y)) - dense_dot(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn cosine_exact_examples() {
        let v = sv(&[("a", 0.3), ("b", 0.1), ("c", 0.05)]);
        assert!((score_cosine_exact(&v, &v).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(
            score_cosine_exact(&sv(&[("a", 1.0)]), &sv(&[("b", 1.0)])).unwrap(),
            0.0
        );
        assert_eq!(
            score_cosine_exact(&v, &SparseVector::empty()),
            Err(VectorError::ZeroVector)
        );

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = (random_dense(&mut rng, 15), random_dense(&mut rng, 15));
        let got = score_cosine_exact(&to_sparse(&x), &to_sparse(&y)).unwrap();
        assert!((got - dense_cos(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn cosine_indexed_examples() {
        assert_eq!(score_cosine_indexed([(1.0, 0.6)]), 0.6);
        let q = sv(&[("a", 0.5), ("b", 0.25), ("c", 0.125)]);
        let unit = q.normalize_l2().unwrap();
        let s = score_cosine_indexed(shared(&q, &unit));
        assert!((s - q.l2_norm()).abs() < 1e-9);
    }

    #[test]
    fn cosine_indexed_ranks_like_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let docs: Vec<Vec<f64>> = (0..80).map(|_| random_dense(&mut rng, 8)).collect();
        for _ in 0..20 {
            let q = random_dense(&mut rng, 8);
            let qs = to_sparse(&q);
            let mut by_indexed: Vec<(usize, f64)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let unit = to_sparse(d).normalize_l2().unwrap();
                    (i, score_cosine_indexed(shared(&qs, &unit)))
                })
                .collect();
            let mut by_dense: Vec<(usize, f64)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, dense_cos(&q, d)))
                .collect();
            by_indexed.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
            by_dense.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
            // only compare documents with positive overlap; the zero tail ties by id either way
            let a: Vec<usize> = by_indexed.iter().map(|p| p.0).collect();
            let b: Vec<usize> = by_dense.iter().map(|p| p.0).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn manhattan_examples() {
        let v = sv(&[("a", 0.5), ("b", 0.3)]);
        assert_eq!(
            manhattan_distance(shared(&v, &v), v.l1_norm(), v.l1_norm()),
            0.0
        );
        let (x, y) = (sv(&[("a", 1.0)]), sv(&[("b", 1.0)]));
        assert_eq!(manhattan_distance(shared(&x, &y), 1.0, 1.0), 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y) = (random_dense(&mut rng, 25), random_dense(&mut rng, 25));
        let (xs, ys) = (to_sparse(&x), to_sparse(&y));
        let got = manhattan_distance(shared(&xs, &ys), xs.l1_norm(), ys.l1_norm());
        assert!((got - dense_l1(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn euclid_examples() {
        let y = sv(&[("a", 0.7), ("b", 0.2)]);
        let n2 = y.l2_squared();
        let s = euclid_rank_score(score_dot(&y, &y), n2);
        assert!((s - n2).abs() < 1e-15);
        assert_eq!(euclid_rank_score(0.0, n2), -n2);
        let d = euclid_distance_from_rank(s, n2);
        assert!(d.abs() < 1e-7);
    }

    #[test]
    fn euclid_ranks_like_dense_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let docs: Vec<Vec<f64>> = (0..80).map(|_| random_dense(&mut rng, 10)).collect();
        for _ in 0..20 {
            let q = random_dense(&mut rng, 10);
            let qs = to_sparse(&q);
            let mut fast: Vec<(usize, f64)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let ds = to_sparse(d);
                    (i, euclid_rank_score(score_dot(&qs, &ds), ds.l2_squared()))
                })
                .collect();
            let mut dense: Vec<(usize, f64)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, -dense_l2(&q, d)))
                .collect();
            fast.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
            dense.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
            assert_eq!(
                fast.iter().map(|p| p.0).collect::<Vec<_>>(),
                dense.iter().map(|p| p.0).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn complement_examples() {
        assert_eq!(distance_to_score(0.0, Complement::Manhattan), 2.0);
        assert_eq!(distance_to_score(2.0, Complement::Manhattan), 0.0);
        assert_eq!(distance_to_score(-0.3, Complement::EuclidRank), -0.3);
        assert_eq!(
            manhattan_distance_from_score(distance_to_score(0.7, Complement::Manhattan)),
            0.7
        );
    }

    #[test]
    fn finalize_matches_kernels() {
        let x = sv(&[("a", 0.5), ("b", 0.2), ("d", 0.1)]);
        let y = sv(&[("b", 0.6), ("c", 0.3), ("d", 0.05)]);
        let unit = y.normalize_l2().unwrap();
        let (xn, yn) = (x.norms(), y.norms());
        let run = |m: ScoringMethod| {
            let mut acc = 0.0;
            for_each_shared(&x, &y, |a, s| {
                let c = unit.get(if s == 0.6 { "b" } else { "d" }).unwrap();
                acc += m.term(a, s, c);
            });
            m.finalize(acc, &xn, &yn)
        };
        assert_eq!(run(ScoringMethod::Dot), score_dot(&x, &y));
        assert_eq!(
            run(ScoringMethod::CosineExact),
            score_cosine_exact(&x, &y).unwrap()
        );
        assert!(
            (run(ScoringMethod::CosineIndexed) - score_cosine_exact(&x, &y).unwrap() * xn.l2).abs()
                < 1e-12
        );
        let l1 = manhattan_distance(shared(&x, &y), xn.l1, yn.l1);
        assert_eq!(run(ScoringMethod::Manhattan), 2.0 - l1);
        assert_eq!(
            run(ScoringMethod::Euclid),
            euclid_rank_score(score_dot(&x, &y), yn.l2_squared)
        );
    }

    #[test]
    fn rerank_window() {
        // q's true match "self" ranks third under dot behind two heavy distractors
        let q = sv(&[("a", 0.4), ("b", 0.3), ("c", 0.3)]);
        let heavy1 = sv(&[("a", 0.95), ("z", 0.05)]);
        let heavy2 = sv(&[("a", 0.9), ("y", 0.1)]);
        let docs = [heavy1, heavy2, q.clone()];
        let mut by_dot: Vec<(usize, f64)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (i, score_dot(&q, d)))
            .collect();
        by_dot.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
        assert_eq!(by_dot[2].0, 2);

        let window =
            rerank_by_exact_cosine(&q, by_dot.iter().map(|(i, _)| (*i, &docs[*i])), 2).unwrap();
        assert_eq!(window.len(), 2);
        assert!(window.iter().all(|(i, _)| *i != 2));

        let full =
            rerank_by_exact_cosine(&q, by_dot.iter().map(|(i, _)| (*i, &docs[*i])), 10).unwrap();
        let mut exact: Vec<(usize, f64)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (i, score_cosine_exact(&q, d).unwrap()))
            .collect();
        exact.sort_by(|a, b| rank_order((a.1, a.0), (b.1, b.0)));
        assert_eq!(full, exact);
        assert_eq!(full[0].0, 2);
    }

    #[test]
    fn method_names_round_trip() {
        for name in [
            "dot",
            "l1",
            "l2",
            "cos",
            "cos-exact",
            "dot+cos",
            "dot+cos:10",
        ] {
            let m: ScoringMethod = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert_eq!(
            "dot+cos:10".parse::<ScoringMethod>().unwrap().rerank_k(),
            Some(10)
        );
        assert!("dot+cos:0".parse::<ScoringMethod>().is_err());
        assert!("bm25".parse::<ScoringMethod>().is_err());
    }

    fn arb_dense() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![3 => Just(0.0), 2 => 0.0f64..1.0], DIM)
    }

    proptest! {
        #[test]
        fn manhattan_decomposition_is_exact(x in arb_dense(), y in arb_dense()) {
            let (xs, ys) = (to_sparse(&x), to_sparse(&y));
            let got = manhattan_distance(shared(&xs, &ys), xs.l1_norm(), ys.l1_norm());
            prop_assert!((got - dense_l1(&x, &y)).abs() < 1e-9);
        }

        #[test]
        fn cosine_is_bounded_and_symmetric(x in arb_dense(), y in arb_dense()) {
            let (xs, ys) = (to_sparse(&x), to_sparse(&y));
            prop_assume!(xs.has_positive_weight() && ys.has_positive_weight());
            let a = score_cosine_exact(&xs, &ys).unwrap();
            let b = score_cosine_exact(&ys, &xs).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn complement_is_strictly_decreasing(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(distance_to_score(lo, Complement::Manhattan) > distance_to_score(hi, Complement::Manhattan));
        }
    }
}
