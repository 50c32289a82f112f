//! Synthetic softmax-like corpora and hand-built fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::EvalError;
use crate::num::Weight;
use crate::vecmodel::{FeatureId, SparseVector};

/// Total Dirichlet concentration used by default, spread evenly over the
/// components. Around 1 the draws are peaked the way classifier softmax
/// outputs are, with the top class holding roughly 60% of the mass.
pub const DEFAULT_CONCENTRATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub n_docs: usize,
    pub n_features: usize,
    /// Components kept per document after sampling.
    pub sparsity: usize,
    /// Sum of the Dirichlet parameters.
    pub concentration: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(n_docs: usize, n_features: usize, sparsity: usize, seed: u64) -> Self {
        Self {
            n_docs,
            n_features,
            sparsity,
            concentration: DEFAULT_CONCENTRATION,
            seed,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.n_features == 0 {
            return Err(EvalError::InvalidParams(
                "n_features must be positive".into(),
            ));
        }
        if self.sparsity == 0 || self.sparsity > self.n_features {
            return Err(EvalError::InvalidParams(format!(
                "sparsity {} must be in 1..={}",
                self.sparsity, self.n_features
            )));
        }
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return Err(EvalError::InvalidParams(format!(
                "concentration {} must be positive",
                self.concentration
            )));
        }
        Ok(())
    }
}

/// Feature ids `f0000`, `f0001`, ... zero-padded so lexicographic order
/// matches numeric order.
pub fn feature_ids(n_features: usize) -> Vec<FeatureId> {
    let width = digits(n_features.saturating_sub(1)).max(4);
    (0..n_features)
        .map(|i| FeatureId::new(format!("f{i:0width$}")).expect("non-empty"))
        .collect()
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

/// Samples a full Dirichlet vector over `n` components; sums to 1.
pub(crate) fn dirichlet<R: Rng>(rng: &mut R, gamma: &Gamma<f64>, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        // every draw underflowed; fall back to a point mass
        w[rng.gen_range(0..n)] = 1.0;
    }
    w
}

pub fn generate_synthetic_corpus<T: Weight>(
    n_docs: usize,
    n_features: usize,
    sparsity: usize,
    seed: u64,
) -> Result<Vec<(String, SparseVector<T>)>, EvalError> {
    generate_corpus(&SynthParams::new(n_docs, n_features, sparsity, seed))
}

/// Draws `n_docs` Dirichlet vectors over `n_features` components and keeps
/// each one's `sparsity` heaviest components.
pub fn generate_corpus<T: Weight>(
    p: &SynthParams,
) -> Result<Vec<(String, SparseVector<T>)>, EvalError> {
    p.validate()?;
    let ids = feature_ids(p.n_features);
    let gamma = Gamma::new(p.concentration / p.n_features as f64, 1.0)
        .map_err(|e| EvalError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let width = digits(p.n_docs.saturating_sub(1)).max(6);
    let mut out = Vec::with_capacity(p.n_docs);
    for d in 0..p.n_docs {
        let dense = dirichlet(&mut rng, &gamma, p.n_features);
        let v = top_entries::<T>(&ids, &dense, p.sparsity);
        out.push((format!("img{d:0width$}.jpg"), v));
    }
    Ok(out)
}

/// Heaviest `m` positive components of a dense vector.
pub(crate) fn top_entries<T: Weight>(
    ids: &[FeatureId],
    dense: &[f64],
    m: usize,
) -> SparseVector<T> {
    let mut order: Vec<usize> = (0..dense.len()).filter(|&i| dense[i] > 0.0).collect();
    order.sort_by(|&a, &b| dense[b].total_cmp(&dense[a]).then(a.cmp(&b)));
    order.truncate(m);
    order.sort_unstable();
    SparseVector::from_canonical(
        order
            .into_iter()
            .map(|i| (ids[i].clone(), T::lit(dense[i])))
            .collect(),
    )
}

/// Corpus plus the ids to query it with.
#[derive(Debug, Clone)]
pub struct Fixture<T> {
    pub corpus: Vec<(String, SparseVector<T>)>,
    pub queries: Vec<String>,
}

impl<T: Weight> Fixture<T> {
    pub fn vector(&self, name: &str) -> Option<&SparseVector<T>> {
        self.corpus.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Corpus mixing spread-out documents with near-one-hot "distractors".
///
/// Every spread document's heaviest feature also carries two distractors
/// with weight 0.9 and above. Under inner product a distractor beats the
/// spread document's own self-match, while cosine and the distances still
/// rank the self-match first. The queries are the spread documents.
pub fn norm_heterogeneous_corpus<T: Weight>(seed: u64) -> Fixture<T> {
    const FEATURES: usize = 100;
    const SPREAD: usize = 100;
    let ids = feature_ids(FEATURES);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat = Gamma::new(1.0, 1.0).unwrap();
    let mut corpus = Vec::new();

    for (j, id) in ids.iter().enumerate() {
        for (k, head) in [0.95, 0.9].into_iter().enumerate() {
            let mut others: Vec<usize> = (0..FEATURES).filter(|&o| o != j).collect();
            others.shuffle(&mut rng);
            let tail = dirichlet(&mut rng, &flat, 3);
            let mut entries = vec![(id.clone(), T::lit(head))];
            for (o, t) in others[..3].iter().zip(tail) {
                entries.push((ids[*o].clone(), T::lit((1.0 - head) * t)));
            }
            let v = SparseVector::new(entries).expect("valid distractor");
            corpus.push((format!("distractor_{j:03}_{k}.jpg"), v));
        }
    }

    let mut queries = Vec::new();
    for d in 0..SPREAD {
        let mut feats: Vec<usize> = (0..FEATURES).collect();
        feats.shuffle(&mut rng);
        let head = rng.gen_range(0.35..0.45);
        let tail = dirichlet(&mut rng, &flat, 9);
        let mut entries = vec![(ids[feats[0]].clone(), T::lit(head))];
        for (o, t) in feats[1..10].iter().zip(tail) {
            entries.push((ids[*o].clone(), T::lit((1.0 - head) * (0.05 + 0.5 * t))));
        }
        let v = SparseVector::new(entries).expect("valid spread document");
        let name = format!("spread_{d:03}.jpg");
        queries.push(name.clone());
        corpus.push((name, v));
    }
    Fixture { corpus, queries }
}

/// `k_rerank` distractors that all out-score the single query document under
/// inner product, so the query's self-match sits at dot rank `k_rerank + 1`.
pub fn adversarial_rerank_corpus<T: Weight>(k_rerank: usize) -> Fixture<T> {
    let target =
        SparseVector::from_pairs(&[("a", T::lit(0.4)), ("b", T::lit(0.3)), ("c", T::lit(0.3))])
            .expect("valid target");
    let mut corpus = Vec::with_capacity(k_rerank + 1);
    for i in 0..k_rerank {
        // 0.4 * w > 0.34 = dot(target, target) for every w > 0.85
        let w = 0.95 - 0.09 * i as f64 / k_rerank.max(1) as f64;
        let v = SparseVector::from_pairs(&[
            ("a".to_owned(), T::lit(w)),
            (format!("z{i:06}"), T::lit(1.0 - w)),
        ])
        .expect("valid distractor");
        corpus.push((format!("distractor_{i:06}.jpg"), v));
    }
    corpus.push(("target.jpg".to_owned(), target));
    Fixture {
        corpus,
        queries: vec!["target.jpg".to_owned()],
    }
}
