//! Dense brute-force reference implementations shared by the integration
//! tests. Nothing here touches the index or the engine.

#![allow(dead_code)]

use std::cmp::Ordering;

use nsix_core::evalbench::feature_ids;
use nsix_core::{Index, ScoringMethod, Vector};

/// `v` as a dense array over `f0000 .. f{n-1}`.
pub fn densify(v: &Vector, n_features: usize) -> Vec<f64> {
    let ids = feature_ids(n_features);
    let mut out = vec![0.0; n_features];
    for (id, w) in v.iter() {
        let i = ids.binary_search(id).expect("feature inside the universe");
        out[i] = w;
    }
    out
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b)
}

pub fn l2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / (l2(x) * l2(y))
}

/// Query dotted with the L2-normalized document.
pub fn cosine_unit_doc(x: &[f64], y: &[f64]) -> f64 {
    let n = l2(y);
    x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * (b / n))
}

pub fn manhattan(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

pub fn euclid_squared(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Reference ranking and engine-comparable scores for one query.
///
/// Distances rank ascending, similarities descending; ties go to the lower
/// document id. Manhattan scores are `2 - d`, Euclid scores `||x||^2 - d^2`.
pub fn rank(method: ScoringMethod, x: &[f64], docs: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let mut keyed: Vec<(usize, f64, f64)> = docs
        .iter()
        .enumerate()
        .map(|(i, y)| match method {
            ScoringMethod::Dot => {
                let s = dot(x, y);
                (i, -s, s)
            }
            ScoringMethod::CosineExact => {
                let s = cosine(x, y);
                (i, -s, s)
            }
            ScoringMethod::CosineIndexed => {
                let s = cosine_unit_doc(x, y);
                (i, -s, s)
            }
            ScoringMethod::Manhattan => {
                let d = manhattan(x, y);
                (i, d, 2.0 - d)
            }
            ScoringMethod::Euclid => {
                let d2 = euclid_squared(x, y);
                (i, d2, dot(x, x) - d2)
            }
            ScoringMethod::DotThenCosRerank { .. } => unimplemented!("no dense form"),
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    keyed.into_iter().map(|(i, _, s)| (i, s)).collect()
}

pub fn build_index(corpus: &[(String, Vector)]) -> Index {
    let mut idx = Index::new();
    for (name, v) in corpus {
        idx.index_document(name, v.clone(), None)
            .expect("valid document");
    }
    idx
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
