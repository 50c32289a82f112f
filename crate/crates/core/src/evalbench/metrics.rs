use std::collections::BTreeSet;

use serde::Serialize;

use super::EvalError;

/// Mean over relevant items of the precision at each relevant item's rank.
/// Relevant items missing from `ranked` contribute 0.
pub fn average_precision<R: AsRef<str>>(
    ranked: &[R],
    relevant: &BTreeSet<String>,
) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::EmptyRelevantSet);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, name) in ranked.iter().enumerate() {
        if relevant.contains(name.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64, EvalError> {
    if aps.is_empty() {
        return Err(EvalError::EmptyList);
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Latency summary in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyReport {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub samples: usize,
}

/// Mean plus nearest-rank 50th and 95th percentiles.
pub fn latency_report(samples: &[f64]) -> Result<LatencyReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyList);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = |p: f64| {
        let r = (p / 100.0 * sorted.len() as f64).ceil() as usize;
        sorted[r.clamp(1, sorted.len()) - 1]
    };
    Ok(LatencyReport {
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        p50: rank(50.0),
        p95: rank(95.0),
        samples: samples.len(),
    })
}
