use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};

use super::metrics::{average_precision, latency_report, mean_average_precision};
use super::perturb::{perturb_query, PerturbationKind, PerturbationSpec};
use super::EvalError;
use crate::engine::{search, CandidateMode, QuerySpec};
use crate::invindex::InvertedIndex;
use crate::num::Weight;
use crate::scoring::ScoringMethod;
use crate::vecmodel::{FeatureId, SparseVector};

/// Relevance judgments: query id to relevant file names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels(BTreeMap<String, BTreeSet<String>>);

#[derive(Debug, Serialize, Deserialize)]
struct QrelsLine {
    query: String,
    relevant: Vec<String>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Each query is relevant only to itself.
    pub fn self_retrieval<S: AsRef<str>>(queries: impl IntoIterator<Item = S>) -> Self {
        Self(
            queries
                .into_iter()
                .map(|q| {
                    (
                        q.as_ref().to_owned(),
                        BTreeSet::from([q.as_ref().to_owned()]),
                    )
                })
                .collect(),
        )
    }

    pub fn insert(&mut self, query: &str, relevant: BTreeSet<String>) -> Result<(), EvalError> {
        if relevant.is_empty() {
            return Err(EvalError::EmptyRelevantSet);
        }
        if self.0.insert(query.to_owned(), relevant).is_some() {
            return Err(EvalError::InvalidParams(format!(
                "duplicate qrels entry for {query:?}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, query: &str) -> Option<&BTreeSet<String>> {
        self.0.get(query)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reads `{"query": ..., "relevant": [...]}` lines.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, EvalError> {
        let mut out = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvalError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: QrelsLine = serde_json::from_str(&line)
                .map_err(|e| EvalError::InvalidParams(format!("qrels line {}: {e}", i + 1)))?;
            out.insert(&rec.query, rec.relevant.into_iter().collect())
                .map_err(|e| EvalError::InvalidParams(format!("qrels line {}: {e}", i + 1)))?;
        }
        Ok(out)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (query, relevant) in &self.0 {
            let line = QrelsLine {
                query: query.clone(),
                relevant: relevant.iter().cloned().collect(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Cartesian product of methods, query feature numbers and perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub methods: Vec<ScoringMethod>,
    /// `None` scores the untruncated query.
    pub feature_numbers: Vec<Option<usize>>,
    pub perturbations: Vec<PerturbationKind>,
}

impl Grid {
    pub fn cells(&self) -> usize {
        self.methods.len() * self.feature_numbers.len() * self.perturbations.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub top_k: usize,
    pub candidate_mode: CandidateMode,
    pub seed: u64,
    /// Discarded searches per cell before timing.
    pub warmup: usize,
    /// Minimum timed searches per cell; queries are cycled to reach it.
    pub min_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            top_k: 100,
            candidate_mode: CandidateMode::Exhaustive,
            seed: 0,
            warmup: 3,
            min_samples: 10,
        }
    }
}

fn serialize_method<S: Serializer>(m: &ScoringMethod, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.label())
}

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRun {
    #[serde(serialize_with = "serialize_method")]
    pub method: ScoringMethod,
    pub rerank_k: Option<usize>,
    pub feature_number: Option<usize>,
    pub top_k: usize,
    pub perturbation: PerturbationSpec,
    pub per_query_ap: Vec<f64>,
    pub map: f64,
    pub latency_mean_s: f64,
    pub latency_p50_s: f64,
    pub latency_p95_s: f64,
    pub latency_samples: Vec<f64>,
}

/// Runs every grid cell in order (perturbation, feature number, method).
///
/// Per cell: perturb each query, search with the cell's method and query
/// truncation, score AP against `qrels`, and time the search calls alone.
pub fn run_experiment<T: Weight>(
    idx: &InvertedIndex<T>,
    queries: &[(String, SparseVector<T>)],
    qrels: &Qrels,
    grid: &Grid,
    cfg: &ExperimentConfig,
) -> Result<Vec<EvalRun>, EvalError> {
    if queries.is_empty() {
        return Err(EvalError::EmptyList);
    }
    if grid.cells() == 0 {
        return Err(EvalError::InvalidParams("empty experiment grid".into()));
    }
    if grid.feature_numbers.contains(&Some(0)) {
        return Err(EvalError::InvalidParams(
            "feature numbers must be positive".into(),
        ));
    }
    for (id, _) in queries {
        if qrels.get(id).is_none() {
            return Err(EvalError::MissingQrels(id.clone()));
        }
    }
    let universe: Vec<FeatureId> = idx.feature_ids().cloned().collect();
    let mut runs = Vec::with_capacity(grid.cells());

    for &kind in &grid.perturbations {
        kind.validate()?;
        let spec = PerturbationSpec::new(kind, cfg.seed);
        let perturbed = queries
            .iter()
            .enumerate()
            .map(|(i, (id, v))| {
                perturb_query(v, &spec.for_query(i), &universe).map(|p| (id.as_str(), p))
            })
            .collect::<Result<Vec<_>, _>>()?;

        for &feature_number in &grid.feature_numbers {
            for &method in &grid.methods {
                let cell = format!(
                    "{method} / m={} / {kind}",
                    feature_number.map_or("all".into(), |m| m.to_string())
                );
                let specs: Vec<(&str, QuerySpec<T>)> = perturbed
                    .iter()
                    .map(|(id, v)| {
                        let q = QuerySpec::new(v.clone(), method, cfg.top_k)
                            .with_feature_number(feature_number)
                            .with_mode(cfg.candidate_mode);
                        (*id, q)
                    })
                    .collect();
                let run = run_cell(idx, &specs, qrels, cfg).map_err(|e| EvalError::Cell {
                    cell: cell.clone(),
                    source: Box::new(e),
                })?;
                runs.push(EvalRun {
                    method,
                    rerank_k: method.rerank_k(),
                    feature_number,
                    top_k: cfg.top_k,
                    perturbation: spec,
                    ..run
                });
            }
        }
    }
    Ok(runs)
}

fn run_cell<T: Weight>(
    idx: &InvertedIndex<T>,
    specs: &[(&str, QuerySpec<T>)],
    qrels: &Qrels,
    cfg: &ExperimentConfig,
) -> Result<EvalRun, EvalError> {
    for i in 0..cfg.warmup {
        search(idx, &specs[i % specs.len()].1)?;
    }
    let mut aps = Vec::with_capacity(specs.len());
    let mut samples = Vec::with_capacity(specs.len().max(cfg.min_samples));
    let mut i = 0;
    while i < specs.len() || samples.len() < cfg.min_samples {
        let (id, q) = &specs[i % specs.len()];
        let start = Instant::now();
        let hits = search(idx, q)?;
        samples.push(start.elapsed().as_secs_f64());
        if i < specs.len() {
            let ranked: Vec<&str> = hits.iter().map(|h| h.file_name.as_str()).collect();
            let relevant = qrels
                .get(id)
                .ok_or_else(|| EvalError::MissingQrels(id.to_string()))?;
            aps.push(average_precision(&ranked, relevant)?);
        }
        i += 1;
    }
    let lat = latency_report(&samples)?;
    Ok(EvalRun {
        method: specs[0].1.method,
        rerank_k: None,
        feature_number: None,
        top_k: cfg.top_k,
        perturbation: PerturbationSpec::default(),
        map: mean_average_precision(&aps)?,
        per_query_ap: aps,
        latency_mean_s: lat.mean,
        latency_p50_s: lat.p50,
        latency_p95_s: lat.p95,
        latency_samples: samples,
    })
}
