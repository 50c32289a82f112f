//! Evaluation harness: synthetic corpora, query perturbations, MAP and
//! latency measurement over method x feature-number x perturbation grids.

mod experiment;
mod metrics;
mod perturb;
mod report;
mod synth;

use thiserror::Error;

use crate::engine::EngineError;

pub use experiment::{run_experiment, EvalRun, ExperimentConfig, Grid, Qrels};
pub use metrics::{average_precision, latency_report, mean_average_precision, LatencyReport};
pub use perturb::{perturb_query, PerturbationKind, PerturbationSpec, RESOLUTION_LEVELS};
pub use report::{build_report, Report, Sweep, Table, TableRow};
pub use synth::{
    adversarial_rerank_corpus, feature_ids, generate_corpus, generate_synthetic_corpus,
    norm_heterogeneous_corpus, Fixture, SynthParams, DEFAULT_CONCENTRATION,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("relevant set is empty")]
    EmptyRelevantSet,
    #[error("empty input list")]
    EmptyList,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("vector has no positive weight after perturbation")]
    ZeroVector,
    #[error("query {0:?} has no relevance judgments")]
    MissingQrels(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<EvalError>,
    },
}
