//! `nsix`: index, search and evaluate sparse softmax feature vectors.

mod error;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nsix_core::evalbench::{
    build_report, generate_corpus, run_experiment, ExperimentConfig, Grid, PerturbationKind, Qrels,
    SynthParams, DEFAULT_CONCENTRATION,
};
use nsix_core::invindex::{parse_jsonl, write_jsonl, IngestRecord};
use nsix_core::scoring::{
    euclid_distance_from_rank, manhattan_distance_from_score, DEFAULT_RERANK_K,
};
use nsix_core::{
    load_index, save_index, search, CandidateMode, Index, Query, ScoringMethod, Vector,
};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nsix",
    version,
    about = "Inverted-index search over sparse softmax feature vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index file from a JSON Lines corpus.
    Index(IndexArgs),
    /// Rank indexed documents against one query vector.
    Search(SearchArgs),
    /// Run a method x feature-number x perturbation grid and write MAP/latency reports.
    Eval(EvalArgs),
    /// Write a synthetic softmax-like corpus as JSON Lines.
    Gen(GenArgs),
    /// Print index statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only each document's N heaviest features.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_features: Option<u64>,
    /// Overwrite an existing index file.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// File holding exactly one JSON Lines record.
    #[arg(long)]
    query: PathBuf,
    /// dot, l1, l2, cos, cos-exact or dot+cos.
    #[arg(long, value_parser = parse_method)]
    method: ScoringMethod,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    top_k: u64,
    /// Keep only the query's M heaviest features.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    feature_number: Option<u64>,
    #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
    mode: CandidateMode,
    /// Inner-product window re-sorted by cosine under dot+cos.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rerank_k: Option<u64>,
    /// Also report the raw distance for l1 and l2.
    #[arg(long)]
    distance: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    /// JSON Lines query vectors; "f" is the query id.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated methods, e.g. dot,l1,l2,cos,dot+cos.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_method)]
    methods: Vec<ScoringMethod>,
    /// Comma-separated query feature numbers; "all" leaves queries untruncated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_feature_number)]
    feature_numbers: Vec<FeatureNumber>,
    /// Comma-separated perturbations: none, res:R, partial:Q.
    #[arg(long, value_delimiter = ',', default_value = "none", value_parser = parse_perturbation)]
    perturb: Vec<PerturbationKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    top_k: u64,
    #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
    mode: CandidateMode,
    /// Window for every dot+cos entry given without an explicit ":K".
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rerank_k: Option<u64>,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    min_samples: usize,
    /// Directory receiving report.json and report.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    docs: usize,
    #[arg(long, default_value_t = 1000)]
    features: usize,
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total Dirichlet concentration; smaller is more peaked.
    #[arg(long, default_value_t = DEFAULT_CONCENTRATION)]
    concentration: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy)]
struct FeatureNumber(Option<usize>);

fn parse_method(s: &str) -> Result<ScoringMethod, String> {
    s.parse()
        .map_err(|e: nsix_core::scoring::UnknownMethod| e.to_string())
}

fn parse_mode(s: &str) -> Result<CandidateMode, String> {
    s.parse()
}

fn parse_feature_number(s: &str) -> Result<FeatureNumber, String> {
    match s.trim() {
        "all" => Ok(FeatureNumber(None)),
        n => match n.parse::<usize>() {
            Ok(m) if m >= 1 => Ok(FeatureNumber(Some(m))),
            _ => Err(format!(
                "feature number {n:?} must be a positive integer or \"all\""
            )),
        },
    }
}

fn parse_perturbation(s: &str) -> Result<PerturbationKind, String> {
    s.parse()
        .map_err(|e: nsix_core::evalbench::EvalError| e.to_string())
}

fn with_rerank(method: ScoringMethod, k: Option<u64>, explicit: bool) -> ScoringMethod {
    match (method, k) {
        (ScoringMethod::DotThenCosRerank { .. }, Some(k)) if !explicit => {
            ScoringMethod::DotThenCosRerank {
                k_rerank: k as usize,
            }
        }
        _ => method,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path.display(), e))
}

fn load(path: &Path) -> Result<Index, CliError> {
    load_index(path).map_err(|e| match e {
        nsix_core::PersistError::Io(io) => CliError::io(path.display(), io),
        other => CliError::from(other),
    })
}

fn read_vectors(path: &Path) -> Result<Vec<(String, Vector)>, CliError> {
    parse_jsonl(open(path)?)?
        .into_iter()
        .map(|(line, rec)| {
            rec.to_vector()
                .map(|(v, _)| (rec.f.clone(), v))
                .map_err(|e| CliError::Data(format!("{}: line {line}: {e}", path.display())))
        })
        .collect()
}

fn print_json(out: &mut impl Write, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::io("stdout", e))
}

fn print_stats(idx: &Index, format: Format) -> Result<(), CliError> {
    let stats = serde_json::to_value(idx.stats()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = io::stdout().lock();
    match format {
        Format::Json => print_json(&mut out, &stats),
        Format::Table => {
            if let Value::Object(map) = stats {
                for (k, v) in map {
                    writeln!(out, "{k:<24} {v}").map_err(|e| CliError::io("stdout", e))?;
                }
            }
            Ok(())
        }
    }
}

fn cmd_index(a: IndexArgs) -> Result<(), CliError> {
    if a.out.exists() && !a.force {
        return Err(CliError::Runtime(format!(
            "{} already exists; pass --force to overwrite",
            a.out.display()
        )));
    }
    let mut idx = Index::with_max_features(a.max_features.map(|m| m as usize));
    idx.ingest_jsonl(open(&a.input)?)
        .map_err(|e| match CliError::from(e) {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", a.input.display())),
            other => other,
        })?;
    save_index(&idx, &a.out).map_err(|e| match e {
        nsix_core::PersistError::Io(io) => CliError::io(a.out.display(), io),
        other => CliError::from(other),
    })?;
    print_stats(&idx, a.format)
}

fn cmd_search(a: SearchArgs) -> Result<(), CliError> {
    let idx = load(&a.index)?;
    let mut queries = read_vectors(&a.query)?;
    if queries.len() != 1 {
        return Err(CliError::Data(format!(
            "{}: expected exactly one query record, found {}",
            a.query.display(),
            queries.len()
        )));
    }
    let (_, vector) = queries.remove(0);
    let method = with_rerank(a.method, a.rerank_k, false);
    let spec = Query::new(vector, method, a.top_k as usize)
        .with_feature_number(a.feature_number.map(|m| m as usize))
        .with_mode(a.mode);
    let query_l2sq = spec.effective_vector().l2_squared();
    let hits = search(&idx, &spec)?;

    let mut out = BufWriter::new(io::stdout().lock());
    let distance = |score: f64| match method {
        ScoringMethod::Manhattan => Some(manhattan_distance_from_score(score)),
        ScoringMethod::Euclid => Some(euclid_distance_from_rank(score, query_l2sq)),
        _ => None,
    };
    for (rank, hit) in hits.iter().enumerate() {
        let d = if a.distance {
            distance(hit.score)
        } else {
            None
        };
        match a.format {
            Format::Json => {
                let mut row =
                    json!({ "rank": rank + 1, "file": hit.file_name, "score": hit.score });
                if let Some(d) = d {
                    row["distance"] = json!(d);
                }
                print_json(&mut out, &row)?;
            }
            Format::Table => {
                let extra = d.map_or_else(String::new, |d| format!("  {d:.9}"));
                writeln!(
                    out,
                    "{:>5}  {:<32}  {:.9}{extra}",
                    rank + 1,
                    hit.file_name,
                    hit.score
                )
                .map_err(|e| CliError::io("stdout", e))?;
            }
        }
    }
    out.flush().map_err(|e| CliError::io("stdout", e))
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let idx = load(&a.index)?;
    let queries = read_vectors(&a.queries)?;
    let qrels = Qrels::read_jsonl(open(&a.qrels)?).map_err(|e| match e {
        nsix_core::evalbench::EvalError::Io(msg) => {
            CliError::Runtime(format!("{}: {msg}", a.qrels.display()))
        }
        other => CliError::Data(format!("{}: {other}", a.qrels.display())),
    })?;
    let grid = Grid {
        methods: a
            .methods
            .iter()
            .map(|&m| with_rerank(m, a.rerank_k, is_explicit(m)))
            .collect(),
        feature_numbers: a.feature_numbers.iter().map(|f| f.0).collect(),
        perturbations: a.perturb.clone(),
    };
    let cfg = ExperimentConfig {
        top_k: a.top_k as usize,
        candidate_mode: a.mode,
        seed: a.seed,
        warmup: a.warmup,
        min_samples: a.min_samples,
    };
    let report = build_report(run_experiment(&idx, &queries, &qrels, &grid, &cfg)?);

    fs::create_dir_all(&a.out).map_err(|e| CliError::io(a.out.display(), e))?;
    let json_path = a.out.join("report.json");
    let text_path = a.out.join("report.txt");
    let text = report.render_text();
    fs::write(&json_path, report.to_json() + "\n")
        .map_err(|e| CliError::io(json_path.display(), e))?;
    fs::write(&text_path, &text).map_err(|e| CliError::io(text_path.display(), e))?;
    print!("{text}");
    Ok(())
}

fn is_explicit(m: ScoringMethod) -> bool {
    matches!(m, ScoringMethod::DotThenCosRerank { k_rerank } if k_rerank != DEFAULT_RERANK_K)
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let params = SynthParams {
        concentration: a.concentration,
        ..SynthParams::new(a.docs, a.features, a.sparsity, a.seed)
    };
    let corpus: Vec<(String, Vector)> = generate_corpus(&params)?;
    let records: Vec<IngestRecord> = corpus
        .iter()
        .map(|(n, v)| IngestRecord::from_vector(n.clone(), v))
        .collect();
    let file = File::create(&a.out).map_err(|e| CliError::io(a.out.display(), e))?;
    write_jsonl(&records, BufWriter::new(file)).map_err(|e| CliError::io(a.out.display(), e))
}

fn cmd_stats(a: StatsArgs) -> Result<(), CliError> {
    print_stats(&load(&a.index)?, a.format)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nsix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
