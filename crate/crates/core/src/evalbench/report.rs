//! Method-by-sweep tables in JSON and aligned text.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use super::experiment::EvalRun;
use super::perturb::PerturbationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    FeatureNumber,
    Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub metric: String,
    pub sweep: Sweep,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub method: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub runs: Vec<EvalRun>,
    pub tables: Vec<Table>,
}

type Metric = fn(&EvalRun) -> f64;

fn fnum_label(m: Option<usize>) -> String {
    m.map_or_else(|| "all".to_owned(), |m| m.to_string())
}

fn fnum_cmp(a: &Option<usize>, b: &Option<usize>) -> Ordering {
    // untruncated sorts last, as the largest feature number
    a.unwrap_or(usize::MAX).cmp(&b.unwrap_or(usize::MAX))
}

fn kind_cmp(a: &PerturbationKind, b: &PerturbationKind) -> Ordering {
    let (ka, kb) = (a.sort_key(), b.sort_key());
    ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
}

fn method_rows(runs: &[&EvalRun]) -> Vec<String> {
    let mut methods: Vec<(usize, String)> = runs
        .iter()
        .map(|r| (r.method.table_rank(), r.method.to_string()))
        .collect();
    methods.sort();
    methods.dedup();
    methods.into_iter().map(|(_, m)| m).collect()
}

/// Pivots runs into MAP and mean-latency tables.
///
/// A grid with several perturbations and one feature number is swept over
/// perturbations; anything else gets one feature-number table per
/// perturbation.
pub fn build_report(runs: Vec<EvalRun>) -> Report {
    let mut fnums: Vec<Option<usize>> = runs.iter().map(|r| r.feature_number).collect();
    fnums.sort_by(fnum_cmp);
    fnums.dedup();
    let mut kinds: Vec<PerturbationKind> = runs.iter().map(|r| r.perturbation.kind).collect();
    kinds.sort_by(kind_cmp);
    kinds.dedup();

    let metrics: [(&str, Metric); 2] =
        [("map", |r| r.map), ("latency_mean_s", |r| r.latency_mean_s)];
    let mut tables = Vec::new();

    if kinds.len() > 1 && fnums.len() == 1 {
        let all: Vec<&EvalRun> = runs.iter().collect();
        let rows = method_rows(&all);
        for (metric, get) in metrics {
            tables.push(Table {
                title: format!(
                    "{metric} by perturbation, feature number {}",
                    fnum_label(fnums[0])
                ),
                metric: metric.to_owned(),
                sweep: Sweep::Perturbation,
                columns: kinds.iter().map(ToString::to_string).collect(),
                rows: rows
                    .iter()
                    .map(|m| TableRow {
                        method: m.clone(),
                        values: kinds
                            .iter()
                            .map(|k| {
                                all.iter()
                                    .find(|r| {
                                        r.method.to_string() == *m && r.perturbation.kind == *k
                                    })
                                    .map(|r| get(r))
                            })
                            .collect(),
                    })
                    .collect(),
            });
        }
    } else {
        for kind in &kinds {
            let subset: Vec<&EvalRun> = runs
                .iter()
                .filter(|r| r.perturbation.kind == *kind)
                .collect();
            let rows = method_rows(&subset);
            for (metric, get) in metrics {
                tables.push(Table {
                    title: format!("{metric} by feature number, perturbation {kind}"),
                    metric: metric.to_owned(),
                    sweep: Sweep::FeatureNumber,
                    columns: fnums.iter().map(|m| fnum_label(*m)).collect(),
                    rows: rows
                        .iter()
                        .map(|m| TableRow {
                            method: m.clone(),
                            values: fnums
                                .iter()
                                .map(|f| {
                                    subset
                                        .iter()
                                        .find(|r| {
                                            r.method.to_string() == *m && r.feature_number == *f
                                        })
                                        .map(|r| get(r))
                                })
                                .collect(),
                        })
                        .collect(),
                });
            }
        }
    }
    Report { runs, tables }
}

impl Report {
    /// Compact JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    /// Same as [`to_json`](Self::to_json) minus timing fields, for
    /// reproducibility checks.
    pub fn to_json_without_timing(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(runs) = value.get_mut("runs").and_then(|r| r.as_array_mut()) {
            for run in runs {
                if let Some(obj) = run.as_object_mut() {
                    obj.retain(|k, _| !k.starts_with("latency"));
                }
            }
        }
        if let Some(tables) = value.get_mut("tables").and_then(|t| t.as_array_mut()) {
            tables.retain(|t| t.get("metric").and_then(|m| m.as_str()) == Some("map"));
        }
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            let precision = if t.metric == "map" { 3 } else { 6 };
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    r.values
                        .iter()
                        .map(|v| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.precision$}")))
                        .collect()
                })
                .collect();
            let first = t
                .rows
                .iter()
                .map(|r| r.method.len())
                .chain([6])
                .max()
                .unwrap_or(6);
            let widths: Vec<usize> = t
                .columns
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    cells
                        .iter()
                        .map(|row| row[j].len())
                        .chain([c.len()])
                        .max()
                        .unwrap_or(1)
                })
                .collect();
            let _ = writeln!(out, "{}", t.title);
            let mut header = format!("{:<first$}", "method");
            for (c, w) in t.columns.iter().zip(&widths) {
                let _ = write!(header, "  {c:>w$}");
            }
            let _ = writeln!(out, "{header}");
            let _ = writeln!(out, "{}", "-".repeat(header.len()));
            for (row, vals) in t.rows.iter().zip(&cells) {
                let mut line = format!("{:<first$}", row.method);
                for (v, w) in vals.iter().zip(&widths) {
                    let _ = write!(line, "  {v:>w$}");
                }
                let _ = writeln!(out, "{line}");
            }
            out.push('\n');
        }
        out
    }
}
