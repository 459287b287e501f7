//! CSV tables for simulation output: per-replication results, the summary
//! table, timings, and the boxplot statistics produced by `fdf report`.

use std::collections::BTreeMap;
use std::path::Path;

use fdf_core::sim::median;
use fdf_core::{Estimator, KRule, SimResult};

use crate::error::{CliError, CliResult};

pub fn estimator_label(e: Estimator) -> &'static str {
    match e {
        Estimator::Fdf => "fdf",
        Estimator::Pca => "pca",
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| {
        CliError::Output(format!("{}: {e}", path.display()))
    })?;
    let err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per replication. Rows depend only on the configuration, never on
/// timing or thread count.
pub fn write_results(path: &Path, res: &SimResult) -> CliResult<()> {
    let k = res.k_true;
    let mut header: Vec<String> = ["model", "rep", "seed", "n"].map(String::from).to_vec();
    for &e in &res.config.estimators {
        for j in 1..=k {
            header.push(format!("ise_{}_{j}", estimator_label(e)));
        }
    }
    for &r in &res.config.k_rules {
        header.push(format!("k_hat_{}", r.label()));
        header.push(format!("r_hat_{}", r.label()));
    }
    header.push("error".into());

    let rows: Vec<Vec<String>> = res
        .records
        .iter()
        .map(|rec| {
            let mut row = vec![
                rec.model_id.to_string(),
                rec.rep_index.to_string(),
                rec.seed.to_string(),
                rec.n.to_string(),
            ];
            for &e in &res.config.estimators {
                let vals = rec.ise_for(e);
                for j in 0..k {
                    row.push(cell(vals.and_then(|v| v.get(j))));
                }
            }
            for &r in &res.config.k_rules {
                let c = rec.count_for(r);
                row.push(cell(c.and_then(|c| c.k_hat)));
                row.push(cell(c.and_then(|c| c.r_hat)));
            }
            row.push(rec.error.clone().unwrap_or_default());
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub fn write_timing(path: &Path, res: &SimResult) -> CliResult<()> {
    let header = vec!["rep".to_string(), "wall_time_ms".to_string()];
    let rows: Vec<Vec<String>> =
        res.records.iter().map(|r| vec![r.rep_index.to_string(), format!("{:.3}", r.wall_time_ms)]).collect();
    write_rows(path, &header, &rows)
}

/// Medians of the ISE per estimator and loading, then the distribution of
/// the selected counts per rule (`K̂`, `r̂`, `K̂ − r̂`).
pub fn write_summary(path: &Path, res: &SimResult) -> CliResult<()> {
    let header: Vec<String> = [
        "model", "n", "reps", "failed", "section", "method", "index", "median_ise", "K_hat", "r_hat",
        "K_minus_r_hat",
    ]
    .map(String::from)
    .to_vec();
    let cfg = &res.config;
    let base = vec![cfg.model_id.to_string(), cfg.n.to_string(), cfg.reps.to_string(), res.n_failed().to_string()];
    let mut rows = Vec::new();
    for &e in &cfg.estimators {
        for j in 0..res.k_true {
            let mut row = base.clone();
            let vals = res.ise_values(e, j);
            row.extend([
                "ise".into(),
                estimator_label(e).into(),
                (j + 1).to_string(),
                if vals.is_empty() { String::new() } else { median(&vals).to_string() },
                String::new(),
                String::new(),
                String::new(),
            ]);
            rows.push(row);
        }
    }
    let nonstationary = res.r_true > 0;
    let top = res
        .records
        .iter()
        .flat_map(|r| r.counts.iter().filter_map(|c| c.k_hat))
        .max()
        .unwrap_or(0)
        .max(cfg.fit.k0);
    for &rule in &cfg.k_rules {
        for c in 0..=top {
            let mut row = base.clone();
            let k = res.count_fraction(rule, |k, _| k == c);
            let (r, s) = if nonstationary {
                (
                    res.count_fraction(rule, |_, r| r == Some(c)).to_string(),
                    res.count_fraction(rule, |k, r| r.is_some_and(|r| k >= r && k - r == c)).to_string(),
                )
            } else {
                (String::new(), String::new())
            };
            row.extend(["counts".into(), rule.label().into(), c.to_string(), String::new(), k.to_string(), r, s]);
            rows.push(row);
        }
    }
    write_rows(path, &header, &rows)
}

/// ISE samples and count columns recovered from a results.csv.
#[derive(Debug, Clone, Default)]
pub struct ParsedResults {
    /// `(estimator, loading)` → values from successful replications.
    pub ise: BTreeMap<(String, usize), Vec<f64>>,
    /// Column name (`k_hat_ratio`, ...) → values.
    pub counts: BTreeMap<String, Vec<usize>>,
    pub rows: usize,
}

pub fn read_results(path: &Path) -> CliResult<ParsedResults> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
    let header = reader.headers().map_err(|e| CliError::Parse { row: 1, column: 1, message: e.to_string() })?.clone();
    for required in ["model", "rep"] {
        if !header.iter().any(|h| h == required) {
            return Err(CliError::Schema(format!("results file lacks a '{required}' column")));
        }
    }
    enum Col {
        Ise(String, usize),
        Count(String),
        Other,
    }
    let cols: Vec<Col> = header
        .iter()
        .map(|h| {
            if let Some(rest) = h.strip_prefix("ise_") {
                if let Some((est, k)) = rest.rsplit_once('_') {
                    if let Ok(k) = k.parse::<usize>() {
                        return Col::Ise(est.to_string(), k);
                    }
                }
            }
            if h.starts_with("k_hat_") || h.starts_with("r_hat_") {
                return Col::Count(h.to_string());
            }
            Col::Other
        })
        .collect();
    if !cols.iter().any(|c| matches!(c, Col::Ise(..))) {
        return Err(CliError::Schema("results file has no ise_<estimator>_<k> columns".into()));
    }

    let mut out = ParsedResults::default();
    for c in &cols {
        match c {
            Col::Ise(e, k) => {
                out.ise.entry((e.clone(), *k)).or_default();
            }
            Col::Count(name) => {
                out.counts.entry(name.clone()).or_default();
            }
            Col::Other => {}
        }
    }
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::Parse { row, column: 1, message: e.to_string() })?;
        if rec.len() != cols.len() {
            return Err(CliError::Schema(format!("row {row} has {} fields, header has {}", rec.len(), cols.len())));
        }
        for (j, (c, field)) in cols.iter().zip(rec.iter()).enumerate() {
            if field.is_empty() {
                continue;
            }
            let bad = || CliError::Parse { row, column: j + 1, message: format!("'{field}' is not a number") };
            match c {
                Col::Ise(e, k) => {
                    let v: f64 = field.parse().map_err(|_| bad())?;
                    out.ise.get_mut(&(e.clone(), *k)).expect("registered").push(v);
                }
                Col::Count(name) => {
                    let v: usize = field.parse().map_err(|_| bad())?;
                    out.counts.get_mut(name).expect("registered").push(v);
                }
                Col::Other => {}
            }
        }
        out.rows += 1;
    }
    Ok(out)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiveNumber {
    pub estimator: String,
    pub loading: usize,
    pub reps: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn five_number(estimator: &str, loading: usize, values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(FiveNumber {
        estimator: estimator.into(),
        loading,
        reps: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

pub fn write_boxplot_summary(path: &Path, stats: &[FiveNumber]) -> CliResult<()> {
    let header: Vec<String> =
        ["estimator", "loading", "reps", "min", "q1", "median", "q3", "max"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.estimator.clone(),
                s.loading.to_string(),
                s.reps.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
            ]
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub fn write_count_summary(path: &Path, parsed: &ParsedResults) -> CliResult<()> {
    let header: Vec<String> = ["column", "value", "proportion"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for (name, values) in &parsed.counts {
        let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
        for v in values {
            *tally.entry(*v).or_default() += 1;
        }
        for (v, c) in tally {
            rows.push(vec![name.clone(), v.to_string(), (c as f64 / parsed.rows.max(1) as f64).to_string()]);
        }
    }
    write_rows(path, &header, &rows)
}

pub fn rule_from_label(label: &str) -> Option<KRule> {
    [KRule::Ratio, KRule::Scree, KRule::ScreeLiteral].into_iter().find(|r| r.label() == label)
}
