use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{derive_seed, simulate_model, ModelSpec, SimulatedData};
use super::ise::{ise, match_loadings};
use crate::error::{FdfError, Result};
use crate::factor::{fit_nonstationary, fit_pca_baseline, fit_stationary, Estimator, FdfFit, FitMode, FitOptions, KRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model_id: u8,
    pub n: usize,
    /// Grid size of the simulated curves.
    pub m: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub noise_scale: f64,
    pub estimators: Vec<Estimator>,
    pub k_rules: Vec<KRule>,
    pub fit: FitOptions,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(model_id: u8, n: usize, reps: usize, master_seed: u64) -> Self {
        Self {
            model_id,
            n,
            m: 101,
            reps,
            master_seed,
            noise_scale: 1.0,
            estimators: vec![Estimator::Fdf, Estimator::Pca],
            k_rules: vec![KRule::Ratio, KRule::Scree],
            fit: FitOptions::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<ModelSpec> {
        let spec = ModelSpec::new(self.model_id)?;
        if self.reps == 0 {
            return Err(FdfError::Parameter("reps must be at least 1".into()));
        }
        if self.n < 50 {
            return Err(FdfError::InsufficientData { needed: 50, got: self.n });
        }
        if self.estimators.is_empty() && self.k_rules.is_empty() {
            return Err(FdfError::Parameter("nothing to evaluate: no estimators and no rules".into()));
        }
        Ok(spec)
    }
}

/// Per-loading ISE of one estimator, in the order of the true loadings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IseRecord {
    pub estimator: Estimator,
    pub values: Option<Vec<f64>>,
}

/// Factor counts chosen by one rule from an unrestricted fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub rule: KRule,
    pub k_hat: Option<usize>,
    /// Only for nonstationary models.
    pub r_hat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub model_id: u8,
    pub rep_index: usize,
    pub seed: u64,
    pub n: usize,
    pub ise: Vec<IseRecord>,
    pub counts: Vec<CountRecord>,
    /// Failures of any part of the replication, `;`-separated.
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

impl RepRecord {
    pub fn ise_for(&self, estimator: Estimator) -> Option<&[f64]> {
        self.ise.iter().find(|r| r.estimator == estimator).and_then(|r| r.values.as_deref())
    }

    pub fn count_for(&self, rule: KRule) -> Option<&CountRecord> {
        self.counts.iter().find(|c| c.rule == rule)
    }

    /// Same record with the timing field zeroed.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_ms: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub k_true: usize,
    pub r_true: usize,
    /// Sorted by `rep_index`.
    pub records: Vec<RepRecord>,
}

impl SimResult {
    /// ISE values of loading `k` (0-based) across successful replications.
    pub fn ise_values(&self, estimator: Estimator, k: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.ise_for(estimator).and_then(|v| v.get(k).copied()))
            .collect()
    }

    /// Fraction of replications whose counts under `rule` satisfy `pred(k_hat, r_hat)`.
    /// Failed replications count as misses.
    pub fn count_fraction<F: Fn(usize, Option<usize>) -> bool>(&self, rule: KRule, pred: F) -> f64 {
        let hits = self
            .records
            .iter()
            .filter(|r| match r.count_for(rule) {
                Some(CountRecord { k_hat: Some(k), r_hat, .. }) => pred(*k, *r_hat),
                _ => false,
            })
            .count();
        hits as f64 / self.records.len().max(1) as f64
    }

    pub fn n_failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Median with the average of the two middle values for even lengths;
/// `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn fit_with(data: &SimulatedData, mode: FitMode, estimator: Estimator, opts: &FitOptions) -> Result<FdfFit> {
    match (estimator, mode) {
        (Estimator::Fdf, FitMode::Stationary) => fit_stationary(&data.sample, opts),
        (Estimator::Fdf, FitMode::Nonstationary) => fit_nonstationary(&data.sample, opts),
        (Estimator::Pca, mode) => fit_pca_baseline(&data.sample, mode, opts),
    }
}

fn score_fit(data: &SimulatedData, fit: &FdfFit) -> Result<Vec<f64>> {
    let grid = data.sample.grid();
    let pairing = match_loadings(&data.loadings, fit.loadings.curves(), grid)?;
    pairing
        .iter()
        .zip(&data.loadings)
        .map(|(idx, truth)| match idx {
            Some(i) => ise(truth, &fit.loadings.curves()[*i], grid),
            None => Err(FdfError::Numeric("fewer estimated loadings than true loadings".into())),
        })
        .collect()
}

fn run_rep(config: &SimConfig, spec: &ModelSpec, rep_index: usize) -> RepRecord {
    let start = Instant::now();
    let seed = derive_seed(config.master_seed, rep_index as u64);
    let mode = if spec.is_nonstationary() { FitMode::Nonstationary } else { FitMode::Stationary };
    let mut errors = Vec::new();
    let mut ise_records = Vec::new();
    let mut counts = Vec::new();

    match simulate_model(config.model_id, config.n, config.m, seed, config.noise_scale) {
        Ok(data) => {
            let forced = FitOptions {
                forced_k: Some(spec.k()),
                forced_r: spec.is_nonstationary().then(|| spec.r()),
                ..config.fit.clone()
            };
            for &est in &config.estimators {
                let values = fit_with(&data, mode, est, &forced).and_then(|f| score_fit(&data, &f));
                ise_records.push(IseRecord {
                    estimator: est,
                    values: values.map_err(|e| errors.push(format!("{est:?}: {e}"))).ok(),
                });
            }
            for &rule in &config.k_rules {
                let opts = FitOptions { k_rule: rule, forced_k: None, forced_r: None, ..config.fit.clone() };
                let fit = fit_with(&data, mode, Estimator::Fdf, &opts);
                counts.push(match fit {
                    Ok(f) => CountRecord {
                        rule,
                        k_hat: Some(f.k_hat),
                        r_hat: (mode == FitMode::Nonstationary).then_some(f.r_hat),
                    },
                    Err(e) => {
                        errors.push(format!("{}: {e}", rule.label()));
                        CountRecord { rule, k_hat: None, r_hat: None }
                    }
                });
            }
        }
        Err(e) => errors.push(format!("simulate: {e}")),
    }

    RepRecord {
        model_id: config.model_id,
        rep_index,
        seed,
        n: config.n,
        ise: ise_records,
        counts,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Simulate `reps` replications of the configured model, fitting every
/// requested estimator with the true counts imposed (ISE) and the FDF
/// estimator once per count rule (`K̂`, `r̂`). Failures are recorded in the
/// row and the run continues. Output does not depend on the thread count.
pub fn run_monte_carlo(config: &SimConfig) -> Result<SimResult> {
    let spec = config.validate()?;
    let work = || -> Vec<RepRecord> {
        let mut records: Vec<RepRecord> =
            (0..config.reps).into_par_iter().map(|i| run_rep(config, &spec, i)).collect();
        records.sort_by_key(|r| r.rep_index);
        records
    };
    let records = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| FdfError::Parameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(SimResult { config: config.clone(), k_true: spec.k(), r_true: spec.r(), records })
}
