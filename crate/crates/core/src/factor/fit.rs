use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::count::KRule;
use super::diagnostics::{independence_test, stationarity_test, TestRecord};
use super::loadings::{
    extract_loadings, factor_scores, pca_loadings, refine_by_regression, residual_series, Block,
    LoadingSet,
};
use crate::cov::{
    bartlett_weight, cov0_spectrum, longrun_kernel, select_bandwidth, select_p, LambdaOperator,
    LongRunVariant, POSITIVE_EIGEN_TOL,
};
use crate::error::{FdfError, Result};
use crate::fts::FunctionalSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Stationary,
    Nonstationary,
}

/// Which operator supplies the loadings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Eigenfunctions of `Λ̂ = (Γ̂ − Γ̂₀) Γ̂₀⁻¹`.
    Fdf,
    /// Eigenfunctions of `Γ̂₀` (functional PCA baseline).
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of candidate eigenpairs examined by the count rules.
    pub k0: usize,
    pub bandwidth: Option<f64>,
    /// Cumulative `Γ̂₀` eigenvalue share that fixes the truncation level.
    pub p_share: f64,
    pub p_max: usize,
    /// Lower bound on the truncation level (raised to the forced count).
    pub p_min: usize,
    pub k_rule: KRule,
    pub longrun: LongRunVariant,
    /// Level of the independence gate in the nonstationary fit.
    pub alpha_gate: f64,
    pub lag_horizon: usize,
    pub proj_dim: usize,
    /// Fix the total number of factors instead of estimating it.
    pub forced_k: Option<usize>,
    /// Fix the number of nonstationary factors instead of estimating it.
    pub forced_r: Option<usize>,
    /// Re-estimate the nonstationary loadings by regressing the level curves
    /// on their scores before forming the residual series. Ignored by the
    /// PCA baseline.
    pub refine_nonstationary: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            k0: 8,
            bandwidth: None,
            p_share: 0.90,
            p_max: 12,
            p_min: 2,
            k_rule: KRule::Ratio,
            longrun: LongRunVariant::ExcludeLag0,
            alpha_gate: 0.05,
            lag_horizon: 10,
            proj_dim: 3,
            forced_k: None,
            forced_r: None,
            refine_nonstationary: true,
        }
    }
}

/// Parameters and eigenvalues of one eigen-extraction stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub block: Block,
    pub bandwidth: f64,
    pub p: usize,
    pub k0: usize,
    /// Candidate eigenvalues ordered by magnitude (`α̂` or `Γ̂₀` eigenvalues).
    pub eigenvalues: Vec<f64>,
    pub k_hat: usize,
    pub low_signal: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stationarity: Option<TestRecord>,
    pub independence: Option<TestRecord>,
    pub low_signal: bool,
    pub warnings: Vec<String>,
}

/// A fitted functional dynamic factor model.
#[derive(Debug, Clone, PartialEq)]
pub struct FdfFit {
    pub mode: FitMode,
    pub estimator: Estimator,
    pub loadings: LoadingSet,
    /// `N × K̂` factor scores of the mean-removed level curves.
    pub factors: DMatrix<f64>,
    pub k_hat: usize,
    pub r_hat: usize,
    pub bandwidth: f64,
    pub p: usize,
    pub k0: usize,
    pub stages: Vec<StageSummary>,
    pub diagnostics: Diagnostics,
    pub mean_curve: Vec<f64>,
}

impl FdfFit {
    pub fn n_curves(&self) -> usize {
        self.factors.nrows()
    }

    /// Candidate eigenvalues of the stage for `block`, if it ran.
    pub fn eigenvalues(&self, block: Block) -> Option<&[f64]> {
        self.stages.iter().find(|s| s.block == block).map(|s| s.eigenvalues.as_slice())
    }

    /// Flip the sign of loading `k` together with its factor column.
    pub fn flip_sign(&mut self, k: usize) {
        self.loadings.negate(k);
        self.factors.column_mut(k).iter_mut().for_each(|x| *x = -*x);
    }
}

/// Noise scale of a whitened diagonal entry of `Λ̂` under serial
/// independence: `(4 Σ_{h≥1} χ(h/b)² / N)^{1/2}`.
pub fn null_alpha_scale(n: usize, b: f64) -> f64 {
    let sum: f64 = (1..=b.floor() as i64)
        .map(|h| bartlett_weight(h, b).unwrap_or(0.0).powi(2))
        .sum();
    (4.0 * sum / n as f64).sqrt()
}

/// Multiple of [`null_alpha_scale`] below which the leading positive
/// eigenvalue is flagged as indistinguishable from noise.
pub const LOW_SIGNAL_MULTIPLE: f64 = 4.0;

struct Stage {
    loadings: LoadingSet,
    summary: StageSummary,
}

fn eigen_stage(
    centered: &FunctionalSample,
    opts: &FitOptions,
    forced: Option<usize>,
    block: Block,
    estimator: Estimator,
) -> Result<Stage> {
    let n = centered.n_curves();
    let spectrum = cov0_spectrum(centered)?;
    let positive = spectrum.n_positive();
    if positive == 0 {
        return Err(FdfError::DegenerateCovariance(POSITIVE_EIGEN_TOL));
    }
    let b = select_bandwidth(n, opts.bandwidth);
    let share_p = select_p(&spectrum, opts.p_share, opts.p_max)?;
    let p = share_p
        .max(opts.p_min)
        .max(forced.unwrap_or(0))
        .min(positive);
    if let Some(k) = forced {
        if k > p {
            return Err(FdfError::Parameter(format!(
                "cannot extract {k} factors: only {positive} positive covariance eigenvalues"
            )));
        }
    }

    let (candidates, k0) = match estimator {
        Estimator::Fdf => {
            let kernel = longrun_kernel(centered, b, opts.longrun)?;
            let op = LambdaOperator::from_parts(&spectrum, &kernel, p)?;
            let k0 = opts.k0.min(p).max(forced.unwrap_or(0));
            (extract_loadings(&op, k0, block)?, k0)
        }
        Estimator::Pca => {
            let k0 = opts.k0.min(positive).max(forced.unwrap_or(0));
            (pca_loadings(&spectrum, k0, block), k0)
        }
    };
    let alphas = candidates.eigenvalues().to_vec();
    let k_hat = match forced {
        Some(k) => k,
        None if k0 >= 2 => opts.k_rule.apply(&alphas, k0)?,
        None => k0,
    };
    let low_signal = match estimator {
        Estimator::Fdf => {
            let top = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            top < LOW_SIGNAL_MULTIPLE * null_alpha_scale(n, b)
        }
        Estimator::Pca => false,
    };
    Ok(Stage {
        loadings: candidates.truncated(k_hat),
        summary: StageSummary {
            block,
            bandwidth: b,
            p: if estimator == Estimator::Fdf { p } else { 0 },
            k0,
            eigenvalues: alphas,
            k_hat,
            low_signal,
        },
    })
}

fn check_common(sample: &FunctionalSample, opts: &FitOptions, min_n: usize) -> Result<()> {
    let n = sample.n_curves();
    if n < min_n {
        return Err(FdfError::InsufficientData { needed: min_n, got: n });
    }
    if opts.k0 < 2 {
        return Err(FdfError::Parameter(format!("k0 must be at least 2, got {}", opts.k0)));
    }
    Ok(())
}

fn stationary_with(
    sample: &FunctionalSample,
    opts: &FitOptions,
    estimator: Estimator,
) -> Result<FdfFit> {
    check_common(sample, opts, 20)?;
    let centered = sample.center()?;
    let stage = eigen_stage(&centered, opts, opts.forced_k, Block::Stationary, estimator)?;
    let factors = factor_scores(&centered, &stage.loadings)?;
    let mut diagnostics = Diagnostics { low_signal: stage.summary.low_signal, ..Default::default() };
    if stage.summary.low_signal {
        diagnostics
            .warnings
            .push("leading eigenvalue is within the noise band; factor structure is weak".into());
    }
    Ok(FdfFit {
        mode: FitMode::Stationary,
        estimator,
        k_hat: stage.loadings.len(),
        r_hat: 0,
        bandwidth: stage.summary.bandwidth,
        p: stage.summary.p,
        k0: stage.summary.k0,
        loadings: stage.loadings,
        factors,
        stages: vec![stage.summary],
        diagnostics,
        mean_curve: centered.mean_curve().map(<[f64]>::to_vec).unwrap_or_default(),
    })
}

fn nonstationary_with(
    sample: &FunctionalSample,
    opts: &FitOptions,
    estimator: Estimator,
) -> Result<FdfFit> {
    check_common(sample, opts, 30)?;
    let levels = sample.center()?;
    let diffs = sample.difference()?.center()?;
    let mut diagnostics = Diagnostics::default();

    let first = eigen_stage(&diffs, opts, opts.forced_r, Block::Nonstationary, estimator)?;
    let r_hat = first.loadings.len();
    if opts.forced_r.is_none() && r_hat == first.summary.k0 {
        diagnostics
            .warnings
            .push(format!("r_hat equals k0 = {r_hat}; k0 may be too small"));
    }
    if first.summary.low_signal {
        diagnostics.low_signal = true;
        diagnostics
            .warnings
            .push("differenced series shows no dominant positive eigenvalue; data may be stationary".into());
    }

    let first_loadings = if opts.refine_nonstationary && estimator == Estimator::Fdf {
        refine_by_regression(&levels, &first.loadings)?
    } else {
        first.loadings
    };
    let level_scores = factor_scores(&levels, &first_loadings)?;
    let z = residual_series(&levels, &first_loadings, &level_scores)?;

    let forced_rest = opts.forced_k.map(|k| k.saturating_sub(r_hat));
    let run_second = match forced_rest {
        Some(rest) => {
            if let Ok(rec) = independence_test(&z, opts.lag_horizon, opts.proj_dim) {
                diagnostics.independence = Some(rec);
            }
            rest > 0
        }
        None => match independence_test(&z, opts.lag_horizon, opts.proj_dim) {
            Ok(rec) => {
                let reject = rec.p_value < opts.alpha_gate;
                diagnostics.independence = Some(rec);
                reject
            }
            Err(FdfError::Conditioning(_)) | Err(FdfError::DegenerateCovariance(_)) => {
                diagnostics
                    .warnings
                    .push("residual series is degenerate; stopping after the nonstationary block".into());
                false
            }
            Err(e) => return Err(e),
        },
    };

    let mut loadings = first_loadings;
    let mut stages = vec![first.summary];
    if run_second {
        let zc = z.center()?;
        let second = eigen_stage(&zc, opts, forced_rest, Block::Stationary, estimator)?;
        loadings.extend_orthogonal(&second.loadings)?;
        stages.push(second.summary);
    }
    let factors = factor_scores(&levels, &loadings)?;
    Ok(FdfFit {
        mode: FitMode::Nonstationary,
        estimator,
        k_hat: loadings.len(),
        r_hat,
        bandwidth: stages[0].bandwidth,
        p: stages[0].p,
        k0: stages[0].k0,
        loadings,
        factors,
        stages,
        diagnostics,
        mean_curve: levels.mean_curve().map(<[f64]>::to_vec).unwrap_or_default(),
    })
}

/// Stationary fit: loadings are the leading eigenfunctions of `Λ̂`.
pub fn fit_stationary(sample: &FunctionalSample, opts: &FitOptions) -> Result<FdfFit> {
    stationary_with(sample, opts, Estimator::Fdf)
}

/// Nonstationary fit. Loadings of the I(1) block come from `Λ̂` of the
/// differenced curves; an independence gate on the residual series decides
/// whether a stationary block is fitted to it.
pub fn fit_nonstationary(sample: &FunctionalSample, opts: &FitOptions) -> Result<FdfFit> {
    nonstationary_with(sample, opts, Estimator::Fdf)
}

/// The same pipelines with `Γ̂₀` eigenfunctions in place of `Λ̂`.
pub fn fit_pca_baseline(
    sample: &FunctionalSample,
    mode: FitMode,
    opts: &FitOptions,
) -> Result<FdfFit> {
    match mode {
        FitMode::Stationary => stationary_with(sample, opts, Estimator::Pca),
        FitMode::Nonstationary => nonstationary_with(sample, opts, Estimator::Pca),
    }
}

/// Settings for the stationarity pre-test used by [`fit_auto`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretestOptions {
    pub level: f64,
    pub proj_dim: usize,
    pub mc_reps: usize,
    pub seed: u64,
}

impl Default for PretestOptions {
    fn default() -> Self {
        Self { level: 0.05, proj_dim: 3, mc_reps: 5000, seed: 0 }
    }
}

/// Run the stationarity test and route to the nonstationary fit when it rejects.
pub fn fit_auto(
    sample: &FunctionalSample,
    opts: &FitOptions,
    pretest: &PretestOptions,
) -> Result<FdfFit> {
    let rec = stationarity_test(sample, pretest.proj_dim, pretest.mc_reps, pretest.seed)?;
    let mut fit = if rec.p_value < pretest.level {
        fit_nonstationary(sample, opts)?
    } else {
        fit_stationary(sample, opts)?
    };
    fit.diagnostics.stationarity = Some(rec);
    Ok(fit)
}

/// `X̂_n = μ̂ + Σ_k f̂_{n,k} λ̂_k` for 1-based `n`.
pub fn reconstruct(fit: &FdfFit, n: usize) -> Result<Vec<f64>> {
    let len = fit.n_curves();
    if n == 0 || n > len {
        return Err(FdfError::Index { index: n, len });
    }
    let mut out = fit.mean_curve.clone();
    if out.is_empty() {
        out = vec![0.0; fit.loadings.grid().len()];
    }
    for (k, curve) in fit.loadings.curves().iter().enumerate() {
        let f = fit.factors[(n - 1, k)];
        out.iter_mut().zip(curve).for_each(|(o, l)| *o += f * l);
    }
    Ok(out)
}
