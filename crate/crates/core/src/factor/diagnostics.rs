//! Projected portmanteau independence test and partial-sum stationarity
//! test for functional samples.
//!
//! Both tests reduce the curves to their scores on the leading
//! eigenfunctions of `Γ̂₀`. The independence test is a multivariate
//! portmanteau statistic with a chi-square reference. The stationarity test
//! uses the full-curve bridge statistic
//! `T = N⁻² Σ_n ‖S_n − (n/N) S_N‖²`, whose null law is approximated by
//! `Σ_i ν_i ∫ B_i(t)² dt` with `ν_i` the eigenvalues of the long-run score
//! covariance and `B_i` independent Brownian bridges. Bridge functionals
//! are drawn from the Karhunen–Loève series `∫B² = Σ_k Z_k² / (kπ)²`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cov::{bartlett_weight, cov0_spectrum, select_bandwidth};
use crate::error::{FdfError, Result};
use crate::fts::FunctionalSample;

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Lag horizon `H` (portmanteau) or Bartlett bandwidth (stationarity).
    pub lag_horizon: f64,
    pub projection_dim: usize,
    /// Degrees of freedom or Monte Carlo replications behind the p-value.
    pub reference_size: usize,
}

/// Number of Karhunen–Loève terms simulated per bridge functional.
const KL_TERMS: usize = 60;

/// Scores on the leading `dim` eigenfunctions of `Γ̂₀` of the centered sample.
fn leading_scores(sample: &FunctionalSample, dim: usize) -> Result<DMatrix<f64>> {
    let centered = sample.center()?;
    let spectrum = cov0_spectrum(&centered)?;
    let available = spectrum.n_positive();
    if available == 0 {
        return Err(FdfError::DegenerateCovariance(crate::cov::POSITIVE_EIGEN_TOL));
    }
    let d = dim.min(available);
    let n = centered.n_curves();
    let mut scores = DMatrix::zeros(n, d);
    for k in 0..d {
        let col = centered.project(&spectrum.eigenfunctions()[k])?;
        scores.column_mut(k).copy_from_slice(&col);
    }
    Ok(scores)
}

/// `(1/N) Σ_n y_n y_{n+h}ᵀ` for the rows of `y`.
fn score_autocov(y: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let n = y.nrows();
    let lead = y.rows(0, n - h);
    let lagged = y.rows(h, n - h);
    (lead.transpose() * lagged) / n as f64
}

/// Projected multivariate portmanteau test of serial independence.
///
/// `Q = N Σ_{h=1}^{H} tr(R_hᵀ R₀⁻¹ R_h R₀⁻¹)` on the first `proj_dim`
/// principal scores, referred to `χ²` with `proj_dim²·H` degrees of freedom.
pub fn independence_test(
    sample: &FunctionalSample,
    lag_horizon: usize,
    proj_dim: usize,
) -> Result<TestRecord> {
    let n = sample.n_curves();
    if lag_horizon == 0 || proj_dim == 0 {
        return Err(FdfError::Parameter("lag horizon and projection dimension must be positive".into()));
    }
    if n <= lag_horizon + proj_dim {
        return Err(FdfError::InsufficientData { needed: lag_horizon + proj_dim + 1, got: n });
    }
    let y = leading_scores(sample, proj_dim)?;
    let d = y.ncols();
    if d < proj_dim {
        return Err(FdfError::Conditioning(format!(
            "score covariance has rank {d} < projection dimension {proj_dim}"
        )));
    }
    let r0 = score_autocov(&y, 0);
    let eig = SymmetricEigen::new(r0.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 1e-12 * hi) {
        return Err(FdfError::Conditioning("score covariance is rank deficient".into()));
    }
    let r0_inv = r0
        .cholesky()
        .ok_or_else(|| FdfError::Conditioning("score covariance is not positive definite".into()))?
        .inverse();
    let mut q = 0.0;
    for h in 1..=lag_horizon {
        let rh = score_autocov(&y, h);
        let prod = rh.transpose() * &r0_inv * &rh * &r0_inv;
        q += prod.trace();
    }
    q *= n as f64;
    let df = d * d * lag_horizon;
    let chi = ChiSquared::new(df as f64).map_err(|e| FdfError::Parameter(e.to_string()))?;
    let p_value = chi.sf(q).clamp(0.0, 1.0);
    Ok(TestRecord {
        method: "projected-portmanteau".into(),
        statistic: q,
        p_value,
        lag_horizon: lag_horizon as f64,
        projection_dim: d,
        reference_size: df,
    })
}

/// Bartlett long-run covariance of the (centered) score rows.
fn score_longrun(y: &DMatrix<f64>, b: f64) -> DMatrix<f64> {
    let mut acc = score_autocov(y, 0);
    let max_lag = (b.floor() as usize).min(y.nrows() - 1);
    for h in 1..=max_lag {
        let w = bartlett_weight(h as i64, b).unwrap_or(0.0);
        if w == 0.0 {
            continue;
        }
        let g = score_autocov(y, h);
        acc += (&g + g.transpose()) * w;
    }
    acc
}

/// Monte Carlo p-value of `stat` against `Σ_i ν_i ∫ B_i²`.
fn bridge_p_value(stat: f64, nu: &[f64], mc_reps: usize, seed: u64) -> f64 {
    let inv: Vec<f64> = (1..=KL_TERMS)
        .map(|k| 1.0 / (k as f64 * std::f64::consts::PI).powi(2))
        .collect();
    // Mean of the truncated tail; its variance is negligible.
    let tail = 1.0 / 6.0 - inv.iter().sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..mc_reps {
        let mut draw = 0.0;
        for &v in nu {
            let mut integral = tail;
            for c in &inv {
                let z: f64 = StandardNormal.sample(&mut rng);
                integral += c * z * z;
            }
            draw += v * integral;
        }
        if draw >= stat {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + mc_reps) as f64
}

/// Partial-sum (bridge) test of the null of stationarity for a functional sample.
pub fn stationarity_test(
    sample: &FunctionalSample,
    proj_dim: usize,
    mc_reps: usize,
    seed: u64,
) -> Result<TestRecord> {
    let n = sample.n_curves();
    if n < 50 {
        return Err(FdfError::InsufficientData { needed: 50, got: n });
    }
    if proj_dim == 0 || mc_reps == 0 {
        return Err(FdfError::Parameter("projection dimension and replications must be positive".into()));
    }
    let centered = sample.center()?;
    let grid = centered.grid();
    let m = grid.len();
    let x = centered.values();
    let mut partial = vec![0.0; m];
    let mut stat = 0.0;
    for i in 0..n {
        for (j, p) in partial.iter_mut().enumerate() {
            *p += x[(i, j)];
        }
        stat += grid.dot_unchecked(&partial, &partial);
    }
    stat /= (n * n) as f64;

    let y = leading_scores(sample, proj_dim)?;
    let b = select_bandwidth(n, None);
    let lr = score_longrun(&y, b);
    let nu: Vec<f64> = SymmetricEigen::new(lr).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let p_value = bridge_p_value(stat, &nu, mc_reps, seed);
    Ok(TestRecord {
        method: "partial-sum-bridge".into(),
        statistic: stat,
        p_value,
        lag_horizon: b,
        projection_dim: y.ncols(),
        reference_size: mc_reps,
    })
}

/// Scalar version of [`stationarity_test`] for a single series.
pub fn scalar_stationarity_test(series: &[f64], mc_reps: usize, seed: u64) -> Result<TestRecord> {
    let n = series.len();
    if n < 50 {
        return Err(FdfError::InsufficientData { needed: 50, got: n });
    }
    if mc_reps == 0 {
        return Err(FdfError::Parameter("replications must be positive".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let y = DMatrix::from_iterator(n, 1, series.iter().map(|v| v - mean));
    let mut partial = 0.0;
    let mut stat = 0.0;
    for v in y.iter() {
        partial += v;
        stat += partial * partial;
    }
    stat /= (n * n) as f64;
    let b = select_bandwidth(n, None);
    let nu = score_longrun(&y, b)[(0, 0)].max(0.0);
    if nu <= 0.0 {
        return Err(FdfError::DegenerateCovariance(0.0));
    }
    let p_value = bridge_p_value(stat, &[nu], mc_reps, seed);
    Ok(TestRecord {
        method: "scalar-partial-sum-bridge".into(),
        statistic: stat,
        p_value,
        lag_horizon: b,
        projection_dim: 1,
        reference_size: mc_reps,
    })
}
