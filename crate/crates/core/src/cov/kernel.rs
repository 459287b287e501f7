use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// Discretized bivariate kernel; entry `(i, j)` is `k(t_i, s_j)`.
///
/// The associated integral operator acts as `(K z)(s) = ∫ k(t, s) z(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    grid: Grid,
    values: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        let m = grid.len();
        if values.nrows() != m || values.ncols() != m {
            return Err(FdfError::Dimension(format!(
                "{}x{} kernel on a grid of {m} points",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FdfError::Numeric("kernel has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Grid, f: F) -> Self {
        let p = grid.points();
        let values = DMatrix::from_fn(p.len(), p.len(), |i, j| f(p[i], p[j]));
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: DMatrix::zeros(grid.len(), grid.len()) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn transpose(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.values.transpose() }
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.values - self.values.transpose()).amax()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.amax()
    }

    /// Hilbert–Schmidt norm `(∫∫ k(t, s)^2 dt ds)^{1/2}` by tensor quadrature.
    pub fn hs_norm(&self) -> f64 {
        let w = self.grid.weights();
        let mut acc = 0.0;
        for j in 0..w.len() {
            for i in 0..w.len() {
                let v = self.values[(i, j)];
                acc += w[i] * w[j] * v * v;
            }
        }
        acc.sqrt()
    }

    pub fn try_add(&self, other: &KernelMatrix) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self { grid: self.grid.clone(), values: &self.values + &other.values })
    }

    pub fn try_sub(&self, other: &KernelMatrix) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self { grid: self.grid.clone(), values: &self.values - &other.values })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), values: &self.values * factor }
    }

    fn check_grid(&self, other: &KernelMatrix) -> Result<()> {
        if self.grid != other.grid {
            return Err(FdfError::Dimension("kernels live on different grids".into()));
        }
        Ok(())
    }
}

/// Whether the lag-0 covariance enters the smoothed long-run kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LongRunVariant {
    /// `Σ_{0<|h|≤b} χ(h/b) γ̂_h`, the kernel of `Γ − Γ₀`.
    #[default]
    ExcludeLag0,
    /// Full smoothed long-run kernel `Σ_{|h|≤b} χ(h/b) γ̂_h`.
    IncludeLag0,
}

/// Lag-`h` cross-covariance kernel `γ̂_h`, always normalized by `N`.
///
/// The sample is used as given; callers center it first.
pub fn lag_cov_kernel(sample: &FunctionalSample, h: i64) -> Result<KernelMatrix> {
    let n = sample.n_curves();
    if h.unsigned_abs() as usize >= n {
        return Err(FdfError::LagOutOfRange { lag: h, n });
    }
    let k = lag_product(sample.values(), h.unsigned_abs() as usize);
    let k = if h < 0 { k.transpose() } else { k };
    KernelMatrix::new(sample.grid().clone(), k)
}

/// `(1/N) Σ_{n} X_n X_{n+h}^T` for `h ≥ 0`.
fn lag_product(x: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let lead = x.rows(0, n - h);
    let lagged = x.rows(h, n - h);
    (lead.transpose() * lagged) / n as f64
}

/// Triangular lag window `max(0, 1 − |h|/b)`.
pub fn bartlett_weight(h: i64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(FdfError::Parameter(format!("bandwidth must be positive, got {b}")));
    }
    Ok((1.0 - (h as f64).abs() / b).max(0.0))
}

/// Bartlett-smoothed long-run kernel. The default variant excludes lag 0
/// and estimates the kernel of `Γ − Γ₀`.
pub fn longrun_kernel(
    sample: &FunctionalSample,
    b: f64,
    variant: LongRunVariant,
) -> Result<KernelMatrix> {
    let n = sample.n_curves();
    if !(b > 0.0) {
        return Err(FdfError::Parameter(format!("bandwidth must be positive, got {b}")));
    }
    if b >= n as f64 {
        return Err(FdfError::Bandwidth { b, n });
    }
    let x = sample.values();
    let max_lag = b.floor() as usize;
    let terms: Vec<(f64, DMatrix<f64>)> = (1..=max_lag)
        .into_par_iter()
        .filter_map(|h| {
            let w = bartlett_weight(h as i64, b).ok()?;
            (w > 0.0).then(|| (w, lag_product(x, h)))
        })
        .collect();

    let m = sample.grid().len();
    let mut acc = match variant {
        LongRunVariant::ExcludeLag0 => DMatrix::zeros(m, m),
        LongRunVariant::IncludeLag0 => lag_product(x, 0),
    };
    // Fixed summation order keeps the result independent of the thread count.
    for (w, g) in &terms {
        let sym = g + g.transpose();
        acc += sym * *w;
    }
    KernelMatrix::new(sample.grid().clone(), acc)
}

/// Kernel of `Γ − Γ₀`: `Σ_{0<|h|≤b} χ(h/b) γ̂_h`.
pub fn longrun_minus_lag0(sample: &FunctionalSample, b: f64) -> Result<KernelMatrix> {
    longrun_kernel(sample, b, LongRunVariant::ExcludeLag0)
}

/// Rule-of-thumb bandwidth `⌈N^{1/3}⌉`, or the override when given.
pub fn select_bandwidth(n: usize, override_b: Option<f64>) -> f64 {
    match override_b {
        Some(b) => b,
        None => (n as f64).cbrt().ceil(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(levels: &[f64], m: usize) -> FunctionalSample {
        let grid = Grid::uniform(m).unwrap();
        let rows: Vec<Vec<f64>> = levels.iter().map(|&c| vec![c; m]).collect();
        FunctionalSample::from_rows(grid, &rows).unwrap()
    }

    fn wiggly(n: usize, m: usize) -> FunctionalSample {
        let grid = Grid::uniform(m).unwrap();
        let vals = DMatrix::from_fn(n, m, |i, j| {
            ((i * 31 + j * 7) as f64 * 0.173).sin() + 0.3 * ((i * j) as f64 * 0.011).cos()
        });
        FunctionalSample::new(grid, vals).unwrap().center().unwrap()
    }

    #[test]
    fn lag_kernels_of_alternating_constants() {
        let x = constants(&[1.0, -1.0], 4);
        let g0 = lag_cov_kernel(&x, 0).unwrap();
        assert!(g0.values().iter().all(|v| *v == 1.0));
        let g1 = lag_cov_kernel(&x, 1).unwrap();
        assert!(g1.values().iter().all(|v| *v == -0.5));
    }

    #[test]
    fn negative_lag_mirrors() {
        let x = wiggly(40, 9);
        for h in 1..5 {
            let pos = lag_cov_kernel(&x, h).unwrap();
            let neg = lag_cov_kernel(&x, -h).unwrap();
            assert!((pos.values() - neg.values().transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn lag_out_of_range() {
        let x = constants(&[1.0, -1.0, 1.0], 4);
        assert!(matches!(lag_cov_kernel(&x, 3), Err(FdfError::LagOutOfRange { .. })));
        assert!(matches!(lag_cov_kernel(&x, -3), Err(FdfError::LagOutOfRange { .. })));
    }

    #[test]
    fn bartlett_values() {
        assert_eq!(bartlett_weight(0, 3.5).unwrap(), 1.0);
        assert_eq!(bartlett_weight(4, 4.0).unwrap(), 0.0);
        assert!((bartlett_weight(2, 5.0).unwrap() - 0.6).abs() < 1e-15);
        assert!((bartlett_weight(-2, 5.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(bartlett_weight(9, 5.0).unwrap(), 0.0);
        assert!(bartlett_weight(1, 0.0).is_err());
    }

    #[test]
    fn unit_bandwidth_kills_all_lags() {
        let x = constants(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0], 5);
        let c = longrun_minus_lag0(&x, 1.0).unwrap();
        assert!(c.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn longrun_is_symmetric() {
        let x = wiggly(60, 11);
        for variant in [LongRunVariant::ExcludeLag0, LongRunVariant::IncludeLag0] {
            let c = longrun_kernel(&x, 4.0, variant).unwrap();
            assert!(c.max_asymmetry() < 1e-12);
        }
    }

    #[test]
    fn include_variant_adds_lag0() {
        let x = wiggly(50, 7);
        let ex = longrun_kernel(&x, 3.0, LongRunVariant::ExcludeLag0).unwrap();
        let inc = longrun_kernel(&x, 3.0, LongRunVariant::IncludeLag0).unwrap();
        let g0 = lag_cov_kernel(&x, 0).unwrap();
        assert!((inc.values() - ex.values() - g0.values()).amax() < 1e-12);
    }

    #[test]
    fn bandwidth_must_be_below_n() {
        let x = constants(&[1.0, -1.0, 1.0], 4);
        assert!(matches!(longrun_minus_lag0(&x, 3.0), Err(FdfError::Bandwidth { .. })));
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(select_bandwidth(200, None), 6.0);
        assert_eq!(select_bandwidth(1000, None), 10.0);
        assert_eq!(select_bandwidth(300, Some(8.0)), 8.0);
        assert_eq!(select_bandwidth(8, None), 2.0);
    }

    #[test]
    fn hs_norm_of_constant_kernel() {
        let g = Grid::uniform(21).unwrap();
        let k = KernelMatrix::from_fn(&g, |_, _| 3.0);
        assert!((k.hs_norm() - 3.0).abs() < 1e-12);
    }
}
