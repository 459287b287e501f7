use nalgebra::{DMatrix, SymmetricEigen};

use super::kernel::{lag_cov_kernel, KernelMatrix};
use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// Eigenvalues at or below this are treated as zero when counting rank.
pub const POSITIVE_EIGEN_TOL: f64 = 1e-10;

/// Eigenpairs of a discretized self-adjoint integral operator.
///
/// Eigenvalues are sorted descending; eigenfunctions are orthonormal under
/// the grid's quadrature inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn n_positive(&self) -> usize {
        self.eigenvalues.iter().filter(|v| **v > POSITIVE_EIGEN_TOL).count()
    }
}

/// Spectrum of the integral operator with a symmetric kernel.
///
/// With quadrature weights `W` the operator is `Kᵀ W`; the symmetric form
/// `W^{1/2} K W^{1/2}` shares its eigenvalues and eigenfunctions map back
/// through `W^{-1/2}`.
pub fn kernel_spectrum(kernel: &KernelMatrix) -> Result<SpectralDecomposition> {
    let values = kernel.values();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FdfError::Numeric("kernel has non-finite entries".into()));
    }
    let grid = kernel.grid().clone();
    let m = grid.len();
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let mut sym = DMatrix::from_fn(m, m, |i, j| sw[i] * values[(i, j)] * sw[j]);
    let t = sym.transpose();
    sym = (sym + t) * 0.5;

    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfunctions = Vec::with_capacity(m);
    for idx in order {
        let mut lambda = eig.eigenvalues[idx];
        if lambda.abs() <= 1e-12 || (lambda < 0.0 && -lambda <= POSITIVE_EIGEN_TOL * top) {
            lambda = 0.0;
        }
        let u = eig.eigenvectors.column(idx);
        let mut v: Vec<f64> = u.iter().zip(&sw).map(|(x, s)| x / s).collect();
        orient(&mut v);
        eigenvalues.push(lambda);
        eigenfunctions.push(v);
    }
    Ok(SpectralDecomposition { grid, eigenvalues, eigenfunctions })
}

/// Spectrum of `Γ̂₀` for a centered sample.
pub fn cov0_spectrum(sample: &FunctionalSample) -> Result<SpectralDecomposition> {
    kernel_spectrum(&lag_cov_kernel(sample, 0)?)
}

/// Smallest `p` whose leading eigenvalues reach `share` of the positive
/// spectrum, capped at `p_max` and at the number of positive eigenvalues.
pub fn select_p(spectrum: &SpectralDecomposition, share: f64, p_max: usize) -> Result<usize> {
    if !(share > 0.0 && share < 1.0) {
        return Err(FdfError::Parameter(format!("share must be in (0, 1), got {share}")));
    }
    let positive: Vec<f64> = spectrum
        .eigenvalues()
        .iter()
        .copied()
        .filter(|v| *v > POSITIVE_EIGEN_TOL)
        .collect();
    if positive.is_empty() {
        return Err(FdfError::DegenerateCovariance(POSITIVE_EIGEN_TOL));
    }
    let total: f64 = positive.iter().sum();
    let mut acc = 0.0;
    let mut p = positive.len();
    for (i, v) in positive.iter().enumerate() {
        acc += v;
        if acc / total >= share - 1e-12 {
            p = i + 1;
            break;
        }
    }
    Ok(p.min(p_max.max(1)).min(positive.len()))
}

/// Deterministic sign: the entry of largest magnitude is positive.
pub(crate) fn orient(v: &mut [f64]) {
    let (mut best, mut idx) = (0.0, 0);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best + 1e-12 {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
pub(crate) fn spectrum_from_parts(
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
) -> SpectralDecomposition {
    SpectralDecomposition { grid, eigenvalues, eigenfunctions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fake_spectrum(values: &[f64]) -> SpectralDecomposition {
        let grid = Grid::uniform(5).unwrap();
        let funcs = values.iter().map(|_| vec![0.0; 5]).collect();
        spectrum_from_parts(grid, values.to_vec(), funcs)
    }

    #[test]
    fn rank_one_sine_kernel() {
        let grid = Grid::uniform(101).unwrap();
        let k = KernelMatrix::from_fn(&grid, |t, s| (2.0 * PI * t).sin() * (2.0 * PI * s).sin());
        let spec = kernel_spectrum(&k).unwrap();
        assert!((spec.eigenvalues()[0] - 0.5).abs() < 1e-3);
        let v = &spec.eigenfunctions()[0];
        let target = grid.eval(|s| 2f64.sqrt() * (2.0 * PI * s).sin());
        let err_plus = v.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let err_minus = v.iter().zip(&target).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err_plus.min(err_minus) < 1e-3);
        assert!(spec.eigenvalues()[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn zero_kernel_has_zero_spectrum() {
        let grid = Grid::uniform(15).unwrap();
        let spec = kernel_spectrum(&KernelMatrix::zeros(&grid)).unwrap();
        assert!(spec.eigenvalues().iter().all(|v| *v == 0.0));
        assert_eq!(spec.n_positive(), 0);
    }

    #[test]
    fn trace_identity_and_orthonormality() {
        let grid = Grid::uniform(41).unwrap();
        let k = KernelMatrix::from_fn(&grid, |t, s| t.min(s) + 0.5 * (t * s).cos());
        let spec = kernel_spectrum(&k).unwrap();
        let diag: Vec<f64> = (0..41).map(|i| k.values()[(i, i)]).collect();
        let trace = grid.integrate(&diag).unwrap();
        let sum: f64 = spec.eigenvalues().iter().sum();
        assert!((trace - sum).abs() < 1e-8);
        let f = spec.eigenfunctions();
        for i in 0..6 {
            for j in 0..6 {
                let ip = grid.inner_product(&f[i], &f[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-8);
            }
        }
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn non_finite_kernel() {
        let grid = Grid::uniform(5).unwrap();
        let mut vals = DMatrix::zeros(5, 5);
        vals[(1, 2)] = f64::NAN;
        assert!(KernelMatrix::new(grid, vals).is_err());
    }

    #[test]
    fn share_rule() {
        assert_eq!(select_p(&fake_spectrum(&[9.0, 1.0]), 0.9, 12).unwrap(), 1);
        assert_eq!(select_p(&fake_spectrum(&[5.0, 4.0, 1.0]), 0.9, 12).unwrap(), 2);
        assert_eq!(select_p(&fake_spectrum(&[1.0, 0.0, 0.0]), 0.99, 12).unwrap(), 1);
        assert_eq!(select_p(&fake_spectrum(&[1.0, 1.0, 1.0, 1.0]), 0.99, 2).unwrap(), 2);
    }

    #[test]
    fn share_rule_errors() {
        assert!(matches!(
            select_p(&fake_spectrum(&[0.0, 0.0]), 0.9, 12),
            Err(FdfError::DegenerateCovariance(_))
        ));
        assert!(select_p(&fake_spectrum(&[1.0]), 1.0, 12).is_err());
        assert!(select_p(&fake_spectrum(&[1.0]), 0.0, 12).is_err());
    }
}
