use nalgebra::DMatrix;

use super::kernel::{longrun_kernel, KernelMatrix, LongRunVariant};
use super::spectrum::{cov0_spectrum, SpectralDecomposition, POSITIVE_EIGEN_TOL};
use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// `Λ̂ = (Γ̂ − Γ̂₀) Γ̂₀⁻¹` restricted to the span of the leading `p`
/// eigenfunctions of `Γ̂₀`.
///
/// `c` represents `Γ̂ − Γ̂₀` in score coordinates; `s = D^{-1/2} c D^{-1/2}`
/// is symmetric and similar to `c D⁻¹`, the matrix of the restricted `Λ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOperator {
    grid: Grid,
    score_basis: Vec<Vec<f64>>,
    d: Vec<f64>,
    c: DMatrix<f64>,
    s: DMatrix<f64>,
}

impl LambdaOperator {
    /// Assemble from the spectrum of `Γ̂₀` and the kernel of `Γ̂ − Γ̂₀`.
    pub fn from_parts(
        cov0: &SpectralDecomposition,
        longrun_minus_lag0: &KernelMatrix,
        p: usize,
    ) -> Result<Self> {
        let grid = cov0.grid().clone();
        if longrun_minus_lag0.grid() != &grid {
            return Err(FdfError::Dimension("kernel and spectrum grids differ".into()));
        }
        if p == 0 || p > cov0.eigenvalues().len() {
            return Err(FdfError::Parameter(format!(
                "truncation level {p} outside 1..={}",
                cov0.eigenvalues().len()
            )));
        }
        let d: Vec<f64> = cov0.eigenvalues()[..p].to_vec();
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| **v <= POSITIVE_EIGEN_TOL) {
            return Err(FdfError::Conditioning(format!(
                "eigenvalue {} of the lag-0 covariance is {v:e}; cannot invert",
                i + 1
            )));
        }
        let score_basis: Vec<Vec<f64>> = cov0.eigenfunctions()[..p].to_vec();

        let m = grid.len();
        let w = grid.weights();
        let vw = DMatrix::from_fn(m, p, |i, k| score_basis[k][i] * w[i]);
        let c = vw.transpose() * longrun_minus_lag0.values() * &vw;
        let c = (&c + c.transpose()) * 0.5;
        let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        let s = DMatrix::from_fn(p, p, |i, j| inv_sqrt[i] * c[(i, j)] * inv_sqrt[j]);
        Ok(Self { grid, score_basis, d, c, s })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.d.len()
    }

    pub fn score_basis(&self) -> &[Vec<f64>] {
        &self.score_basis
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// The nonsymmetric matrix `C D⁻¹` of the restricted operator.
    pub fn restricted_matrix(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| self.c[(i, j)] / self.d[j])
    }
}

/// Build `Λ̂` from a centered sample with bandwidth `b` and truncation `p`.
pub fn build_lambda(sample: &FunctionalSample, b: f64, p: usize) -> Result<LambdaOperator> {
    let spectrum = cov0_spectrum(sample)?;
    let kernel = longrun_kernel(sample, b, LongRunVariant::ExcludeLag0)?;
    LambdaOperator::from_parts(&spectrum, &kernel, p)
}
