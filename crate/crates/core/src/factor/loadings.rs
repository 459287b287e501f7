use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cov::LambdaOperator;
use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// Dynamic character of the factor behind a loading curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Nonstationary,
    Stationary,
}

/// Orthonormal loading curves, nonstationary block first.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingSet {
    grid: Grid,
    curves: Vec<Vec<f64>>,
    blocks: Vec<Block>,
    eigenvalues: Vec<f64>,
}

impl LoadingSet {
    pub fn empty(grid: Grid) -> Self {
        Self { grid, curves: Vec::new(), blocks: Vec::new(), eigenvalues: Vec::new() }
    }

    /// Wrap curves that are already orthonormal (checked to 1e-8).
    pub fn new(
        grid: Grid,
        curves: Vec<Vec<f64>>,
        blocks: Vec<Block>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        if blocks.len() != curves.len() || eigenvalues.len() != curves.len() {
            return Err(FdfError::Dimension("loading metadata length mismatch".into()));
        }
        for c in &curves {
            grid.check_len(c.len())?;
        }
        let set = Self { grid, curves, blocks, eigenvalues };
        let err = set.orthonormality_error();
        if err > 1e-8 {
            return Err(FdfError::Numeric(format!("loadings not orthonormal (error {err:e})")));
        }
        Ok(set)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            grid: self.grid.clone(),
            curves: self.curves[..k].to_vec(),
            blocks: self.blocks[..k].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        }
    }

    /// Append `other` after orthogonalizing it against the current curves.
    pub(crate) fn extend_orthogonal(&mut self, other: &LoadingSet) -> Result<()> {
        for ((c, b), a) in other.curves.iter().zip(&other.blocks).zip(&other.eigenvalues) {
            let mut v = c.clone();
            gram_schmidt_step(&self.grid, &self.curves, &mut v)?;
            self.curves.push(v);
            self.blocks.push(*b);
            self.eigenvalues.push(*a);
        }
        Ok(())
    }

    pub(crate) fn negate(&mut self, k: usize) {
        self.curves[k].iter_mut().for_each(|x| *x = -*x);
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let ip = self.grid.dot_unchecked(&self.curves[i], &self.curves[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).abs());
            }
        }
        worst
    }
}

/// Orthonormalize `v` against `basis` (modified Gram–Schmidt, two passes).
fn gram_schmidt_step(grid: &Grid, basis: &[Vec<f64>], v: &mut [f64]) -> Result<()> {
    let norm0 = grid.dot_unchecked(v, v).sqrt();
    for _ in 0..2 {
        for b in basis {
            let ip = grid.dot_unchecked(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= ip * y);
        }
    }
    let norm = grid.dot_unchecked(v, v).sqrt();
    if !(norm > 1e-10 * norm0.max(1e-300)) {
        return Err(FdfError::Conditioning(
            "candidate loading is linearly dependent on earlier loadings".into(),
        ));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Eigen-decompose the whitened operator and map the leading `k0`
/// eigenvectors back to orthonormal loading curves.
///
/// Eigenpairs are ordered by `|α|` descending. Candidates are
/// `ζ = V D^{1/2} w`, orthonormalized in order.
pub fn extract_loadings(op: &LambdaOperator, k0: usize, block: Block) -> Result<LoadingSet> {
    let p = op.p();
    if k0 > p {
        return Err(FdfError::Parameter(format!(
            "cannot extract {k0} loadings from an operator truncated at p = {p}"
        )));
    }
    let eig = SymmetricEigen::new(op.s().clone());
    let dominant = |col: usize| {
        eig.eigenvectors
            .column(col)
            .iamax()
    };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (eig.eigenvalues[a].abs(), eig.eigenvalues[b].abs());
        let tol = 1e-12 * fa.max(fb).max(1.0);
        if (fa - fb).abs() <= tol {
            dominant(a).cmp(&dominant(b))
        } else {
            fb.total_cmp(&fa)
        }
    });

    let grid = op.grid().clone();
    let m = grid.len();
    let sqrt_d: Vec<f64> = op.d().iter().map(|v| v.sqrt()).collect();
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(k0);
    let mut alphas = Vec::with_capacity(k0);
    for &idx in order.iter().take(k0) {
        let w = eig.eigenvectors.column(idx);
        let mut zeta = vec![0.0; m];
        for (k, basis) in op.score_basis().iter().enumerate() {
            let coef = sqrt_d[k] * w[k];
            zeta.iter_mut().zip(basis).for_each(|(z, b)| *z += coef * b);
        }
        gram_schmidt_step(&grid, &curves, &mut zeta)?;
        crate::cov::orient(&mut zeta);
        curves.push(zeta);
        alphas.push(eig.eigenvalues[idx]);
    }
    let blocks = vec![block; curves.len()];
    Ok(LoadingSet { grid, curves, blocks, eigenvalues: alphas })
}

/// Leading eigenfunctions of `Γ̂₀` as a loading set (functional PCA).
pub(crate) fn pca_loadings(
    spectrum: &crate::cov::SpectralDecomposition,
    k: usize,
    block: Block,
) -> LoadingSet {
    let k = k.min(spectrum.eigenfunctions().len());
    LoadingSet {
        grid: spectrum.grid().clone(),
        curves: spectrum.eigenfunctions()[..k].to_vec(),
        blocks: vec![block; k],
        eigenvalues: spectrum.eigenvalues()[..k].to_vec(),
    }
}

/// Replace each loading by the least-squares regression of the curves on
/// the current scores, `(FᵀF)⁻¹ Fᵀ X`, then re-orthonormalize.
///
/// For I(1) scores the regression converges at rate `N` rather than `√N`,
/// which keeps the estimation error out of the residual series.
pub fn refine_by_regression(sample: &FunctionalSample, loadings: &LoadingSet) -> Result<LoadingSet> {
    if loadings.is_empty() {
        return Ok(loadings.clone());
    }
    let f = factor_scores(sample, loadings)?;
    let gram = f.transpose() * &f;
    let chol = gram
        .cholesky()
        .ok_or_else(|| FdfError::Conditioning("factor scores are collinear".into()))?;
    let coef = chol.solve(&(f.transpose() * sample.values()));
    let grid = loadings.grid.clone();
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(loadings.len());
    for (k, old) in loadings.curves.iter().enumerate() {
        let mut v: Vec<f64> = coef.row(k).iter().copied().collect();
        gram_schmidt_step(&grid, &curves, &mut v)?;
        if grid.dot_unchecked(&v, old) < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        curves.push(v);
    }
    Ok(LoadingSet { grid, curves, blocks: loadings.blocks.clone(), eigenvalues: loadings.eigenvalues.clone() })
}

/// `N × K` matrix of `⟨X_n, λ̂_k⟩`.
pub fn factor_scores(sample: &FunctionalSample, loadings: &LoadingSet) -> Result<DMatrix<f64>> {
    if sample.grid() != loadings.grid() {
        return Err(FdfError::Dimension("sample and loadings use different grids".into()));
    }
    let n = sample.n_curves();
    let k = loadings.len();
    let mut out = DMatrix::zeros(n, k);
    for (j, curve) in loadings.curves().iter().enumerate() {
        let col = sample.project(curve)?;
        out.column_mut(j).copy_from_slice(&col);
    }
    Ok(out)
}

/// `Z_n = X_n − Σ_k f̂_{n,k} λ̂_k`.
pub fn residual_series(
    sample: &FunctionalSample,
    loadings: &LoadingSet,
    scores: &DMatrix<f64>,
) -> Result<FunctionalSample> {
    if sample.grid() != loadings.grid() {
        return Err(FdfError::Dimension("sample and loadings use different grids".into()));
    }
    if scores.nrows() != sample.n_curves() || scores.ncols() != loadings.len() {
        return Err(FdfError::Dimension(format!(
            "scores are {}x{}, expected {}x{}",
            scores.nrows(),
            scores.ncols(),
            sample.n_curves(),
            loadings.len()
        )));
    }
    let m = sample.grid().len();
    let k = loadings.len();
    if k == 0 {
        return Ok(sample.clone());
    }
    let lam = DMatrix::from_fn(k, m, |r, j| loadings.curves()[r][j]);
    let values = sample.values() - scores * lam;
    FunctionalSample::new(sample.grid().clone(), values)
}
