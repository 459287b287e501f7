use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::generators::rng_for;
use crate::cov::{kernel_spectrum, KernelMatrix};
use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// Bounded operator `c·I + K`, with `K` an optional integral operator
/// `(Kx)(s) = ∫ k(t, s) x(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    pub identity: f64,
    pub kernel: Option<KernelMatrix>,
}

impl LinearOperator {
    pub fn identity() -> Self {
        Self { identity: 1.0, kernel: None }
    }

    pub fn integral(kernel: KernelMatrix) -> Self {
        Self { identity: 0.0, kernel: Some(kernel) }
    }

    pub fn identity_plus(kernel: KernelMatrix) -> Self {
        Self { identity: 1.0, kernel: Some(kernel) }
    }

    /// Matrix `M` with `(Ax)(s_j) ≈ Σ_i M[j, i] x(s_i)`.
    pub fn action_matrix(&self, grid: &Grid) -> Result<DMatrix<f64>> {
        let m = grid.len();
        let mut out = DMatrix::identity(m, m) * self.identity;
        if let Some(k) = &self.kernel {
            if k.grid() != grid {
                return Err(FdfError::Dimension("operator kernel is on a different grid".into()));
            }
            let w = grid.weights();
            let v = k.values();
            for j in 0..m {
                for i in 0..m {
                    out[(j, i)] += v[(i, j)] * w[i];
                }
            }
        }
        Ok(out)
    }
}

/// `Y_n = Σ_{j=0}^{J} A_j ε_{n−j}` with i.i.d. Gaussian innovations of
/// covariance kernel `innovation_cov`.
#[derive(Debug, Clone)]
pub struct LinearProcessSpec {
    pub operators: Vec<LinearOperator>,
    pub innovation_cov: KernelMatrix,
}

impl LinearProcessSpec {
    fn check(&self) -> Result<()> {
        if self.operators.is_empty() {
            return Err(FdfError::Parameter("linear process needs at least one operator".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.innovation_cov.grid()
    }

    fn summed_action(&self) -> Result<DMatrix<f64>> {
        let grid = self.grid();
        let mut total = DMatrix::zeros(grid.len(), grid.len());
        for op in &self.operators {
            total += op.action_matrix(grid)?;
        }
        Ok(total)
    }
}

/// Population long-run covariance kernel `A Γ_ε A*` with `A = Σ_j A_j`.
pub fn linear_process_longrun(spec: &LinearProcessSpec) -> Result<KernelMatrix> {
    spec.check()?;
    let a = spec.summed_action()?;
    let k = spec.innovation_cov.values();
    KernelMatrix::new(spec.grid().clone(), &a * k * a.transpose())
}

/// Population lag-0 covariance kernel `Σ_j A_j Γ_ε A_j*`.
pub fn linear_process_lag0(spec: &LinearProcessSpec) -> Result<KernelMatrix> {
    spec.check()?;
    let grid = spec.grid();
    let k = spec.innovation_cov.values();
    let mut total = DMatrix::zeros(grid.len(), grid.len());
    for op in &spec.operators {
        let a = op.action_matrix(grid)?;
        total += &a * k * a.transpose();
    }
    KernelMatrix::new(grid.clone(), total)
}

/// Draw `n` curves of the process; the first `J` innovations are burn-in.
pub fn simulate_linear_process(spec: &LinearProcessSpec, n: usize, seed: u64) -> Result<FunctionalSample> {
    spec.check()?;
    let grid = spec.grid().clone();
    let m = grid.len();
    let spectrum = kernel_spectrum(&spec.innovation_cov)?;
    let modes: Vec<(f64, &Vec<f64>)> = spectrum
        .eigenvalues()
        .iter()
        .zip(spectrum.eigenfunctions())
        .filter(|(l, _)| **l > 0.0)
        .map(|(l, v)| (l.sqrt(), v))
        .collect();
    let actions: Vec<DMatrix<f64>> =
        spec.operators.iter().map(|op| op.action_matrix(&grid)).collect::<Result<_>>()?;
    let depth = actions.len() - 1;

    let mut rng = rng_for(seed);
    let mut eps = DMatrix::<f64>::zeros(n + depth, m);
    for t in 0..n + depth {
        for (sd, v) in &modes {
            let z: f64 = rng.sample(StandardNormal);
            for (j, vj) in v.iter().enumerate() {
                eps[(t, j)] += sd * z * vj;
            }
        }
    }
    let mut values = DMatrix::<f64>::zeros(n, m);
    for (lag, a) in actions.iter().enumerate() {
        let shifted = eps.rows(depth - lag, n);
        values += &(shifted * a.transpose());
    }
    FunctionalSample::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::lag_cov_kernel;

    fn smooth_cov(grid: &Grid) -> KernelMatrix {
        KernelMatrix::from_fn(grid, |t, s| (-(t - s).powi(2) / 0.08).exp())
    }

    #[test]
    fn identity_action_is_identity() {
        let g = Grid::uniform(7).unwrap();
        let a = LinearOperator::identity().action_matrix(&g).unwrap();
        assert_eq!(a, DMatrix::identity(7, 7));
    }

    #[test]
    fn integral_action_matches_quadrature() {
        let g = Grid::uniform(21).unwrap();
        let k = KernelMatrix::from_fn(&g, |t, s| t * s + 1.0);
        let a = LinearOperator::integral(k).action_matrix(&g).unwrap();
        let x = g.eval(|t| t * t);
        let y = &a * nalgebra::DVector::from_vec(x.clone());
        for (j, s) in g.points().iter().enumerate() {
            let col: Vec<f64> = g.points().iter().map(|t| t * s + 1.0).collect();
            let direct = g.inner_product(&col, &x).unwrap();
            assert!((y[j] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_longrun_is_innovation_cov() {
        let g = Grid::uniform(15).unwrap();
        let cov = smooth_cov(&g);
        let spec = LinearProcessSpec { operators: vec![LinearOperator::identity()], innovation_cov: cov.clone() };
        let lr = linear_process_longrun(&spec).unwrap();
        assert!(lr.try_sub(&cov).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn simulated_lag0_covariance_is_close() {
        let g = Grid::uniform(11).unwrap();
        let spec = LinearProcessSpec {
            operators: vec![
                LinearOperator::identity(),
                LinearOperator::integral(KernelMatrix::from_fn(&g, |t, s| 0.5 * t * s)),
            ],
            innovation_cov: smooth_cov(&g),
        };
        let x = simulate_linear_process(&spec, 20_000, 3).unwrap().center().unwrap();
        let est = lag_cov_kernel(&x, 0).unwrap();
        let truth = linear_process_lag0(&spec).unwrap();
        let err = est.try_sub(&truth).unwrap().sup_norm() / truth.sup_norm();
        assert!(err < 0.05, "relative error {err}");
    }

    #[test]
    fn empty_operator_list() {
        let g = Grid::uniform(5).unwrap();
        let spec = LinearProcessSpec { operators: vec![], innovation_cov: smooth_cov(&g) };
        assert!(linear_process_longrun(&spec).is_err());
        assert!(simulate_linear_process(&spec, 3, 0).is_err());
    }
}
