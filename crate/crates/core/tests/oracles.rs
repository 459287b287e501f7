//! Independent reference computations checked against the library.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use fdf_core::cov::{
    build_lambda, cov0_spectrum, lag_cov_kernel, longrun_kernel, longrun_minus_lag0, KernelMatrix,
    LambdaOperator, LongRunVariant,
};
use fdf_core::factor::{extract_loadings, Block};
use fdf_core::fts::{fit_basis_coefficients, BSplineBasis, FunctionalSample, Grid};
use fdf_core::sim::{
    derive_seed, linear_process_longrun, simulate_model, LinearOperator, LinearProcessSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sample(n: usize, m: usize, seed: u64) -> FunctionalSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::uniform(m).unwrap();
    let values = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    FunctionalSample::new(grid, values).unwrap()
}

fn naive_lag(x: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let (n, m) = x.shape();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..n - h {
        for t in 0..m {
            for s in 0..m {
                out[(t, s)] += x[(i, t)] * x[(i + h, s)];
            }
        }
    }
    out / n as f64
}

#[test]
fn lag_kernels_match_triple_loop() {
    let x = random_sample(40, 9, 1).center().unwrap();
    for h in 0..5 {
        let k = lag_cov_kernel(&x, h as i64).unwrap();
        let oracle = naive_lag(x.values(), h);
        assert!((k.values() - &oracle).abs().max() < 1e-13, "lag {h}");
        let back = lag_cov_kernel(&x, -(h as i64)).unwrap();
        assert!((back.values() - oracle.transpose()).abs().max() < 1e-13);
    }
}

#[test]
fn longrun_kernel_matches_explicit_sum() {
    let x = random_sample(60, 7, 2).center().unwrap();
    let b = 4.5;
    let mut oracle = DMatrix::zeros(7, 7);
    for h in 1..=4usize {
        let w = 1.0 - h as f64 / b;
        let g = naive_lag(x.values(), h);
        oracle += (&g + g.transpose()) * w;
    }
    let got = longrun_kernel(&x, b, LongRunVariant::ExcludeLag0).unwrap();
    assert!((got.values() - &oracle).abs().max() < 1e-12);
    let with0 = longrun_kernel(&x, b, LongRunVariant::IncludeLag0).unwrap();
    let lag0 = naive_lag(x.values(), 0);
    assert!((with0.values() - (oracle + lag0)).abs().max() < 1e-12);
}

/// Nonzero eigenvalues of the full discretized operator
/// `(Γ̂ − Γ̂₀) Σ_{j≤p} d_j⁻¹ v_j ⊗ v_j` must equal those of the whitened matrix.
#[test]
fn whitened_eigenvalues_match_unsymmetrized_operator() {
    let d = simulate_model(2, 200, 41, 5, 1.0).unwrap();
    let x = d.sample.center().unwrap();
    let p = 4;
    let op = build_lambda(&x, 6.0, p).unwrap();
    let grid = x.grid();
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(grid.weights()));
    let c = longrun_minus_lag0(&x, 6.0).unwrap();
    let spec = cov0_spectrum(&x).unwrap();
    let m = grid.len();
    let mut pinv = DMatrix::zeros(m, m);
    for j in 0..p {
        let v = DVector::from_column_slice(&spec.eigenfunctions()[j]);
        pinv += (&v * v.transpose()) / spec.eigenvalues()[j];
    }
    // action matrices: kernel k acts as kᵀ W
    let full = c.values().transpose() * &w * pinv * &w;
    let mut got: Vec<f64> = full.complex_eigenvalues().iter().map(|z| z.re).collect();
    got.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut want: Vec<f64> = op.s().clone().symmetric_eigenvalues().iter().copied().collect();
    want.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    for i in 0..p {
        assert_relative_eq!(got[i], want[i], epsilon = 1e-8, max_relative = 1e-8);
    }
    assert!(got[p].abs() < 1e-8);
}

/// AR(1) factor with loading √2 sin(2πs) and unit innovation variance:
/// γ_h = a^{|h|}/(1−a²) λ⊗λ, so Λ has the single eigenvalue
/// Σ_{h≠0} a^{|h|} = 2a/(1−a).
#[test]
fn analytic_one_factor_operator() {
    let a: f64 = 0.7;
    let grid = Grid::uniform(101).unwrap();
    let lam = |s: f64| 2f64.sqrt() * (2.0 * PI * s).sin();
    let var = 1.0 / (1.0 - a * a);
    let gamma0 = KernelMatrix::from_fn(&grid, |t, s| var * lam(t) * lam(s));
    let longrun = KernelMatrix::from_fn(&grid, |t, s| var * 2.0 * a / (1.0 - a) * lam(t) * lam(s));
    let spec = fdf_core::cov::kernel_spectrum(&gamma0).unwrap();
    let op = LambdaOperator::from_parts(&spec, &longrun, 1).unwrap();
    let set = extract_loadings(&op, 1, Block::Stationary).unwrap();
    assert_relative_eq!(set.eigenvalues()[0], 2.0 * a / (1.0 - a), epsilon = 1e-6);
    let truth = grid.eval(lam);
    let err = set.curves()[0]
        .iter()
        .zip(&truth)
        .map(|(x, y)| (x.abs() - y.abs()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "sup error {err}");
}

#[test]
fn spline_fit_matches_normal_equations() {
    let basis = BSplineBasis::uniform(3, 8).unwrap();
    let pts: Vec<f64> = (0..25).map(|i| (i as f64 / 24.0).powf(1.3)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = DMatrix::from_fn(4, pts.len(), |_, _| rng.random_range(-2.0..2.0));
    let fit = fit_basis_coefficients(&pts, &values, &basis).unwrap();

    let b = basis.design(&pts).unwrap();
    let btb = b.transpose() * &b;
    let chol = btb.cholesky().unwrap();
    for r in 0..4 {
        let y = values.row(r).transpose();
        let beta = chol.solve(&(b.transpose() * &y));
        for k in 0..basis.n_basis() {
            assert_relative_eq!(fit.coefficients[(r, k)], beta[k], epsilon = 1e-9);
        }
        let resid = &y - &b * &beta;
        assert_relative_eq!(fit.rss[r], resid.norm_squared(), epsilon = 1e-9);
    }
}

fn direct_composition(
    grid: &Grid,
    a: &dyn Fn(f64, f64) -> f64,
    k: &dyn Fn(f64, f64) -> f64,
) -> DMatrix<f64> {
    // kernel of (I + A) Γ (I + A)* by explicit double quadrature
    let pts = grid.points();
    let w = grid.weights();
    let m = pts.len();
    DMatrix::from_fn(m, m, |ti, si| {
        let (t, s) = (pts[ti], pts[si]);
        let mut total = k(t, s);
        for (u, wu) in pts.iter().zip(w) {
            total += wu * a(*u, t) * k(*u, s);
            total += wu * a(*u, s) * k(t, *u);
            for (v, wv) in pts.iter().zip(w) {
                total += wu * wv * a(*u, t) * a(*v, s) * k(*u, *v);
            }
        }
        total
    })
}

#[test]
fn linear_process_longrun_matches_double_quadrature() {
    let grid = Grid::uniform(31).unwrap();
    let e1 = |t: f64| 2f64.sqrt() * (2.0 * PI * t).sin();
    let e2 = |t: f64| 2f64.sqrt() * (2.0 * PI * t).cos();
    let a1 = move |t: f64, s: f64| 0.8 * e1(t) * e1(s) + 0.3 * e2(t) * e1(s);
    let k = |t: f64, s: f64| t.min(s);
    let spec = LinearProcessSpec {
        operators: vec![
            LinearOperator::identity(),
            LinearOperator::integral(KernelMatrix::from_fn(&grid, a1)),
        ],
        innovation_cov: KernelMatrix::from_fn(&grid, k),
    };
    let got = linear_process_longrun(&spec).unwrap();
    let oracle = direct_composition(&grid, &a1, &k);
    assert!((got.values() - oracle).abs().max() < 1e-8);
}

#[test]
fn unit_ma1_longrun_is_four_times_innovation() {
    let grid = Grid::uniform(21).unwrap();
    let k = KernelMatrix::from_fn(&grid, |t, s| (-(t - s).abs()).exp());
    let spec = LinearProcessSpec {
        operators: vec![LinearOperator::identity(), LinearOperator::identity()],
        innovation_cov: k.clone(),
    };
    let got = linear_process_longrun(&spec).unwrap();
    assert!(got.try_sub(&k.scaled(4.0)).unwrap().sup_norm() < 1e-12);
}

#[test]
fn operator_on_other_grid_is_rejected() {
    let g1 = Grid::uniform(11).unwrap();
    let g2 = Grid::uniform(13).unwrap();
    let spec = LinearProcessSpec {
        operators: vec![LinearOperator::integral(KernelMatrix::zeros(&g2))],
        innovation_cov: KernelMatrix::zeros(&g1),
    };
    assert!(linear_process_longrun(&spec).is_err());
}

#[test]
fn derived_seeds_are_order_free() {
    let forward: Vec<u64> = (0..50).map(|i| derive_seed(9, i)).collect();
    let backward: Vec<u64> = (0..50).rev().map(|i| derive_seed(9, i)).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
}
