use fdf_core::cov::{build_lambda, lag_cov_kernel, longrun_kernel, LongRunVariant};
use fdf_core::factor::{
    extract_loadings, factor_scores, fit_nonstationary, fit_stationary, residual_series, Block,
    FitOptions,
};
use fdf_core::fts::{BSplineBasis, FunctionalSample, Grid};
use fdf_core::sim::{ise, match_loadings, run_monte_carlo, simulate_model, RepRecord, SimConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sample_strategy(max_n: usize) -> impl Strategy<Value = FunctionalSample> {
    (20usize..max_n, 5usize..16).prop_flat_map(|(n, m)| {
        prop::collection::vec(-5.0f64..5.0, n * m).prop_map(move |v| {
            let grid = Grid::uniform(m).unwrap();
            FunctionalSample::new(grid, DMatrix::from_row_slice(n, m, &v)).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn longrun_kernel_is_symmetric(x in sample_strategy(60), b in 1.0f64..8.0) {
        let x = x.center().unwrap();
        let k = longrun_kernel(&x, b, LongRunVariant::ExcludeLag0).unwrap();
        prop_assert!(k.max_asymmetry() <= 1e-12 * (1.0 + k.sup_norm()));
    }

    #[test]
    fn lag0_kernel_is_positive_semidefinite(x in sample_strategy(60)) {
        let x = x.center().unwrap();
        let k = lag_cov_kernel(&x, 0).unwrap();
        let eig = k.values().clone().symmetric_eigenvalues();
        let scale = 1.0 + k.sup_norm();
        prop_assert!(eig.iter().all(|v| *v >= -1e-10 * scale));
    }

    #[test]
    fn centering_is_idempotent(x in sample_strategy(40)) {
        let once = x.center().unwrap();
        let twice = once.center().unwrap();
        prop_assert!((once.values() - twice.values()).abs().max() < 1e-12);
        let mean = once.pointwise_mean();
        prop_assert!(mean.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cumulative_sum_inverts_difference(x in sample_strategy(40)) {
        let s = x.cumulative_sum();
        let d = s.difference().unwrap();
        let tail = x.values().rows(1, x.n_curves() - 1);
        prop_assert!((d.values() - tail).abs().max() < 1e-9);
        prop_assert_eq!(s.values().row(0), x.values().row(0));
    }

    #[test]
    fn splines_sum_to_one(degree in 1usize..4, extra in 1usize..8, s in 0.0f64..=1.0) {
        let basis = BSplineBasis::uniform(degree, degree + 1 + extra).unwrap();
        let total: f64 = basis.eval(s).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ise_is_bounded(
        a in prop::collection::vec(-3.0f64..3.0, 21),
        b in prop::collection::vec(-3.0f64..3.0, 21),
    ) {
        let g = Grid::uniform(21).unwrap();
        prop_assume!(g.norm(&a).unwrap() > 1e-6 && g.norm(&b).unwrap() > 1e-6);
        let e = ise(&a, &b, &g).unwrap();
        prop_assert!((0.0..=2.0).contains(&e));
        prop_assert!(ise(&a, &a, &g).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loading_matching_is_one_to_one(
        truth in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 21), 1..4),
        est in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 21), 1..6),
    ) {
        let g = Grid::uniform(21).unwrap();
        prop_assume!(truth.iter().chain(&est).all(|c| g.norm(c).unwrap() > 1e-6));
        let m = match_loadings(&truth, &est, &g).unwrap();
        let used: Vec<usize> = m.iter().flatten().copied().collect();
        let mut dedup = used.clone();
        dedup.sort_unstable();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), used.len());
        prop_assert_eq!(used.len(), truth.len().min(est.len()));
    }

    #[test]
    fn extracted_loadings_are_orthonormal(seed in 0u64..1000, model in 1u8..=2, k0 in 2usize..5) {
        let d = simulate_model(model, 150, 41, seed, 1.0).unwrap();
        let x = d.sample.center().unwrap();
        let op = build_lambda(&x, 6.0, 6).unwrap();
        let set = extract_loadings(&op, k0, Block::Stationary).unwrap();
        prop_assert!(set.orthonormality_error() < 1e-8);
    }

    #[test]
    fn fitted_loadings_are_orthonormal(seed in 0u64..1000, model in 1u8..=4) {
        let d = simulate_model(model, 150, 41, seed, 1.0).unwrap();
        let opts = FitOptions::default();
        let fit = if model >= 3 {
            fit_nonstationary(&d.sample, &opts).unwrap()
        } else {
            fit_stationary(&d.sample, &opts).unwrap()
        };
        prop_assert!(fit.loadings.orthonormality_error() < 1e-8);
        prop_assert_eq!(fit.factors.ncols(), fit.loadings.len());
        prop_assert_eq!(fit.factors.nrows(), 150);
    }

    #[test]
    fn residuals_are_orthogonal_to_loadings(seed in 0u64..1000) {
        let d = simulate_model(4, 150, 41, seed, 1.0).unwrap();
        let opts = FitOptions { forced_k: Some(2), forced_r: Some(1), ..FitOptions::default() };
        let fit = fit_nonstationary(&d.sample, &opts).unwrap();
        let levels = d.sample.center().unwrap();
        let scores = factor_scores(&levels, &fit.loadings).unwrap();
        let z = residual_series(&levels, &fit.loadings, &scores).unwrap();
        let scale = levels.values().abs().max();
        for curve in fit.loadings.curves() {
            let proj = z.project(curve).unwrap();
            prop_assert!(proj.iter().all(|v| v.abs() < 1e-9 * scale));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), threads in 1usize..4) {
        let mut cfg = SimConfig::new(1, 100, 3, seed);
        cfg.m = 31;
        cfg.threads = Some(threads);
        let a = run_monte_carlo(&cfg).unwrap();
        cfg.threads = Some(1);
        let b = run_monte_carlo(&cfg).unwrap();
        let strip = |r: &[RepRecord]| r.iter().map(RepRecord::without_timing).collect::<Vec<_>>();
        prop_assert_eq!(strip(&a.records), strip(&b.records));
    }
}
