//! Size and power of the pre-tests, and consistency of the estimator, over
//! fixed seed families. These run a few hundred fits each.

use fdf_core::factor::{independence_test, stationarity_test, Estimator};
use fdf_core::fts::{FunctionalSample, Grid};
use fdf_core::sim::{derive_seed, gen_bm_noise, median, run_monte_carlo, simulate_model, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MC_REPS: usize = 1000;

fn functional_ar1(n: usize, a: f64, grid: &Grid, seed: u64) -> FunctionalSample {
    let eps = gen_bm_noise(n + 50, grid, seed).unwrap();
    let mut x = eps.values().clone();
    for i in 1..x.nrows() {
        let prev = x.row(i - 1).clone_owned() * a;
        let mut row = x.row_mut(i);
        row += prev;
    }
    FunctionalSample::new(grid.clone(), x.rows(50, n).clone_owned()).unwrap()
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

#[test]
fn independence_test_detects_functional_ar1() {
    let grid = Grid::uniform(51).unwrap();
    let hits = (0..200u64)
        .into_par_iter()
        .filter(|&i| {
            let x = functional_ar1(500, 0.8, &grid, derive_seed(71, i));
            independence_test(&x, 10, 3).unwrap().p_value < 0.01
        })
        .count();
    assert!(rate(hits, 200) >= 0.99, "power {}", rate(hits, 200));
}

#[test]
fn independence_test_size_on_iid_noise() {
    let grid = Grid::uniform(51).unwrap();
    let hits = (0..400u64)
        .into_par_iter()
        .filter(|&i| {
            let x = gen_bm_noise(500, &grid, derive_seed(72, i)).unwrap();
            independence_test(&x, 10, 3).unwrap().p_value < 0.05
        })
        .count();
    let size = rate(hits, 400);
    assert!((0.02..=0.09).contains(&size), "size {size}");
}

#[test]
fn stationarity_test_rejects_random_walk() {
    let grid = Grid::uniform(51).unwrap();
    let hits = (0..200u64)
        .into_par_iter()
        .filter(|&i| {
            let walk = gen_bm_noise(366, &grid, derive_seed(73, i)).unwrap().cumulative_sum();
            stationarity_test(&walk, 3, MC_REPS, i).unwrap().p_value <= 0.01
        })
        .count();
    assert!(rate(hits, 200) >= 0.95, "power {}", rate(hits, 200));
}

#[test]
fn stationarity_test_size_on_iid_noise() {
    let grid = Grid::uniform(51).unwrap();
    let hits = (0..300u64)
        .into_par_iter()
        .filter(|&i| {
            let x = gen_bm_noise(400, &grid, derive_seed(74, i)).unwrap();
            stationarity_test(&x, 3, MC_REPS, i).unwrap().p_value < 0.05
        })
        .count();
    let size = rate(hits, 300);
    assert!((0.01..=0.09).contains(&size), "size {size}");
}

#[test]
fn stationarity_test_rejects_model3_curves() {
    let hits = (0..100u64)
        .into_par_iter()
        .filter(|&i| {
            let d = simulate_model(3, 500, 51, derive_seed(75, i), 1.0).unwrap();
            stationarity_test(&d.sample, 3, MC_REPS, i).unwrap().p_value < 0.05
        })
        .count();
    assert!(rate(hits, 100) >= 0.90, "power {}", rate(hits, 100));
}

#[test]
fn loading_error_falls_with_sample_size() {
    let run = |n: usize| {
        let mut cfg = SimConfig::new(1, n, 200, 76);
        cfg.estimators = vec![Estimator::Fdf];
        cfg.k_rules = vec![];
        run_monte_carlo(&cfg).unwrap().ise_values(Estimator::Fdf, 0)
    };
    let small = run(200);
    let large = run(1000);
    let gap = median(&small) - median(&large);
    assert!(gap > 0.0, "median ISE {} at N=200 vs {} at N=1000", median(&small), median(&large));

    // share of bootstrap resamples in which the larger sample wins
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let resample = |v: &[f64], rng: &mut ChaCha8Rng| {
        let draw: Vec<f64> = (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect();
        median(&draw)
    };
    let wins = (0..2000).filter(|_| resample(&large, &mut rng) < resample(&small, &mut rng)).count();
    assert!(wins as f64 / 2000.0 >= 0.95, "larger sample wins in {wins}/2000 resamples");
}
