use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FdfError, Result};
use crate::fts::{FunctionalSample, Grid};

/// SplitMix64 finalizer applied to `(master, index)`; gives independent
/// per-stream seeds that do not depend on execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_coefficient(a: f64) -> Result<()> {
    if !(a.abs() < 1.0) {
        return Err(FdfError::Parameter(format!("autoregressive coefficient {a} must satisfy |a| < 1")));
    }
    Ok(())
}

pub(crate) fn ar1_with<R: Rng>(n: usize, a: f64, rng: &mut R) -> Vec<f64> {
    let sd0 = (1.0 / (1.0 - a * a)).sqrt();
    let mut prev = sd0 * rng.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|_| {
            prev = a * prev + rng.sample::<f64, _>(StandardNormal);
            prev
        })
        .collect()
}

/// Stationary Gaussian AR(1) path `f_n = a f_{n-1} + u_n`, started from
/// the stationary law.
pub fn gen_ar1(n: usize, a: f64, seed: u64) -> Result<Vec<f64>> {
    check_coefficient(a)?;
    Ok(ar1_with(n, a, &mut rng_for(seed)))
}

/// ARIMA(1,1,0) path: cumulative sum of an AR(1) path, with `f_0 = 0`.
pub fn gen_i1(n: usize, phi: f64, seed: u64) -> Result<Vec<f64>> {
    check_coefficient(phi)?;
    Ok(cumsum(&ar1_with(n, phi, &mut rng_for(seed))))
}

fn cumsum(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Independent standard Brownian motions on a uniform grid, `W(0) = 0`.
pub fn gen_bm_noise(n: usize, grid: &Grid, seed: u64) -> Result<FunctionalSample> {
    if !grid.is_uniform() {
        return Err(FdfError::Parameter("Brownian noise needs a uniform grid".into()));
    }
    let mut rng = rng_for(seed);
    Ok(bm_with(n, grid, &mut rng))
}

fn bm_with<R: Rng>(n: usize, grid: &Grid, rng: &mut R) -> FunctionalSample {
    let m = grid.len();
    let step = (1.0 / (m - 1) as f64).sqrt();
    let mut values = DMatrix::zeros(n, m);
    for i in 0..n {
        let mut w = 0.0;
        for j in 1..m {
            w += step * rng.sample::<f64, _>(StandardNormal);
            values[(i, j)] = w;
        }
    }
    FunctionalSample::new(grid.clone(), values).expect("finite by construction")
}

/// Dynamics of one simulated factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FactorLaw {
    Ar1(f64),
    I1(f64),
}

/// One of the four benchmark designs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: u8,
    pub factors: Vec<FactorLaw>,
}

impl ModelSpec {
    pub fn new(id: u8) -> Result<Self> {
        let factors = match id {
            1 => vec![FactorLaw::Ar1(0.7)],
            2 => vec![FactorLaw::Ar1(0.8), FactorLaw::Ar1(-0.5)],
            3 => vec![FactorLaw::I1(0.5)],
            4 => vec![FactorLaw::I1(0.7), FactorLaw::Ar1(0.5)],
            other => return Err(FdfError::Parameter(format!("unknown model {other}; expected 1..=4"))),
        };
        Ok(Self { id, factors })
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// Number of I(1) factors.
    pub fn r(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f, FactorLaw::I1(_))).count()
    }

    pub fn is_nonstationary(&self) -> bool {
        self.r() > 0
    }

    /// `sin(2πs)` then `cos(2πs)`.
    pub fn loading(&self, k: usize, s: f64) -> f64 {
        let x = 2.0 * std::f64::consts::PI * s;
        if k == 0 {
            x.sin()
        } else {
            x.cos()
        }
    }
}

/// Simulated curves with their generating loadings and factor paths.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub sample: FunctionalSample,
    /// `K` loading curves on the grid (not normalized).
    pub loadings: Vec<Vec<f64>>,
    /// `N × K` factor paths.
    pub factors: DMatrix<f64>,
}

/// `X_n = Σ_k f_{n,k} λ_k + noise_scale · W_n` for model `model_id`.
pub fn simulate_model(
    model_id: u8,
    n: usize,
    m: usize,
    seed: u64,
    noise_scale: f64,
) -> Result<SimulatedData> {
    let spec = ModelSpec::new(model_id)?;
    let grid = Grid::uniform(m)?;
    let k = spec.k();
    let mut factors = DMatrix::zeros(n, k);
    for (j, law) in spec.factors.iter().enumerate() {
        let sub = derive_seed(seed, j as u64);
        let path = match *law {
            FactorLaw::Ar1(a) => gen_ar1(n, a, sub)?,
            FactorLaw::I1(phi) => gen_i1(n, phi, sub)?,
        };
        factors.column_mut(j).copy_from_slice(&path);
    }
    let loadings: Vec<Vec<f64>> = (0..k).map(|j| grid.eval(|s| spec.loading(j, s))).collect();
    let lam = DMatrix::from_fn(k, m, |r, c| loadings[r][c]);
    let mut values = &factors * lam;
    if noise_scale != 0.0 {
        let noise = gen_bm_noise(n, &grid, derive_seed(seed, 1_000))?;
        values += noise.values() * noise_scale;
    }
    Ok(SimulatedData { sample: FunctionalSample::new(grid, values)?, loadings, factors })
}
