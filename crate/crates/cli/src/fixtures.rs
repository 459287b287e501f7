//! Synthetic input files: panels drawn from the simulation models and a
//! yield-curve look-alike with level, slope and curvature factors.

use std::path::Path;

use fdf_core::sim::{derive_seed, gen_ar1, gen_i1, simulate_model};
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};
use crate::input::WideTable;

/// Maturities in months of the look-alike panel.
pub const YIELD_MATURITIES: [f64; 8] = [3.0, 6.0, 12.0, 24.0, 36.0, 60.0, 84.0, 120.0];

pub fn to_csv(table: &WideTable) -> String {
    let mut out = String::from("s");
    for p in &table.points {
        out.push_str(&format!(",{p}"));
    }
    out.push('\n');
    for (i, label) in table.labels.iter().enumerate() {
        out.push_str(label);
        for v in table.values.row(i).iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, table: &WideTable) -> CliResult<()> {
    std::fs::write(path, to_csv(table)).map_err(|e| CliError::io(path, e))
}

/// `n` curves of simulation model `model` on a uniform grid of `m` points.
pub fn model_panel(model: u8, n: usize, m: usize, seed: u64, noise_scale: f64) -> CliResult<WideTable> {
    let data = simulate_model(model, n, m, seed, noise_scale)?;
    Ok(WideTable {
        points: data.sample.grid().points().to_vec(),
        labels: (1..=n).map(|i| i.to_string()).collect(),
        values: data.sample.values().clone(),
    })
}

/// Monthly yields (percent) following a dynamic Nelson–Siegel form: a
/// random-walk level, a persistent stationary slope and a stationary
/// curvature, plus small measurement noise.
pub fn yield_like_panel(n: usize, seed: u64) -> CliResult<WideTable> {
    let tau = 30.0;
    let q = YIELD_MATURITIES.len();
    let level = gen_i1(n, 0.3, derive_seed(seed, 0))?;
    let slope = gen_ar1(n, 0.9, derive_seed(seed, 1))?;
    let curve = gen_ar1(n, 0.7, derive_seed(seed, 2))?;
    let mut values = DMatrix::zeros(n, q);
    for j in 0..q {
        let noise = gen_ar1(n, 0.0, derive_seed(seed, 10 + j as u64))?;
        let x = YIELD_MATURITIES[j] / tau;
        let l2 = (1.0 - (-x).exp()) / x;
        let l3 = l2 - (-x).exp();
        for i in 0..n {
            let y = 6.0 + 0.25 * level[i] + (-1.5 + 0.5 * slope[i]) * l2 + 0.6 * curve[i] * l3 + 0.02 * noise[i];
            values[(i, j)] = (y * 1e4).round() / 1e4;
        }
    }
    Ok(WideTable {
        points: YIELD_MATURITIES.to_vec(),
        labels: (1..=n).map(|i| i.to_string()).collect(),
        values,
    })
}
