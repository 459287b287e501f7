use serde::{Deserialize, Serialize};

use crate::error::{FdfError, Result};

/// Rule for choosing the number of factors from candidate eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KRule {
    /// Smallest consecutive ratio `|α_{i+1}| / |α_i|`.
    #[default]
    Ratio,
    /// Largest consecutive gap `|α_i| − |α_{i+1}|` (scree elbow).
    Scree,
    /// Index of the smallest `|α_i|`; always `k0` for sorted input.
    ScreeLiteral,
}

impl KRule {
    pub fn apply(self, alphas: &[f64], k0: usize) -> Result<usize> {
        match self {
            KRule::Ratio => estimate_k_ratio(alphas, k0),
            KRule::Scree => estimate_k_scree(alphas, k0, false),
            KRule::ScreeLiteral => estimate_k_scree(alphas, k0, true),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KRule::Ratio => "ratio",
            KRule::Scree => "scree",
            KRule::ScreeLiteral => "scree-literal",
        }
    }
}

const ZERO_CLAMP: f64 = 1e-12;

fn magnitudes(alphas: &[f64], k0: usize) -> Result<Vec<f64>> {
    if k0 < 2 {
        return Err(FdfError::Parameter(format!("need k0 >= 2, got {k0}")));
    }
    if alphas.len() < k0 {
        return Err(FdfError::Parameter(format!(
            "{} eigenvalues supplied for k0 = {k0}",
            alphas.len()
        )));
    }
    Ok(alphas[..k0].iter().map(|a| a.abs()).collect())
}

/// Ratio estimator: `argmin_{1≤i<k0} |α_{i+1}| / |α_i|`, ties to the smallest `i`.
pub fn estimate_k_ratio(alphas: &[f64], k0: usize) -> Result<usize> {
    let mags: Vec<f64> = magnitudes(alphas, k0)?
        .into_iter()
        .map(|a| a.max(ZERO_CLAMP))
        .collect();
    let mut best = (f64::INFINITY, 1);
    for i in 0..k0 - 1 {
        let ratio = mags[i + 1] / mags[i];
        if ratio < best.0 {
            best = (ratio, i + 1);
        }
    }
    Ok(best.1)
}

/// Scree estimator. The default is the largest-gap elbow; `literal` returns
/// the position of the smallest magnitude.
pub fn estimate_k_scree(alphas: &[f64], k0: usize, literal: bool) -> Result<usize> {
    let mags = magnitudes(alphas, k0)?;
    if literal {
        let mut best = (f64::INFINITY, 1);
        for (i, a) in mags.iter().enumerate() {
            if *a < best.0 {
                best = (*a, i + 1);
            }
        }
        return Ok(best.1);
    }
    let mut best = (f64::NEG_INFINITY, 1);
    for i in 0..k0 - 1 {
        let gap = mags[i] - mags[i + 1];
        if gap > best.0 {
            best = (gap, i + 1);
        }
    }
    Ok(best.1)
}
