use crate::error::{FdfError, Result};
use crate::fts::Grid;

fn normalized(f: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let nrm = grid.norm(f)?;
    if !(nrm > 0.0) || !nrm.is_finite() {
        return Err(FdfError::Parameter("loading curve has zero norm".into()));
    }
    Ok(f.iter().map(|v| v / nrm).collect())
}

/// Sign-invariant integrated squared error between unit-normalized curves:
/// `min_± ‖λ/‖λ‖ ∓ λ̂/‖λ̂‖‖²`. Lies in `[0, 2]`.
pub fn ise(truth: &[f64], estimate: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(truth.len())?;
    grid.check_len(estimate.len())?;
    let a = normalized(truth, grid)?;
    let b = normalized(estimate, grid)?;
    let ip = grid.dot_unchecked(&a, &b);
    Ok((2.0 - 2.0 * ip.abs()).max(0.0))
}

/// Greedy matching of estimated to true curves by the largest remaining
/// `|⟨λ̂_i, λ_j⟩|` after normalization. Returns, for each true curve, the index
/// of its estimate (`None` when estimates run out).
pub fn match_loadings(truth: &[Vec<f64>], estimates: &[Vec<f64>], grid: &Grid) -> Result<Vec<Option<usize>>> {
    let t: Vec<Vec<f64>> = truth.iter().map(|f| normalized(f, grid)).collect::<Result<_>>()?;
    let e: Vec<Vec<f64>> = estimates.iter().map(|f| normalized(f, grid)).collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(t.len() * e.len());
    for (j, tj) in t.iter().enumerate() {
        for (i, ei) in e.iter().enumerate() {
            pairs.push((grid.dot_unchecked(tj, ei).abs(), j, i));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![None; t.len()];
    let mut used = vec![false; e.len()];
    for (_, j, i) in pairs {
        if out[j].is_none() && !used[i] {
            out[j] = Some(i);
            used[i] = true;
        }
    }
    Ok(out)
}
