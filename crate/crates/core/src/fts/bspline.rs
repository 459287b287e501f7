//! Clamped B-spline bases on `[0, 1]` and least-squares smoothing of
//! discretely observed curves onto a quadrature grid.

use nalgebra::DMatrix;

use super::grid::Grid;
use super::sample::FunctionalSample;
use crate::error::{FdfError, Result};

/// Clamped B-spline basis on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    interior_knots: Vec<f64>,
    knots: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(degree: usize, interior_knots: Vec<f64>) -> Result<Self> {
        if interior_knots.iter().any(|k| !(*k > 0.0 && *k < 1.0)) {
            return Err(FdfError::Parameter("interior knots must lie in (0, 1)".into()));
        }
        if interior_knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(FdfError::Parameter("interior knots must be nondecreasing".into()));
        }
        let mut knots = vec![0.0; degree + 1];
        knots.extend_from_slice(&interior_knots);
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(Self { degree, interior_knots, knots })
    }

    /// Basis of `n_basis` functions whose interior knots sit at equally
    /// spaced quantiles of `points`.
    pub fn from_quantiles(degree: usize, n_basis: usize, points: &[f64]) -> Result<Self> {
        if n_basis < degree + 1 {
            return Err(FdfError::Parameter(format!(
                "degree {degree} needs at least {} basis functions",
                degree + 1
            )));
        }
        if points.is_empty() {
            return Err(FdfError::Parameter("no observation points".into()));
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n_interior = n_basis - degree - 1;
        let knots = (1..=n_interior)
            .map(|k| quantile(&sorted, k as f64 / (n_interior + 1) as f64))
            .collect();
        Self::new(degree, knots)
    }

    /// Equally spaced interior knots.
    pub fn uniform(degree: usize, n_basis: usize) -> Result<Self> {
        if n_basis < degree + 1 {
            return Err(FdfError::Parameter(format!(
                "degree {degree} needs at least {} basis functions",
                degree + 1
            )));
        }
        let n_interior = n_basis - degree - 1;
        let knots = (1..=n_interior).map(|k| k as f64 / (n_interior + 1) as f64).collect();
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.interior_knots
    }

    pub fn n_basis(&self) -> usize {
        self.interior_knots.len() + self.degree + 1
    }

    /// Values of all basis functions at `s` (Cox–de Boor recursion).
    pub fn eval(&self, s: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(FdfError::Domain(s));
        }
        let p = self.degree;
        let t = &self.knots;
        let span = self.find_span(s);

        // Triangular table of the p+1 functions that are nonzero on the span.
        let mut local = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        local[0] = 1.0;
        for j in 1..=p {
            left[j] = s - t[span + 1 - j];
            right[j] = t[span + j] - s;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { local[r] / denom };
                local[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            local[j] = saved;
        }

        let mut out = vec![0.0; self.n_basis()];
        for (r, v) in local.into_iter().enumerate() {
            out[span - p + r] = v;
        }
        Ok(out)
    }

    fn find_span(&self, s: f64) -> usize {
        let p = self.degree;
        let n = self.n_basis();
        if s >= self.knots[n] {
            // Right endpoint belongs to the last nondegenerate span.
            let mut i = n - 1;
            while i > p && self.knots[i] >= self.knots[i + 1] {
                i -= 1;
            }
            return i;
        }
        // Largest i with t[i] <= s < t[i+1].
        let mut i = p;
        while i < n - 1 && self.knots[i + 1] <= s {
            i += 1;
        }
        i
    }

    /// `points.len() × n_basis` design matrix.
    pub fn design(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let mut b = DMatrix::zeros(points.len(), self.n_basis());
        for (i, &s) in points.iter().enumerate() {
            let row = self.eval(s)?;
            for (j, v) in row.into_iter().enumerate() {
                b[(i, j)] = v;
            }
        }
        Ok(b)
    }
}

/// Least-squares basis coefficients for each observed row.
#[derive(Debug, Clone)]
pub struct BasisFit {
    /// `N × n_basis`.
    pub coefficients: DMatrix<f64>,
    /// Residual sum of squares per row.
    pub rss: Vec<f64>,
}

pub fn fit_basis_coefficients(
    obs_points: &[f64],
    obs_values: &DMatrix<f64>,
    basis: &BSplineBasis,
) -> Result<BasisFit> {
    let q = obs_points.len();
    let k = basis.n_basis();
    if obs_values.ncols() != q {
        return Err(FdfError::Dimension(format!(
            "{} observed values per row for {q} observation points",
            obs_values.ncols()
        )));
    }
    if q < k {
        return Err(FdfError::Underdetermined { points: q, basis: k });
    }
    let design = basis.design(obs_points)?;
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(FdfError::Conditioning(format!(
            "B-spline design is rank deficient (singular values {smax:e} .. {smin:e})"
        )));
    }
    let rhs = obs_values.transpose();
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| FdfError::Conditioning(e.to_string()))?;
    let resid = &design * &coef - &rhs;
    let rss = resid.column_iter().map(|c| c.norm_squared()).collect();
    Ok(BasisFit { coefficients: coef.transpose(), rss })
}

/// Fit every row of `obs_values` by least squares in `basis` and evaluate
/// the fitted curves on `target_grid`.
pub fn smooth_to_sample(
    obs_points: &[f64],
    obs_values: &DMatrix<f64>,
    basis: &BSplineBasis,
    target_grid: &Grid,
) -> Result<FunctionalSample> {
    if let Some(&s) = obs_points.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(FdfError::Domain(s));
    }
    let fit = fit_basis_coefficients(obs_points, obs_values, basis)?;
    let eval = basis.design(target_grid.points())?;
    let values = &fit.coefficients * eval.transpose();
    FunctionalSample::new(target_grid.clone(), values)
}

/// How raw observation abscissae (e.g. maturities) are mapped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointScale {
    /// Affine map of `[min, max]` onto `[0, 1]`.
    #[default]
    Calendar,
    /// Equally spaced by rank.
    Rank,
}

/// Rescale strictly increasing raw points into `[0, 1]`.
pub fn rescale_points(raw: &[f64], scale: PointScale) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(FdfError::Parameter("need at least two observation points".into()));
    }
    if raw.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FdfError::Parameter("observation points must be strictly increasing".into()));
    }
    let q = raw.len();
    Ok(match scale {
        PointScale::Calendar => {
            let (lo, hi) = (raw[0], raw[q - 1]);
            let mut out: Vec<f64> = raw.iter().map(|v| (v - lo) / (hi - lo)).collect();
            out[0] = 0.0;
            out[q - 1] = 1.0;
            out
        }
        PointScale::Rank => (0..q).map(|i| i as f64 / (q - 1) as f64).collect(),
    })
}

fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
