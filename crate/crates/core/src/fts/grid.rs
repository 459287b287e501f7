use serde::{Deserialize, Serialize};

use crate::error::{FdfError, Result};

/// Quadrature grid over `[0, 1]` with trapezoidal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `m` points, including both endpoints.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(FdfError::Parameter(format!("grid needs at least 3 points, got {m}")));
        }
        let step = 1.0 / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|j| j as f64 * step).collect();
        points[m - 1] = 1.0;
        Self::from_points(points)
    }

    /// Arbitrary strictly increasing abscissae starting at 0 and ending at 1.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if m < 3 {
            return Err(FdfError::Parameter(format!("grid needs at least 3 points, got {m}")));
        }
        if points[0] != 0.0 || points[m - 1] != 1.0 {
            return Err(FdfError::Parameter("grid must start at 0 and end at 1".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FdfError::Parameter("grid points must be strictly increasing".into()));
        }
        let mut weights = vec![0.0; m];
        for j in 0..m - 1 {
            let half = 0.5 * (points[j + 1] - points[j]);
            weights[j] += half;
            weights[j + 1] += half;
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when consecutive spacings agree to within rounding.
    pub fn is_uniform(&self) -> bool {
        let step = 1.0 / (self.len() - 1) as f64;
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(1.0))
    }

    /// Trapezoidal approximation of `∫ f g`.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(self.dot_unchecked(f, g))
    }

    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        Ok(self.inner_product(f, f)?.sqrt())
    }

    /// Trapezoidal approximation of `∫ f`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(f.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }

    pub(crate) fn dot_unchecked(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(FdfError::Dimension(format!(
                "vector of length {len} on a grid of {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Evaluate `f` at every grid point.
    pub fn eval<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(|&s| f(s)).collect()
    }
}

/// Free-function form of [`Grid::inner_product`].
pub fn inner_product(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    grid.inner_product(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_one() {
        for m in [3, 26, 101, 257] {
            let g = Grid::uniform(m).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let g = Grid::from_points(vec![0.0, 0.1, 0.35, 0.9, 1.0]).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(!g.is_uniform());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::uniform(2).is_err());
        assert!(Grid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid::from_points(vec![0.1, 0.5, 1.0]).is_err());
    }

    #[test]
    fn constant_integrand() {
        let g = Grid::from_points(vec![0.0, 0.2, 0.3, 0.7, 1.0]).unwrap();
        let one = vec![1.0; 5];
        assert_eq!(g.inner_product(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn trigonometric_integrals() {
        let g = Grid::uniform(101).unwrap();
        let s = g.eval(|x| (2.0 * PI * x).sin());
        let c = g.eval(|x| (2.0 * PI * x).cos());
        assert!((inner_product(&s, &s, &g).unwrap() - 0.5).abs() < 1e-3);
        assert!(inner_product(&s, &c, &g).unwrap().abs() < 1e-3);
    }

    #[test]
    fn length_mismatch() {
        let g = Grid::uniform(11).unwrap();
        assert!(matches!(
            g.inner_product(&[1.0; 10], &[1.0; 11]),
            Err(FdfError::Dimension(_))
        ));
    }

    #[test]
    fn second_order_convergence() {
        // ∫ exp(s) s^2 ds over [0, 1] = e - 2
        let exact = std::f64::consts::E - 2.0;
        let errs: Vec<f64> = [26, 51, 101]
            .iter()
            .map(|&m| {
                let g = Grid::uniform(m).unwrap();
                let f = g.eval(|x| x.exp());
                let h = g.eval(|x| x * x);
                (g.inner_product(&f, &h).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        }
    }
}
