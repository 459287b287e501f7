use nalgebra::DMatrix;

use super::grid::Grid;
use crate::error::{FdfError, Result};

/// `N` curves observed on a shared grid; row `n` holds `X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Grid,
    values: DMatrix<f64>,
    centered: bool,
    mean_curve: Option<Vec<f64>>,
}

impl FunctionalSample {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(FdfError::Dimension(format!(
                "{} columns for a grid of {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FdfError::Numeric("sample contains non-finite values".into()));
        }
        Ok(Self { grid, values, centered: false, mean_curve: None })
    }

    pub fn from_rows(grid: Grid, rows: &[Vec<f64>]) -> Result<Self> {
        let m = grid.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(FdfError::Dimension(format!(
                "curve of length {} on a grid of {m} points",
                bad.len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_curves(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn mean_curve(&self) -> Option<&[f64]> {
        self.mean_curve.as_deref()
    }

    /// Copy of curve `n` (0-based).
    pub fn curve(&self, n: usize) -> Vec<f64> {
        self.values.row(n).iter().copied().collect()
    }

    pub fn pointwise_mean(&self) -> Vec<f64> {
        let n = self.n_curves().max(1) as f64;
        self.values.row_sum().iter().map(|v| v / n).collect()
    }

    /// Subtract the pointwise sample mean. Repeated centering accumulates
    /// the recorded mean so that `mean_curve` always refers to the raw data.
    pub fn center(&self) -> Result<Self> {
        let n = self.n_curves();
        if n < 2 {
            return Err(FdfError::InsufficientData { needed: 2, got: n });
        }
        let mean = self.pointwise_mean();
        let mut values = self.values.clone();
        for (j, mu) in mean.iter().enumerate() {
            values.column_mut(j).add_scalar_mut(-mu);
        }
        let mean_curve = match &self.mean_curve {
            Some(prev) => prev.iter().zip(&mean).map(|(a, b)| a + b).collect(),
            None => mean,
        };
        Ok(Self {
            grid: self.grid.clone(),
            values,
            centered: true,
            mean_curve: Some(mean_curve),
        })
    }

    /// First differences `X_{n+1} - X_n`, giving `N - 1` curves.
    pub fn difference(&self) -> Result<Self> {
        let n = self.n_curves();
        if n < 2 {
            return Err(FdfError::InsufficientData { needed: 2, got: n });
        }
        let values = self.values.rows(1, n - 1) - self.values.rows(0, n - 1);
        Ok(Self { grid: self.grid.clone(), values, centered: false, mean_curve: None })
    }

    /// Partial sums `X_1 + ... + X_n` for each `n`.
    pub fn cumulative_sum(&self) -> Self {
        let mut values = self.values.clone();
        for i in 1..values.nrows() {
            let prev = values.row(i - 1).clone_owned();
            let mut row = values.row_mut(i);
            row += prev;
        }
        Self { grid: self.grid.clone(), values, centered: false, mean_curve: None }
    }

    /// Add `curve` to every observation.
    pub fn shifted(&self, curve: &[f64]) -> Result<Self> {
        self.grid.check_len(curve.len())?;
        let mut values = self.values.clone();
        for (j, c) in curve.iter().enumerate() {
            values.column_mut(j).add_scalar_mut(*c);
        }
        Self::new(self.grid.clone(), values)
    }

    /// Quadrature inner products `⟨X_n, g⟩` for every curve.
    pub fn project(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(g.len())?;
        let wg: Vec<f64> = g.iter().zip(self.grid.weights()).map(|(a, w)| a * w).collect();
        let wg = nalgebra::DVector::from_vec(wg);
        Ok((&self.values * wg).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(levels: &[f64], m: usize) -> FunctionalSample {
        let grid = Grid::uniform(m).unwrap();
        let rows: Vec<Vec<f64>> = levels.iter().map(|&c| vec![c; m]).collect();
        FunctionalSample::from_rows(grid, &rows).unwrap()
    }

    #[test]
    fn center_symmetric_constants() {
        let c = constants(&[1.0, -1.0], 5).center().unwrap();
        assert_eq!(c.curve(0), vec![1.0; 5]);
        assert_eq!(c.curve(1), vec![-1.0; 5]);
        assert_eq!(c.mean_curve().unwrap(), &[0.0; 5]);
        assert!(c.is_centered());
    }

    #[test]
    fn center_shifted_constants() {
        let c = constants(&[2.0, 4.0], 5).center().unwrap();
        assert_eq!(c.curve(0), vec![-1.0; 5]);
        assert_eq!(c.curve(1), vec![1.0; 5]);
        assert_eq!(c.mean_curve().unwrap(), &[3.0; 5]);
    }

    #[test]
    fn center_is_idempotent() {
        let grid = Grid::uniform(7).unwrap();
        let vals = DMatrix::from_fn(5, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin() + i as f64);
        let once = FunctionalSample::new(grid, vals).unwrap().center().unwrap();
        let twice = once.center().unwrap();
        assert!((once.values() - twice.values()).amax() < 1e-12);
        let m1 = once.mean_curve().unwrap();
        let m2 = twice.mean_curve().unwrap();
        assert!(m1.iter().zip(m2).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(twice.pointwise_mean().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn center_needs_two_curves() {
        assert!(matches!(
            constants(&[1.0], 4).center(),
            Err(FdfError::InsufficientData { .. })
        ));
        assert!(constants(&[1.0], 4).difference().is_err());
    }

    #[test]
    fn difference_of_constant_sample_is_zero() {
        let d = constants(&[3.0, 3.0, 3.0], 4).difference().unwrap();
        assert_eq!(d.n_curves(), 2);
        assert!(d.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn difference_of_ramp() {
        let grid = Grid::uniform(5).unwrap();
        let s = grid.points().to_vec();
        let rows = vec![vec![0.0; 5], s.clone(), s.iter().map(|v| 2.0 * v).collect()];
        let d = FunctionalSample::from_rows(grid, &rows).unwrap().difference().unwrap();
        for n in 0..2 {
            let row = d.curve(n);
            assert!(row.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn difference_then_cumsum_telescopes() {
        let grid = Grid::uniform(6).unwrap();
        let vals = DMatrix::from_fn(8, 6, |i, j| ((i + 2 * j) as f64).cos() * (i as f64 + 1.0));
        let x = FunctionalSample::new(grid, vals).unwrap();
        let rebuilt = x.difference().unwrap().cumulative_sum();
        for n in 0..rebuilt.n_curves() {
            for j in 0..6 {
                let expect = x.values()[(n + 1, j)] - x.values()[(0, j)];
                assert!((rebuilt.values()[(n, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let grid = Grid::uniform(5).unwrap();
        assert!(FunctionalSample::from_rows(grid, &[vec![0.0; 4]]).is_err());
    }
}
