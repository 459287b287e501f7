//! Curves on a shared quadrature grid: inner products, centering,
//! differencing and B-spline smoothing from discrete observations.

mod bspline;
mod grid;
mod sample;

pub use bspline::{
    fit_basis_coefficients, rescale_points, smooth_to_sample, BSplineBasis, BasisFit, PointScale,
};
pub use grid::{inner_product, Grid};
pub use sample::FunctionalSample;
