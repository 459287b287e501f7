//! Functional dynamic factor models for functional time series.
//!
//! Curves live on a shared quadrature [`Grid`]. Loadings are estimated from
//! the eigenfunctions of `Λ̂ = (Γ̂ − Γ̂₀) Γ̂₀⁻¹`, where `Γ̂` is a Bartlett
//! long-run covariance and `Γ̂₀` the lag-0 covariance. Stationary and
//! nonstationary (I(1)) pipelines are available, together with a functional
//! PCA baseline and the tests used to choose between them.

pub mod cov;
pub mod error;
pub mod factor;
pub mod fts;
pub mod sim;

pub use cov::{KernelMatrix, LongRunVariant, SpectralDecomposition};
pub use error::{FdfError, Result};
pub use factor::{
    Block, Diagnostics, Estimator, FdfFit, FitMode, FitOptions, KRule, LoadingSet, PretestOptions,
    TestRecord,
};
pub use fts::{FunctionalSample, Grid};
pub use sim::{SimConfig, SimResult};
