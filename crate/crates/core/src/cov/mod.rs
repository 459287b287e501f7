//! Lag covariance kernels, the Bartlett-smoothed long-run kernel, and the
//! whitened target operator `Λ̂ = (Γ̂ − Γ̂₀) Γ̂₀⁻¹`.

mod kernel;
mod lambda;
mod spectrum;

pub use kernel::{
    bartlett_weight, lag_cov_kernel, longrun_kernel, longrun_minus_lag0, select_bandwidth,
    KernelMatrix, LongRunVariant,
};
pub use lambda::{build_lambda, LambdaOperator};
pub use spectrum::{cov0_spectrum, kernel_spectrum, select_p, SpectralDecomposition, POSITIVE_EIGEN_TOL};

pub(crate) use spectrum::orient;
