//! Model generators, the ISE metric, functional linear processes and a
//! deterministic parallel Monte Carlo harness.

mod generators;
mod ise;
mod linear;
mod monte_carlo;

pub use generators::{derive_seed, gen_ar1, gen_bm_noise, gen_i1, simulate_model, FactorLaw, ModelSpec, SimulatedData};
pub use ise::{ise, match_loadings};
pub use linear::{linear_process_lag0, linear_process_longrun, simulate_linear_process, LinearOperator, LinearProcessSpec};
pub use monte_carlo::{median, run_monte_carlo, CountRecord, IseRecord, RepRecord, SimConfig, SimResult};
