//! Loading extraction, factor-count rules, the stationary and nonstationary
//! fitting pipelines, the functional PCA baseline, and the pre-tests that
//! drive model selection.

mod count;
mod diagnostics;
mod fit;
mod loadings;

pub use count::{estimate_k_ratio, estimate_k_scree, KRule};
pub use diagnostics::{independence_test, scalar_stationarity_test, stationarity_test, TestRecord};
pub use fit::{
    fit_auto, fit_nonstationary, fit_pca_baseline, fit_stationary, null_alpha_scale, reconstruct,
    Diagnostics, Estimator, FdfFit, FitMode, FitOptions, PretestOptions, StageSummary,
    LOW_SIGNAL_MULTIPLE,
};
pub use loadings::{
    extract_loadings, factor_scores, refine_by_regression, residual_series, Block, LoadingSet,
};
