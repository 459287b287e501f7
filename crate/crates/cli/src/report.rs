//! The `report.json` document written by `fdf fit`.

use fdf_core::factor::StageSummary;
use fdf_core::{Block, Estimator, FdfFit, FitMode, FitOptions, PretestOptions, TestRecord};
use serde::{Deserialize, Serialize};

use crate::input::PointScaleRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEigenvalues {
    pub nonstationary: Option<Vec<f64>>,
    pub stationary: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingsJson {
    /// Grid on `[0, 1]`.
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestsJson {
    pub stationarity: Option<TestRecord>,
    pub independence: Option<TestRecord>,
}

/// Settings that produced the fit, echoed for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfigEcho {
    pub input: String,
    pub requested_mode: String,
    pub nbasis: usize,
    pub nbasis_used: Option<usize>,
    pub grid: usize,
    pub seed: u64,
    pub options: FitOptions,
    pub pretest: Option<PretestOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub version: String,
    pub config: FitConfigEcho,
    pub point_scale: PointScaleRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub estimator: Estimator,
    #[serde(rename = "K_hat")]
    pub k_hat: usize,
    pub r_hat: usize,
    pub bandwidth: f64,
    pub p: usize,
    pub k0: usize,
    pub eigenvalues: BlockEigenvalues,
    pub loadings: LoadingsJson,
    /// Row labels of the input, one per factor row.
    pub labels: Vec<String>,
    /// `N` rows of `K̂` scores.
    pub factors: Vec<Vec<f64>>,
    pub tests: TestsJson,
    pub mean_curve: Vec<f64>,
    pub low_signal: bool,
    pub warnings: Vec<String>,
    pub stages: Vec<StageSummary>,
    pub provenance: Provenance,
}

impl FitReport {
    pub fn new(fit: &FdfFit, labels: Vec<String>, provenance: Provenance) -> Self {
        let factors = (0..fit.factors.nrows())
            .map(|i| fit.factors.row(i).iter().copied().collect())
            .collect();
        Self {
            mode: fit.mode,
            estimator: fit.estimator,
            k_hat: fit.k_hat,
            r_hat: fit.r_hat,
            bandwidth: fit.bandwidth,
            p: fit.p,
            k0: fit.k0,
            eigenvalues: BlockEigenvalues {
                nonstationary: fit.eigenvalues(Block::Nonstationary).map(<[f64]>::to_vec),
                stationary: fit.eigenvalues(Block::Stationary).map(<[f64]>::to_vec),
            },
            loadings: LoadingsJson {
                grid: fit.loadings.grid().points().to_vec(),
                curves: fit.loadings.curves().to_vec(),
                blocks: fit.loadings.blocks().to_vec(),
            },
            labels,
            factors,
            tests: TestsJson {
                stationarity: fit.diagnostics.stationarity.clone(),
                independence: fit.diagnostics.independence.clone(),
            },
            mean_curve: fit.mean_curve.clone(),
            low_signal: fit.diagnostics.low_signal,
            warnings: fit.diagnostics.warnings.clone(),
            stages: fit.stages.clone(),
            provenance,
        }
    }

    /// `μ̂ + Σ_k f̂_{n,k} λ̂_k` for the 0-based row `n`.
    pub fn reconstruct(&self, n: usize) -> Option<Vec<f64>> {
        let row = self.factors.get(n)?;
        let mut out = self.mean_curve.clone();
        for (f, curve) in row.iter().zip(&self.loadings.curves) {
            out.iter_mut().zip(curve).for_each(|(o, l)| *o += f * l);
        }
        Some(out)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
