//! Spectral diagnostics of weight matrices: singular value extremes,
//! condition number, stable rank, and a full-rank flag.

use crate::error::Result;
use crate::linalg::{self, DenseMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// sigma_max / sigma_min; infinity when sigma_min is exactly zero.
    pub condition_number: f64,
    /// ||W||_F^2 / ||W||_2^2, a smooth proxy for rank.
    pub stable_rank: f64,
    /// sigma_min > rank_tol * sigma_max
    pub full_rank: bool,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Spectral summary of W. `sigma_min` is the singular value at index
/// min(rows, cols), matching kappa = sigma_1 / sigma_k for k x n weight
/// matrices.
pub fn spectral_report(w: &DenseMatrix, rank_tol: f64) -> Result<SpectralReport> {
    let svd = linalg::svd(w)?;
    let sigma = svd.sigma;
    let sigma_max = sigma[0];
    let sigma_min = *sigma.last().unwrap();
    let condition_number = if sigma_min == 0.0 {
        f64::INFINITY
    } else {
        sigma_max / sigma_min
    };
    let fro2 = w.frobenius_norm().powi(2);
    let stable_rank = if sigma_max > 0.0 {
        fro2 / (sigma_max * sigma_max)
    } else {
        0.0
    };
    Ok(SpectralReport {
        sigma_min,
        sigma_max,
        condition_number,
        stable_rank,
        full_rank: sigma_min > rank_tol * sigma_max && sigma_max > 0.0,
        singular_values: sigma,
    })
}

/// One spectral report per (seed, matrix) pair, CSV-ready.
#[derive(Debug, Clone)]
pub struct SpectraRow {
    pub seed: u64,
    pub report: SpectralReport,
}

pub fn spectra_batch(matrices: &[(u64, DenseMatrix)], rank_tol: f64) -> Result<Vec<SpectraRow>> {
    matrices
        .iter()
        .map(|(seed, m)| {
            Ok(SpectraRow {
                seed: *seed,
                report: spectral_report(m, rank_tol)?,
            })
        })
        .collect()
}
