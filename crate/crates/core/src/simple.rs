//! Two block estimators that are linear in the data: scaled realized variance
//! and the Poisson count mean. For both, the LPE coincides with the global
//! estimator on regularly sampled data.
#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;

use crate::block::{lpe, LocalEstimate, LpeResult, ObservationSeries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `n Σ r² / (k T)` over `k` returns out of `n` on `[0, T]`.
pub fn scaled_rv(returns: &[f64], k: usize, n: usize, horizon: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::Empty("returns"));
    }
    if returns.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            found: returns.len(),
        });
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let ss: f64 = returns.iter().map(|r| r * r).sum();
    Ok(n as f64 * ss / (k as f64 * horizon))
}

pub fn poisson_mean(counts: &[f64]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::Empty("counts"));
    }
    if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0 && c.fract() == 0.0)) {
        return Err(Error::InvalidParameter {
            name: "count",
            value: *c,
        });
    }
    Ok(counts.iter().sum::<f64>() / counts.len() as f64)
}

/// LPE of the volatility with [`scaled_rv`] on each block of a regularly
/// sampled return series. Block variances are the Gaussian `2θ²`.
pub fn rv_lpe(series: &ObservationSeries, h: usize) -> Result<LpeResult> {
    let n = series.len();
    let horizon = series.horizon();
    lpe(series, h, |block, _| {
        let theta = scaled_rv(block, block.len(), n, horizon)?;
        Ok(LocalEstimate::new(0, alloc::vec![theta]).with_variance(Matrix::from_diagonal(&[2.0 * theta * theta])))
    })
}

/// LPE of the Poisson mean with [`poisson_mean`] on each block; block
/// variances are `θ`.
pub fn poisson_lpe(series: &ObservationSeries, h: usize) -> Result<LpeResult> {
    lpe(series, h, |block, _| {
        let theta = poisson_mean(block)?;
        Ok(LocalEstimate::new(0, alloc::vec![theta]).with_variance(Matrix::from_diagonal(&[theta])))
    })
}
