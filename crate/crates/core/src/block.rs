//! Block partitioning and block-length weighted aggregation.
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Observed returns together with their time increments.
///
/// Values are stored row-major, `dim` reals per observation (the observable
/// part of the return, without the time increment).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    dim: usize,
    values: Vec<f64>,
    dts: Vec<f64>,
    horizon: f64,
}

impl ObservationSeries {
    pub fn new(dim: usize, values: Vec<f64>, dts: Vec<f64>, horizon: f64) -> Result<Self> {
        if dts.is_empty() {
            return Err(Error::Empty("observation series"));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                value: 0.0,
            });
        }
        if values.len() != dts.len() * dim {
            return Err(Error::LengthMismatch {
                expected: dts.len() * dim,
                found: values.len(),
            });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: horizon,
            });
        }
        if let Some(dt) = dts.iter().find(|dt| !(dt.is_finite() && **dt > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "time increment",
                value: *dt,
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "observation",
                value: *v,
            });
        }
        let total: f64 = dts.iter().sum();
        if total > horizon * (1.0 + 1e-9) {
            return Err(Error::Invalid(alloc::format!(
                "time increments sum to {total}, beyond horizon {horizon}"
            )));
        }
        Ok(Self {
            dim,
            values,
            dts,
            horizon,
        })
    }

    /// One-dimensional series.
    pub fn scalar(values: Vec<f64>, dts: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::new(1, values, dts, horizon)
    }

    /// One-dimensional series observed at `i T / n`.
    pub fn regular(values: Vec<f64>, horizon: f64) -> Result<Self> {
        let n = values.len();
        let dts = alloc::vec![horizon / n as f64; n];
        Self::new(1, values, dts, horizon)
    }

    pub fn len(&self) -> usize {
        self.dts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dts(&self) -> &[f64] {
        &self.dts
    }

    /// All values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows `range` as one contiguous row-major slice.
    pub fn rows(&self, range: Range<usize>) -> &[f64] {
        &self.values[range.start * self.dim..range.end * self.dim]
    }

    /// Component `k` of every observation.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }
}

/// Contiguous blocks of `h` observations; the last block holds the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    h: usize,
    ranges: Vec<Range<usize>>,
    block_lengths: Vec<f64>,
}

impl BlockPartition {
    /// Partitions observations with time increments `dts` into blocks of `h`.
    pub fn from_dts(dts: &[f64], h: usize) -> Result<Self> {
        if dts.is_empty() {
            return Err(Error::Empty("observation series"));
        }
        if h == 0 {
            return Err(Error::InvalidParameter {
                name: "block size",
                value: 0.0,
            });
        }
        let n = dts.len();
        let ranges: Vec<Range<usize>> = (0..n.div_ceil(h))
            .map(|i| i * h..((i + 1) * h).min(n))
            .collect();
        let block_lengths = ranges.iter().map(|r| dts[r.clone()].iter().sum()).collect();
        Ok(Self {
            h,
            ranges,
            block_lengths,
        })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n_blocks(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn block_lengths(&self) -> &[f64] {
        &self.block_lengths
    }

    pub fn total_length(&self) -> f64 {
        self.block_lengths.iter().sum()
    }
}

/// Parametric estimate on one block.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEstimate {
    pub theta: Vec<f64>,
    /// Per-observation asymptotic variance of `theta` on this block, i.e. the
    /// finite-sample covariance times the block's observation count.
    pub variance: Option<Matrix>,
    pub block_index: usize,
}

impl LocalEstimate {
    pub fn new(block_index: usize, theta: Vec<f64>) -> Self {
        Self {
            theta,
            variance: None,
            block_index,
        }
    }

    pub fn with_variance(mut self, variance: Matrix) -> Self {
        self.variance = Some(variance);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpeResult {
    pub theta_hat: Vec<f64>,
    pub av_hat: Option<Matrix>,
    pub partition: BlockPartition,
    pub locals: Vec<LocalEstimate>,
}

impl LpeResult {
    /// Standard errors of `theta_hat` from the block variances, if present.
    pub fn standard_errors(&self, horizon: f64) -> Option<Vec<f64>> {
        let var = lpe_variance(&self.locals, &self.partition, horizon).ok()?;
        Some(var.diagonal().into_iter().map(|v| v.max(0.0).sqrt()).collect())
    }
}

/// Block-size rule `floor(n^0.4999)`, never below 2.
pub fn default_block_size(n: usize) -> usize {
    let h = (n as f64).powf(0.4999).floor() as usize;
    h.max(2)
}

pub fn partition_blocks(series: &ObservationSeries, h: usize) -> Result<BlockPartition> {
    BlockPartition::from_dts(series.dts(), h)
}

fn check_locals(locals: &[LocalEstimate], partition: &BlockPartition, horizon: f64) -> Result<usize> {
    if locals.len() != partition.n_blocks() {
        return Err(Error::LengthMismatch {
            expected: partition.n_blocks(),
            found: locals.len(),
        });
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let p = locals[0].theta.len();
    if let Some(bad) = locals.iter().find(|l| l.theta.len() != p) {
        return Err(Error::LengthMismatch {
            expected: p,
            found: bad.theta.len(),
        });
    }
    Ok(p)
}

/// `(1/T) Σ_i θ̂_i ΔT_i`.
pub fn lpe_aggregate(locals: &[LocalEstimate], partition: &BlockPartition, horizon: f64) -> Result<Vec<f64>> {
    let p = check_locals(locals, partition, horizon)?;
    let mut acc = alloc::vec![0.0; p];
    for (local, dt) in locals.iter().zip(partition.block_lengths()) {
        for (a, t) in acc.iter_mut().zip(&local.theta) {
            *a += t * dt;
        }
    }
    acc.iter_mut().for_each(|a| *a /= horizon);
    Ok(acc)
}

/// `T⁻² Σ_i V̂_i ΔT_i`, the aggregated asymptotic variance.
pub fn av_aggregate(locals: &[LocalEstimate], partition: &BlockPartition, horizon: f64) -> Result<Matrix> {
    let p = check_locals(locals, partition, horizon)?;
    let mut acc = Matrix::zeros(p);
    for (local, dt) in locals.iter().zip(partition.block_lengths()) {
        let v = local.variance.as_ref().ok_or(Error::MissingVariance {
            block: local.block_index,
        })?;
        if v.dim() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                found: v.dim(),
            });
        }
        acc.add_scaled(v, *dt / (horizon * horizon));
    }
    Ok(acc)
}

/// Covariance of the LPE itself, `T⁻² Σ_i (V̂_i / n_i) ΔT_i²`, treating blocks
/// as independent.
pub fn lpe_variance(locals: &[LocalEstimate], partition: &BlockPartition, horizon: f64) -> Result<Matrix> {
    let p = check_locals(locals, partition, horizon)?;
    let mut acc = Matrix::zeros(p);
    for ((local, dt), range) in locals
        .iter()
        .zip(partition.block_lengths())
        .zip(partition.ranges())
    {
        let v = local.variance.as_ref().ok_or(Error::MissingVariance {
            block: local.block_index,
        })?;
        let count = range.len() as f64;
        acc.add_scaled(v, dt * dt / (count * horizon * horizon));
    }
    Ok(acc)
}

/// Runs `estimator` on every block of `series` and aggregates.
///
/// The estimator receives the block's rows (row-major) and its time span.
/// When every block reports a variance the result carries `av_hat`.
pub fn lpe<F>(series: &ObservationSeries, h: usize, mut estimator: F) -> Result<LpeResult>
where
    F: FnMut(&[f64], f64) -> Result<LocalEstimate>,
{
    let partition = partition_blocks(series, h)?;
    let locals = partition
        .ranges()
        .iter()
        .zip(partition.block_lengths())
        .enumerate()
        .map(|(i, (range, dt))| {
            let mut est = estimator(series.rows(range.clone()), *dt)?;
            est.block_index = i;
            Ok(est)
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_hat = lpe_aggregate(&locals, &partition, series.horizon())?;
    let av_hat = if locals.iter().all(|l| l.variance.is_some()) {
        Some(av_aggregate(&locals, &partition, series.horizon())?)
    } else {
        None
    };
    Ok(LpeResult {
        theta_hat,
        av_hat,
        partition,
        locals,
    })
}
