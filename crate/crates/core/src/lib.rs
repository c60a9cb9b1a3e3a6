//! Local parametric estimation (LPE) of integrated time-varying parameters.
//!
//! Observations are chopped into blocks of `h` consecutive returns, a
//! parametric estimator is run on every block, and the block estimates are
//! recombined as a block-length weighted average. The crate ships the generic
//! machinery ([`block`], [`chisq`]) together with the worked models: a
//! time-varying MA(1) ([`ma1`]), the uncertainty-zones friction model ([`uz`])
//! and the linear toy estimators ([`simple`]). Data-generating processes live
//! in [`sim`], parameter paths in [`path`].
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod block;
pub mod chisq;
pub mod error;
pub mod ma1;
pub mod matrix;
pub mod optim;
pub mod path;
pub mod rng;
pub mod sim;
pub mod simple;
pub mod uz;

pub use block::{
    av_aggregate, default_block_size, lpe_aggregate, lpe_variance, partition_blocks,
    BlockPartition, LocalEstimate, LpeResult, ObservationSeries,
};
pub use chisq::{chisq_survival, constancy_chisq, ChiSquareTest};
pub use error::{Error, Result};
pub use matrix::Matrix;
