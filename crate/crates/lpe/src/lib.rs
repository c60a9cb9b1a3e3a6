//! Standard-library companion to [`lpe_core`]: CSV formats, the simulated
//! MA(1) bias tables, the Monte Carlo harness and the `lpe` command-line tool.
pub mod bias_table;
pub mod error;
pub mod io;
pub mod mc;

pub use error::{Error, Result};
pub use lpe_core;
