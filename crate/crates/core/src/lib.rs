//! Bit-exact models of Mitchell logarithmic multipliers and dividers, their
//! piecewise error-reduction schemes, pipelined datapaths, error
//! characterization and a fixed-point image codec benchmark.

pub mod appbench;
pub mod charlab;
pub mod error;
pub mod logmap;
pub mod mitchell;
pub mod pipeline;
pub mod rapidscheme;
pub mod wordcore;

pub use error::{Error, Result};
