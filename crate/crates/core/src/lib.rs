//! Stock trend prediction from time-segmented OHLCT chart images.
//!
//! The pipeline runs, in order:
//!
//! - [`market`]: daily bars, labelled windows with limit-up exclusion,
//!   chronological splits and a synthetic bar generator.
//! - [`chart`]: rendering of a window into a binary TS-OHLCT pixel matrix,
//!   with 3-column separators on calendar gaps.
//! - [`multiscale`]: decomposition of an `n`-day window into sub-maps at
//!   resolutions of 1, 5, 25, ... days, plus the per-block feature weights.
//! - [`seqfeat`]: the normalized 30x12 sequence matrix.
//! - [`nn`]: a small deterministic CNN engine with hand-written backward passes.
//! - [`model`]: the MSR and SMSFR networks, training with early stopping,
//!   inference and checkpoints.
//! - [`backtest`]: slot-based portfolio simulation and classification/index metrics.
//! - [`cli`]: the `msr` command-line front end.

pub mod backtest;
pub mod chart;
pub mod cli;
pub mod error;
pub mod market;
pub mod model;
pub mod multiscale;
pub mod nn;
pub mod seqfeat;

pub use error::{Error, Result};
