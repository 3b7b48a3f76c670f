//! Regression trees, random forests and the segmentation analysis that
//! relates bank charter value (Tobin's Q) to CAMELS risk factors.
//!
//! The pipeline runs bank-year panel ingestion ([`dataset`]), one-to-five
//! risk rescaling ([`rescale`]), forest-based proxy selection ([`forest`],
//! [`select`]), CART growth and cross-validated pruning ([`tree`]) and the
//! extreme-leaf / alignment / test tables ([`analysis`]).

// `!(x > 0.0)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod rescale;
pub mod seed;
pub mod select;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
