//! Population density estimation from mobile-network presence metadata.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod csvio;
pub mod dynamic;
pub mod error;
pub mod filters;
pub mod grid;
pub mod landuse;
pub mod metadata;
pub mod regress;
pub mod stats;
pub mod synth;

pub use csvio::CsvOut;
pub use error::{Error, ErrorClass, Result};
