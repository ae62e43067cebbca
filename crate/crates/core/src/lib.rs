// `!(x > 0.0)` rejects NaN together with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod ewald;
pub mod fft;
pub mod lattice;
pub mod operator;
pub mod output;
pub mod potential;
pub mod realspace;
pub mod scf;
pub mod spectrum;
pub mod supercell;

pub use error::{Error, Result};
