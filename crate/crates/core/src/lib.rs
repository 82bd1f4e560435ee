#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cutoff;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod holomorphic;
pub mod mesh;
pub mod packing;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
