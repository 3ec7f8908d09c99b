//! Numerical evaluation of the normalized fractional infinity-Laplacian and
//! of the nonlocal averages whose deviation from `φ(x)` it describes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod corelap;
pub mod error;
pub mod fracmeasure;
pub mod gauss;
pub mod harness;
pub mod prism;
pub mod special;
pub mod sphereopt;
pub mod testfuncs;
mod vecops;

pub use error::{Error, Result};
