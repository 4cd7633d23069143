//! Series representations for the density of the supremum of a strictly stable
//! Lévy process, plus the Diophantine tooling that decides when they converge.
//!
//! The crate is `no_std` with `alloc`. File formats, the command line and the
//! parallel Monte Carlo driver live in the `supdens` crate.

#![no_std]
// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision, clippy::approx_constant))]
extern crate alloc;

pub mod coefficients;
pub mod density;
pub mod diophantine;
pub mod error;
pub mod oracle;
pub mod sigloc;
pub mod trigprod;

pub use error::{Error, Result};
