//! Two-scale homogenization toolkit for temperature-dependent thermo-electro-mechanical
//! composites: unit-cell correctors, effective coefficients, a homogenized time stepper,
//! high-order multiscale reconstruction and a fine-scale reference solver.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// Test builds link std, whose inherent float methods shadow the libm-backed trait.
#![cfg_attr(test, allow(unused_imports))]
// Index loops mirror the tensor notation; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod float;

pub mod cell;
pub mod dns;
pub mod error;
pub mod expr;
pub mod fem;
pub mod homog;
pub mod macroscale;
pub mod materials;
pub mod mesh;
pub mod metrics;
pub mod reconstruct;
pub mod tensor;

pub use error::{Error, Result};
