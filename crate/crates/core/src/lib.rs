//! Annealed transfer operators, stationary densities and linear response
//! for iid random compositions of one-dimensional maps.
//!
//! The crate is `no_std` (with `alloc`). Functions are represented by
//! nodal values in Chebyshev, Fourier, Ulam or graded-panel bases; the
//! annealed operator becomes a matrix acting on these values.

#![no_std]
// `!(a < b)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

extern crate alloc;

pub mod distributions;
pub mod error;
pub mod function_space;
pub mod inducing;
pub mod maps;
pub mod math;
pub mod montecarlo;
pub mod operator;
pub mod poly;
pub mod quadrature;
pub mod response;
pub mod spectral;
pub mod system;

pub use error::{Error, ErrorClass, Result};
