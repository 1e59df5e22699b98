//! Numerical laboratory for coloured hard dimers on two-coloured 1d words,
//! their 3x3 transfer matrices and the statistics of random products of them.

// Guards of the form `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod coupling;
pub mod dimer;
pub mod error;
pub mod hypergeo;
pub mod linalg;
pub mod lyapunov;
pub mod mean;
pub mod selftest;
pub mod stats;
pub mod transfer;

pub use coupling::{CouplingPoint, CRITICAL_POINT};
pub use error::{Error, Result};
