//! Numerical laboratory for recovering a potential `V` in `Δu + Vu = 0` from
//! the internal data `I = V u²`: synthetic data generation, reconstruction,
//! Hölder-stability experiments and unique-continuation diagnostics on
//! two-dimensional grids.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod field;
pub mod fit;
pub mod forward;
pub mod geometry;
pub mod reconstruction;
pub mod stability;
pub mod ucp;

pub use error::{LabError, Result};
pub use field::ScalarField;
