//! Riemann–Liouville time-fractional diffusion: simulation, regional
//! enlarged observability and initial-state reconstruction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod example;
pub mod hum;
pub mod mlf;
pub mod quadrature;
pub mod regional;
pub mod rlcalc;
pub mod selftest;
pub mod sensing;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
