//! Simulation and reconstruction of probe scattering off a single bound particle.
//!
//! Internal quantities are in atomic units (ħ = m_e = e = 1).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod error;
pub mod formfactor;
pub mod model;
pub mod numeric;
pub mod pointer;
pub mod reconstruction;
pub mod rng;
pub mod scattering;
pub mod state;
pub mod units;

pub use error::{Error, Result};
