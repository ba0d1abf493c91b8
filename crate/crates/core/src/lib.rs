//! Rotation numbers for circle homeomorphisms, finite-fibre skew products
//! and fibred holomorphic maps over irrational rotations.
//!
//! * [`circle`]: lifts, iteration and bracketed rotation numbers.
//! * [`skewfibre`]: finite-fibre systems over `Z_n` and `rho_ff`.
//! * [`holo`]: fibred polynomial maps and the fibred rotation number `rho_T`.
//! * [`approx`]: convergent approximants and their Riemann-sum rotation numbers.
//! * [`orbit`]: argument advance along single orbits.
//! * [`cli`]: the `fibrot` experiment runner.

pub mod approx;
pub mod circle;
pub mod cli;
pub mod error;
pub mod holo;
pub mod numeric;
pub mod orbit;
pub mod skewfibre;

pub use circle::{CircleMapLift, RotationEstimate};
pub use error::{Error, Result};
pub use holo::{Coefficient, FibredPolyMap, TrigPoly};
pub use skewfibre::FiniteFibreSystem;
