//! Numerical toolkit for the n-dimensional MICZ-Kepler system.
//!
//! Trajectories are produced two independent ways: lifting to the cone over
//! `SO(n)`, where the motion is a radial Kepler orbit times a one-parameter
//! subgroup, and integrating the reduced equations on `ℝⁿ∖{0}` with the Dirac
//! monopole force and the parallel-transported colour variable. The
//! [`verify`] module cross-checks the two.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod liealg;
pub mod monopole;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
