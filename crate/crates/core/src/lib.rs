//! Anisotropic p-capacity of condensers.
//!
//! The crate computes capacitary potentials for the energy
//! `u -> integral of F(grad u)^p` on Wulff annuli, where `F` is an arbitrary
//! even norm (crystalline norms included), and certifies the computed
//! minimizers through their Euler-Lagrange characterization, radial
//! barriers, comparison principles and Lipschitz bounds.

pub mod anisotropy;
pub mod capacity;
mod error;
pub mod grid;
pub mod solver;
pub mod verify;
mod numeric;
pub mod wulff;

pub use anisotropy::{sampled_dual, Anisotropy, NormKind, ProxConfig};
pub use error::{Error, Result};
pub use numeric::adaptive_simpson;
