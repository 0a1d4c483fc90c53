//! Surface dielectric loss budgeting for flux-tunable transmons.
//!
//! The crate computes interface participation ratios of the pads, leads and
//! SQUID of a qubit, simulates relaxation spectra of a qubit coupled to a
//! bath of two-level defects, processes measured T1 spectra and extracts
//! per-element loss tangents by least squares.

pub mod constants;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod participation;
pub mod sle;
pub mod spectra;
pub mod svg;
pub mod tlsbath;

pub use error::{Error, Result};
