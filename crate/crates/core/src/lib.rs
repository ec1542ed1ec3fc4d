//! Magnetic-flux-driven corner-mode physics of the 2D SSH lattice.
//!
//! - [`lattice`]: geometry, Landau-gauge hopping pattern, Hamiltonian assembly.
//! - [`spectrum`]: diagonalization, mode classification, zero-energy gap.
//! - [`phase_scan`]: butterflies, (γ, φ) phase maps, critical γ, anisotropy maps.
//! - [`steady_state`]: driven-dissipative steady states and concentration factor.
//! - [`device_map`]: circuit-QED frequency ladder and modulation tone plan.
//! - [`config`], [`output`], [`svg`]: configuration, serialization, figures.

pub mod config;
pub mod device_map;
pub mod error;
pub mod lattice;
pub mod output;
pub mod phase_scan;
pub mod spectrum;
pub mod steady_state;
pub mod svg;

pub use error::{Error, Result};
