//! Microstrip bandpass filter synthesis and analysis.
//!
//! The pipeline runs from a band specification to a Chebyshev lowpass
//! prototype ([`prototype`]), J-inverter and even/odd-mode section values
//! ([`coupling`]), physical coupled-line dimensions ([`microstrip`]),
//! circuit-level S-parameter sweeps ([`rfsim`]) and finally geometry for
//! the edge-coupled and folded multilayer hairpin realizations ([`layout`]).
//!
//! Frequencies are passed in GHz and lengths in millimetres at every public
//! boundary. Internally the prototype stores frequencies in Hz.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod layout;
pub mod microstrip;
pub mod prototype;
pub mod rfsim;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wave impedance, Ω.
pub const ETA0: f64 = 376.730_313_668;

/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;

pub(crate) const GHZ: f64 = 1.0e9;
