//! Spectral simulation laboratory for the defocusing quintic Schrödinger
//! equation with a harmonic trap in one of two spatial directions, and for
//! its dispersive continuous resonant (DCR) limit system.
//!
//! The state is a mixed representation: a periodic Fourier grid along the
//! untrapped direction crossed with a truncated Hermite eigenbasis of the
//! trapped direction. Linear flows are exact (Fourier multipliers and mode
//! phases), the resonant quintic nonlinearity is evaluated by an exact
//! discrete phase average, and conservation/scattering diagnostics ride on
//! every run.

pub mod cli;
pub mod error;
pub mod evolve;
pub mod experiment;
mod fft;
pub mod field;
pub mod hermite;
pub mod propagate;
pub mod resonant;
pub mod symmetry;

pub use error::{Result, SimError};
