//! Finite-element laboratory for the curved (Bresse) beam with a
//! finite-memory viscoelastic term on the shear-angle equation.
//!
//! Pipeline: [`model`] parameters and kernels, [`transform`] to zero-mean
//! data, [`fem1d`] P1 operators, [`memory`] convolution history,
//! [`stepper`] implicit Euler, [`energy`] discrete energy and Lyapunov
//! diagnostics, [`decay`] rate fits and theoretical envelopes, [`cli`]
//! configuration, presets and file output.

pub mod cli;
pub mod decay;
pub mod energy;
pub mod error;
pub mod fem1d;
pub mod memory;
pub mod model;
pub mod profile;
pub mod stepper;
pub mod transform;

pub use error::{Error, Result};
