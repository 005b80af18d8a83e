//! Simulation core for type-II SPDC polarization interferometry with a
//! deformable mirror in one arm of a 4-f system.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; IO, configuration and parallel scheduling live in the `aberdip`
//! companion crate.
//!
//! Unit system, fixed across the crate:
//! lengths in mm, transverse wavevectors in rad/mm, delays in ps and
//! frequency detunings in rad/ps.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod biphoton;
pub mod interference;
pub mod optics;
pub mod quadrature;
pub mod spectral;
pub mod zernike;

pub use biphoton::{CrystalParams, TransverseWavevector};
pub use error::{Error, Result};
pub use interference::{DipCurve, DipMetrics, Model};
pub use optics::SetupGeometry;
pub use quadrature::{GridSpec, Scheme};
pub use zernike::{AberrationPhase, ZernikeMode};

pub use num_complex::Complex64;

/// Speed of light in vacuum, mm/ps.
pub const SPEED_OF_LIGHT: f64 = 0.299_792_458;
