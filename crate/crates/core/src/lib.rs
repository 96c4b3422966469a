//! Analytics and trial engine for fog massive MIMO with coded uplink pilots,
//! plus an idealized cellular massive MIMO baseline.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration,
//! parallel orchestration and the command line live in the `fogmimo` crate.
//!
//! Conventions used throughout:
//! - lengths are in km, densities in points per km²;
//! - large-scale gains follow `β = r^{-η}` with `r` in km;
//! - spectral efficiencies are in b/s/Hz (log base 2).

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cell;
pub mod codec;
mod error;
pub mod fog;
pub mod geometry;
pub mod linalg;
pub mod phy;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod special;

pub use error::{Error, Result};

/// Ceiling reported in place of an infinite spectral efficiency (no
/// co-pilot interferer at all).
pub const DEFAULT_SE_CAP: f64 = 40.0;
