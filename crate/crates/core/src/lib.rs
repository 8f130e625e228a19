//! Core models for an RIS-assisted cell-free massive MIMO link.
//!
//! The crate covers the chain from spatially correlated channel statistics to
//! ergodic spectral efficiency: sinc-profile correlation over a rectangular
//! surface ([`correlation`]), aggregated direct-plus-reflected channels and
//! their moments ([`channel`]), MMSE estimation from pilots ([`estimation`]),
//! phase-shift selection ([`phase`]), closed-form uplink/downlink SINR and net
//! throughput ([`throughput`]), and Monte Carlo cross-checks of all of it
//! ([`montecarlo`]). [`scenario`] ties the pieces together for the stochastic
//! network geometry the experiments use.
//!
//! The crate is `no_std` (with `alloc`) unless the default `std` feature is
//! enabled; nothing here does IO.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod channel;
pub mod correlation;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod phase;
pub mod rng;
pub mod scenario;
pub mod throughput;

pub use error::{Error, Result};

/// Link direction of a data phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Users transmit, APs receive.
    Uplink,
    /// APs transmit, users receive.
    Downlink,
}

/// Float functions used by the math kernels, available both with `std` and
/// through `libm` without it. `abs` and `floor` come from `core` directly.
#[cfg(feature = "std")]
mod fm {
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    pub fn log2(x: f64) -> f64 {
        x.log2()
    }
    pub fn log10(x: f64) -> f64 {
        x.log10()
    }
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
}

#[cfg(not(feature = "std"))]
mod fm {
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    pub fn log2(x: f64) -> f64 {
        libm::log2(x)
    }
    pub fn log10(x: f64) -> f64 {
        libm::log10(x)
    }
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
}
