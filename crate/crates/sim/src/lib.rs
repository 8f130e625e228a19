//! Simulation harness around `riscf-core`: configuration files, named
//! experiments, deterministic parallel Monte Carlo, and report formats.
//!
//! The core crate owns the math; this crate owns everything that touches an
//! operating system. Reports carry a schema tag and a digest of the exact
//! configuration that produced them, and rerunning any experiment with the
//! same seed and configuration reproduces them byte for byte, whatever the
//! thread count.

pub mod config;
pub mod experiments;
pub mod parallel;
pub mod report;
