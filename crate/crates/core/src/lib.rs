//! Quantum-nondemolition spin squeezing of a two-mode condensate by
//! continuous homodyne detection of a dispersive probe.

pub mod analytic;
pub mod cavity;
pub mod config;
pub mod error;
pub mod estimators;
pub mod optimize;
pub mod output;
pub mod phys;
pub mod report;
pub mod reproduce;
pub mod rng;
pub mod sweep;
pub mod tw;

pub use error::{Error, Result};
