//! Numerical laboratory for robust adaptive backstepping impedance control
//! of planar manipulators, optionally mounted on a differential-drive base.
//!
//! The crate wires together rigid-body dynamics, a reference impedance
//! model, an online Taylor-series uncertainty estimator with adaptive
//! robust bounds, and the backstepping torque law, plus a fixed-step
//! closed-loop simulation engine, penalty contact, logging, and metrics
//! for PD-vs-impedance collision comparisons.

pub mod error;
pub mod numerics;
pub mod dynamics;
pub mod oracle;
pub mod contact;
pub mod reference_model;
pub mod estimator;
pub mod controller;
pub mod simulation;
pub mod metrics;
pub mod config;
pub mod synthetic;
pub mod check;

pub use error::{Error, Result};
