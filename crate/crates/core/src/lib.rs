//! Simulation of induced-photorefractive attacks on lithium-niobate
//! Mach-Zehnder attenuators used in QKD transmitters.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod ln_device;
pub mod loss_budget;
pub mod output;
pub mod pe_core;
pub mod qkd;
pub mod svg;

pub use error::{Error, Result};
pub use exec::Execution;
