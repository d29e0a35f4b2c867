//! Trim and control-allocation solver for a coaxial compound helicopter.

pub mod airframe;
pub mod cli;
pub mod config;
pub mod controls;
pub mod error;
pub mod hinge;
pub mod output;
pub mod rotor;
pub mod schedule;
pub mod strategy;
pub mod trim;

pub use config::{validate_config, HelicopterConfig};
pub use controls::{ControlId, ControlVector, FlightCondition};
pub use error::{Result, TrimError};
