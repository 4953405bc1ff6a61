//! Spin-mechanical conversion in a levitated microdiamond.
//!
//! The pipeline runs from an NV spin ensemble ([`spin_core`], [`pulse_engine`])
//! through the torque it exerts on the crystal and the resulting libration
//! ([`libration`]), to the optical readout ([`readout`]), spectrum fitting
//! ([`mdmr`]) and sensitivity estimates ([`noise_budget`], [`dicke`]).

pub mod constants;
pub mod dicke;
pub mod error;
pub mod libration;
pub mod mdmr;
pub mod noise_budget;
pub mod optimize;
pub mod pulse_engine;
pub mod readout;
pub mod spin_core;
pub mod vector3;

pub use error::{Error, Result};
