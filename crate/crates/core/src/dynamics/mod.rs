//! Population transfer under the swept drive.
//!
//! Two engines share the [`Propagator`] interface: [`LzEngine`] applies a
//! Landau-Zener probability at every scheduled crossing, [`OdeEngine`]
//! integrates the full eight-level rotating-frame Schrödinger equation and
//! serves as its oracle. Probe back-action is a separate per-pulse map
//! ([`PumpModel`]).

pub mod calibration;
pub mod crossing;
pub mod hamiltonian;
pub mod lz;
pub mod magnus;
pub mod ode;
pub mod pump;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hamiltonian::{build_rotating_hamiltonian, Hamiltonian};
pub use lz::{adiabaticity, lz_probability, rabi_for_adiabaticity, LzEngine};
pub use ode::{OdeEngine, OdeMethod, DEFAULT_REL_TOL};
pub use pump::{PumpModel, PumpPattern};
pub use state::{
    AmplitudeVector, Amplitudes, Branch, CoherentState, EngineState, PopulationVector,
    Representation,
};

use crate::zeeman::HyperfineState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("sweep rate must be non-zero")]
    ZeroSweepRate,
    #[error("Rabi frequency must be non-negative, got {0}")]
    NegativeRabi(f64),
    #[error("cannot evolve backwards from t = {from} ms to t = {to} ms")]
    TimeReversal { from: f64, to: f64 },
    #[error("wrong state representation: {0}")]
    RepresentationMismatch(&'static str),
    #[error("relative tolerance {0} outside [1e-12, 1e-6]")]
    InvalidTolerance(f64),
    #[error("integration failed at t = {t_ms} ms: step size {h_ms} ms underflowed")]
    StepUnderflow { t_ms: f64, h_ms: f64 },
    #[error("invalid pump model: {0}")]
    InvalidPump(&'static str),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

/// Which propagator drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Lz,
    Ode,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lz" => Ok(EngineKind::Lz),
            "ode" => Ok(EngineKind::Ode),
            other => Err(format!("unknown engine '{other}', expected lz or ode")),
        }
    }
}

/// Advances an [`EngineState`] in time under the swept drive.
pub trait Propagator {
    fn advance(&mut self, state: &mut EngineState, to_time_ms: f64) -> Result<(), DynamicsError>;

    /// A pure `s` at `t_ms` in this engine's representation.
    fn initial_state(&self, s: HyperfineState, t_ms: f64) -> EngineState;
}
