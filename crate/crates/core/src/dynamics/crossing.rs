//! Isolated single-crossing experiment: sweep through the `|2,2> <-> |1,1>`
//! resonance alone and read off the transferred fraction with either engine.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, EngineKind, LzEngine, OdeEngine, OdeMethod, Propagator, Representation};
use crate::zeeman::{FieldScenario, HyperfineState, Manifold, SweepProfile, Transition};

/// Geometry of the isolated crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossingSetup {
    pub bz_gauss: f64,
    /// Half-width of the swept window around the resonance, MHz.
    pub half_window_mhz: f64,
    pub rel_tol: f64,
    pub method: OdeMethod,
}

impl Default for CrossingSetup {
    fn default() -> Self {
        CrossingSetup {
            bz_gauss: 4.7,
            half_window_mhz: 1.5,
            rel_tol: super::DEFAULT_REL_TOL,
            method: OdeMethod::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingOutcome {
    pub transfer: f64,
    pub norm_drift: f64,
    pub steps: usize,
}

/// The stretched-state transition used by the oracle.
pub fn stretched_transition(manifold: &Manifold) -> Transition {
    let top = HyperfineState::ket(2, 2);
    *manifold
        .transitions()
        .iter()
        .find(|t| t.upper == top)
        .expect("|2,2> always has an F=1 partner")
}

pub fn isolated_crossing(
    rabi_khz: f64,
    rate_mhz_per_ms: f64,
    setup: &CrossingSetup,
    engine: EngineKind,
) -> Result<CrossingOutcome, DynamicsError> {
    if rate_mhz_per_ms == 0.0 {
        return Err(DynamicsError::ZeroSweepRate);
    }
    if !(rabi_khz >= 0.0) {
        return Err(DynamicsError::NegativeRabi(rabi_khz));
    }
    let manifold = Manifold::with_rabi(rabi_khz);
    let field = FieldScenario::new(setup.bz_gauss)
        .map_err(|_| DynamicsError::RepresentationMismatch("field must be finite"))?;
    let t = stretched_transition(&manifold);
    let sweep = SweepProfile::new(
        manifold.transition_detuning(&t, field),
        2.0 * setup.half_window_mhz,
        rate_mhz_per_ms,
        0.0,
    )
    .map_err(|_| DynamicsError::RepresentationMismatch("invalid crossing window"))?;
    let start = HyperfineState::ket(2, 2);
    let t_end = sweep.t_end_ms();
    match engine {
        EngineKind::Lz => {
            let mut e = LzEngine::new(&manifold, &sweep, field)?;
            let mut s = e.initial_state(start, 0.0);
            e.advance(&mut s, t_end)?;
            Ok(CrossingOutcome {
                transfer: s.populations().get(t.lower),
                norm_drift: 0.0,
                steps: 0,
            })
        }
        EngineKind::Ode => {
            let mut e = OdeEngine::new(&manifold, &sweep, field, setup.rel_tol)?.with_method(setup.method);
            let mut s = e.initial_state(start, 0.0);
            e.advance(&mut s, t_end)?;
            let Representation::Coherent(c) = &s.repr else {
                unreachable!("ode engine keeps amplitudes")
            };
            Ok(CrossingOutcome {
                transfer: s.populations().get(t.lower),
                norm_drift: c.norm_drift(),
                steps: e.stats.accepted + e.stats.rejected,
            })
        }
    }
}
