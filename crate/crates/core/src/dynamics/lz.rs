use std::f64::consts::PI;

use super::{DynamicsError, EngineState, Propagator, Representation};
use crate::zeeman::{Crossing, FieldScenario, Manifold, SweepProfile};

/// Ω²/|α̇| with Ω = 2π·rabi and α̇ = 2π·|rate|, both angular.
pub fn adiabaticity(rabi_khz: f64, rate_mhz_per_ms: f64) -> f64 {
    let omega = 2.0 * PI * rabi_khz; // rad/ms
    let chirp = 2.0 * PI * 1e3 * rate_mhz_per_ms.abs(); // rad/ms²
    omega * omega / chirp
}

/// Rabi frequency (kHz) that gives adiabaticity `gamma` at `rate`.
pub fn rabi_for_adiabaticity(gamma: f64, rate_mhz_per_ms: f64) -> f64 {
    let chirp = 2.0 * PI * 1e3 * rate_mhz_per_ms.abs();
    (gamma * chirp).sqrt() / (2.0 * PI)
}

/// Landau-Zener transfer probability `1 - exp(-π Ω² / (2 α̇))` for one
/// passage through an isolated resonance.
pub fn lz_probability(rabi_khz: f64, sweep_rate_mhz_per_ms: f64) -> Result<f64, DynamicsError> {
    if sweep_rate_mhz_per_ms == 0.0 || !sweep_rate_mhz_per_ms.is_finite() {
        return Err(DynamicsError::ZeroSweepRate);
    }
    if !(rabi_khz >= 0.0) {
        return Err(DynamicsError::NegativeRabi(rabi_khz));
    }
    let gamma = adiabaticity(rabi_khz, sweep_rate_mhz_per_ms);
    Ok(-(-PI * gamma / 2.0).exp_m1())
}

/// Sequential Landau-Zener engine over classical populations.
#[derive(Debug, Clone)]
pub struct LzEngine {
    schedule: Vec<(Crossing, f64)>,
}

impl LzEngine {
    pub fn new(
        manifold: &Manifold,
        sweep: &SweepProfile,
        field: FieldScenario,
    ) -> Result<Self, DynamicsError> {
        let schedule = manifold
            .crossing_schedule(sweep, field)
            .into_iter()
            .map(|c| Ok((c, lz_probability(c.transition.rabi_khz, sweep.rate_mhz_per_ms)?)))
            .collect::<Result<_, DynamicsError>>()?;
        Ok(LzEngine { schedule })
    }

    pub fn schedule(&self) -> impl Iterator<Item = &Crossing> {
        self.schedule.iter().map(|(c, _)| c)
    }
}

impl Propagator for LzEngine {
    fn advance(&mut self, state: &mut EngineState, to_time_ms: f64) -> Result<(), DynamicsError> {
        if to_time_ms < state.t_ms {
            return Err(DynamicsError::TimeReversal {
                from: state.t_ms,
                to: to_time_ms,
            });
        }
        let Representation::Populations(pop) = &mut state.repr else {
            return Err(DynamicsError::RepresentationMismatch("lz engine needs populations"));
        };
        if state.drive_on {
            for (c, prob) in &self.schedule {
                if c.time_ms > state.t_ms && c.time_ms <= to_time_ms {
                    pop.mix(c.transition.upper, c.transition.lower, *prob);
                }
            }
        }
        state.t_ms = to_time_ms;
        Ok(())
    }

    fn initial_state(&self, s: crate::zeeman::HyperfineState, t_ms: f64) -> EngineState {
        EngineState::classical(s, t_ms)
    }
}
