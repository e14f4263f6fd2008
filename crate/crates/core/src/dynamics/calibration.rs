//! Least-squares fit of the probe back-action pattern to the reference
//! optical-pumping estimate: two sets of 20 pulses, each followed by an ideal
//! swap (`|2,2> <-> |1,1>`, then `|1,1> <-> |2,1>`), starting from `|2,2>`.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::Serialize;

use super::pump::PumpPattern;
use super::{DynamicsError, PopulationVector};
use crate::zeeman::HyperfineState;

pub const PULSES_PER_SET: usize = 20;

/// Final distribution after the reference sequence.
pub const REFERENCE_DISTRIBUTION: [(HyperfineState, f64); 5] = [
    (HyperfineState::ket(2, 1), 0.89),
    (HyperfineState::ket(1, 1), 0.055),
    (HyperfineState::ket(2, 2), 0.045),
    (HyperfineState::ket(2, 0), 0.005),
    (HyperfineState::ket(1, 0), 0.005),
];

/// Run the two-set reference sequence under `pattern`.
pub fn reference_sequence(pattern: &PumpPattern) -> Result<PopulationVector, DynamicsError> {
    let pump = pattern.model()?;
    let mut p = PopulationVector::pure(HyperfineState::ket(2, 2));
    for (a, b) in [
        (HyperfineState::ket(2, 2), HyperfineState::ket(1, 1)),
        (HyperfineState::ket(1, 1), HyperfineState::ket(2, 1)),
    ] {
        for _ in 0..PULSES_PER_SET {
            pump.apply_to_populations(&mut p);
        }
        p.mix(a, b, 1.0);
    }
    Ok(p)
}

pub fn residuals(pattern: &PumpPattern) -> Result<[f64; 5], DynamicsError> {
    let p = reference_sequence(pattern)?;
    let mut r = [0.0; 5];
    for (ri, (s, target)) in r.iter_mut().zip(REFERENCE_DISTRIBUTION) {
        *ri = p.get(s) - target;
    }
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub pattern: PumpPattern,
    pub sum_sq: f64,
    pub final_distribution: PopulationVector,
    pub iterations: u64,
}

struct Problem;

fn pattern_from(x: &[f64]) -> PumpPattern {
    PumpPattern {
        depump_prob: x[0].clamp(0.0, 1.0),
        f2_share: x[1].clamp(0.0, 1.0),
        pi_share: x[2].clamp(0.0, 1.0),
        loss_prob: 0.0,
    }
}

impl CostFunction for Problem {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        // Out-of-box parameters are clamped and pay a quadratic penalty so the
        // simplex walks back inside.
        let penalty: f64 = x
            .iter()
            .map(|v| (v - v.clamp(0.0, 1.0)).powi(2))
            .sum();
        let r = residuals(&pattern_from(x))?;
        Ok(r.iter().map(|v| v * v).sum::<f64>() + penalty)
    }
}

/// Fit depumping probability, F=2 share and `m_F`-preserving share.
pub fn fit_pump_pattern() -> Result<FitResult, DynamicsError> {
    let simplex = vec![
        vec![0.005, 0.5, 0.2],
        vec![0.008, 0.5, 0.2],
        vec![0.005, 0.7, 0.2],
        vec![0.005, 0.5, 0.5],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-14)
        .map_err(|e| DynamicsError::Calibration(e.to_string()))?;
    let res = Executor::new(Problem, solver)
        .configure(|s| s.max_iters(5000))
        .run()
        .map_err(|e| DynamicsError::Calibration(e.to_string()))?;
    let best = res
        .state()
        .get_best_param()
        .cloned()
        .ok_or_else(|| DynamicsError::Calibration("no parameters".into()))?;
    let pattern = pattern_from(&best);
    let r = residuals(&pattern)?;
    Ok(FitResult {
        pattern,
        sum_sq: r.iter().map(|v| v * v).sum(),
        final_distribution: reference_sequence(&pattern)?,
        iterations: res.state().get_iter(),
    })
}
