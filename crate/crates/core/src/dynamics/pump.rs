//! Per-pulse probe back-action as a deterministic rate map.

use serde::{Deserialize, Serialize};

use super::{CoherentState, DynamicsError, EngineState, PopulationVector, Representation};
use crate::zeeman::HyperfineState;

/// Fitted per-pulse depumping probability of an F=2 atom.
pub const CALIBRATED_DEPUMP_PROB: f64 = 0.005_967_46;
/// Fitted share of depumped atoms that stay in F=2.
pub const CALIBRATED_F2_SHARE: f64 = 0.560_761;
/// Fitted share of F=1-bound atoms that keep their `m_F`.
pub const CALIBRATED_PI_SHARE: f64 = 0.0;

/// Branching pattern of probe scattering out of an F=2 state.
///
/// A depumped atom lands in F=2 with probability `f2_share`, split evenly over
/// `m_F ± 1`; otherwise it lands in F=1, keeping `m_F` with probability
/// `pi_share` and otherwise moving evenly to `m_F ± 1`. Destinations outside
/// the manifold are dropped and the rest renormalized within the same level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpPattern {
    pub depump_prob: f64,
    pub f2_share: f64,
    pub pi_share: f64,
    pub loss_prob: f64,
}

impl Default for PumpPattern {
    fn default() -> Self {
        PumpPattern::calibrated()
    }
}

impl PumpPattern {
    pub fn calibrated() -> Self {
        PumpPattern {
            depump_prob: CALIBRATED_DEPUMP_PROB,
            f2_share: CALIBRATED_F2_SHARE,
            pi_share: CALIBRATED_PI_SHARE,
            loss_prob: 0.0,
        }
    }

    pub fn none() -> Self {
        PumpPattern {
            depump_prob: 0.0,
            f2_share: 0.5,
            pi_share: 0.0,
            loss_prob: 0.0,
        }
    }

    pub fn model(&self) -> Result<PumpModel, DynamicsError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(self.depump_prob) && unit(self.loss_prob) && unit(self.f2_share) && unit(self.pi_share)) {
            return Err(DynamicsError::InvalidPump("probabilities and shares must lie in [0, 1]"));
        }
        if self.depump_prob + self.loss_prob > 1.0 {
            return Err(DynamicsError::InvalidPump("depump_prob + loss_prob must not exceed 1"));
        }
        let mut branch = [[0.0; 8]; 8];
        for s in HyperfineState::ALL {
            let row = &mut branch[s.index()];
            if !s.is_upper() {
                row[s.index()] = 1.0;
                continue;
            }
            let m = s.mf() as i32;
            let upper: Vec<_> = [m - 1, m + 1]
                .iter()
                .filter_map(|&k| HyperfineState::new(2, k).ok())
                .collect();
            let side = 0.5 * (1.0 - self.pi_share);
            let mut lower: Vec<(HyperfineState, f64)> = [(m - 1, side), (m, self.pi_share), (m + 1, side)]
                .iter()
                .filter_map(|&(k, w)| HyperfineState::new(1, k).ok().map(|d| (d, w)))
                .collect();
            if lower.iter().all(|(_, w)| *w == 0.0) {
                // |2,±2> with pi_share = 1 has no m_F-preserving F=1 partner.
                lower.iter_mut().for_each(|(_, w)| *w = 1.0);
            }
            let lower_total: f64 = lower.iter().map(|(_, w)| w).sum();
            let f2_share = if upper.is_empty() { 0.0 } else { self.f2_share };
            for d in &upper {
                row[d.index()] += f2_share / upper.len() as f64;
            }
            for (d, w) in &lower {
                row[d.index()] += (1.0 - f2_share) * w / lower_total;
            }
        }
        PumpModel::new(self.depump_prob, branch, self.loss_prob)
    }
}

/// Probe back-action: depumping with a redistribution matrix plus trap loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpModel {
    pub depump_prob: f64,
    /// Row-stochastic; row `s` is where an atom depumped out of `s` lands.
    pub branch: [[f64; 8]; 8],
    pub loss_prob: f64,
}

impl PumpModel {
    pub fn new(depump_prob: f64, branch: [[f64; 8]; 8], loss_prob: f64) -> Result<Self, DynamicsError> {
        for row in &branch {
            if row.iter().any(|w| *w < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(DynamicsError::InvalidPump("branch rows must be stochastic"));
            }
        }
        if !(0.0..=1.0).contains(&depump_prob) || !(0.0..=1.0).contains(&loss_prob) {
            return Err(DynamicsError::InvalidPump("probabilities must lie in [0, 1]"));
        }
        Ok(PumpModel {
            depump_prob,
            branch,
            loss_prob,
        })
    }

    pub fn identity() -> Self {
        let mut branch = [[0.0; 8]; 8];
        for (i, row) in branch.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        PumpModel {
            depump_prob: 0.0,
            branch,
            loss_prob: 0.0,
        }
    }

    pub fn apply_to_populations(&self, pop: &mut PopulationVector) {
        let before = pop.p;
        for s in HyperfineState::ALL.iter().filter(|s| s.is_upper()) {
            let i = s.index();
            let depumped = self.depump_prob * before[i];
            let lost = self.loss_prob * before[i];
            pop.p[i] -= depumped + lost;
            pop.lost += lost;
            for (j, w) in self.branch[i].iter().enumerate() {
                pop.p[j] += depumped * w;
            }
        }
    }

    /// One probe pulse. Coherent states are dephased onto populations first.
    pub fn apply_probe_pulse(&self, state: &mut EngineState) {
        match &mut state.repr {
            Representation::Populations(p) => self.apply_to_populations(p),
            Representation::Coherent(c) => {
                let mut p = c.populations();
                self.apply_to_populations(&mut p);
                *c = CoherentState::from_populations(&p);
            }
        }
    }
}
