//! Stern-Gerlach time-of-flight readout: a field gradient during the first
//! part of free fall separates the sub-levels by `g_F m_F`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::PopulationVector;
use crate::zeeman::{HyperfineState, PhysicalConstants};

/// Planck constant, J s.
const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Error, PartialEq)]
pub enum SgError {
    #[error("invalid Stern-Gerlach config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imaging {
    /// Repump before imaging: every state is visible.
    #[default]
    AllStates,
    /// No repump: only F=2 absorbs.
    F2Only,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SGConfig {
    /// ∂B_y/∂y, G/cm.
    pub gradient_g_per_cm: f64,
    /// Gradient-on time at the start of the fall, ms.
    pub t_grad_ms: f64,
    /// Total time of flight, ms.
    pub t_tof_ms: f64,
    pub atom_mass_kg: f64,
    /// Gaussian width used when rendering a profile, mm.
    pub bin_width_mm: f64,
    pub imaging: Imaging,
}

impl Default for SGConfig {
    fn default() -> Self {
        SGConfig {
            gradient_g_per_cm: 10.0,
            t_grad_ms: 10.0,
            t_tof_ms: 20.0,
            atom_mass_kg: 1.443_16e-25,
            bin_width_mm: 0.1,
            imaging: Imaging::AllStates,
        }
    }
}

impl SGConfig {
    pub fn validate(&self) -> Result<(), SgError> {
        if !(self.t_grad_ms > 0.0 && self.t_grad_ms <= self.t_tof_ms && self.t_tof_ms.is_finite()) {
            return Err(SgError::InvalidConfig("need 0 < t_grad <= t_tof"));
        }
        if !self.gradient_g_per_cm.is_finite() {
            return Err(SgError::InvalidConfig("gradient must be finite"));
        }
        if !(self.atom_mass_kg > 0.0 && self.atom_mass_kg.is_finite()) {
            return Err(SgError::InvalidConfig("atom mass must be positive"));
        }
        if !(self.bin_width_mm > 0.0 && self.bin_width_mm.is_finite()) {
            return Err(SgError::InvalidConfig("bin_width must be positive"));
        }
        Ok(())
    }
}

/// Final position along the gradient axis, mm.
///
/// `F_y = -g_F m_F μ_B ∂B/∂y` acts for `t_grad`, then the atom flies
/// ballistically until `t_tof`. Gravity is not along this axis.
pub fn displacement(s: HyperfineState, cfg: &SGConfig, constants: &PhysicalConstants) -> f64 {
    let mu_b = constants.mu_b_over_h * 1e10 * PLANCK; // MHz/G -> Hz/T, times h
    let gradient = cfg.gradient_g_per_cm * 1e-2; // T/m
    let force = -constants.g_factor(s.f()) * s.mf() as f64 * mu_b * gradient;
    let a = force / cfg.atom_mass_kg;
    let tg = cfg.t_grad_ms * 1e-3;
    let tf = cfg.t_tof_ms * 1e-3;
    let y = a * (0.5 * tg * tg + tg * (tf - tg));
    // Positions are bin keys: fold -0.0 onto 0.0.
    y * 1e3 + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgBin {
    pub position_mm: f64,
    pub occupation: f64,
    pub states: Vec<HyperfineState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgHistogram {
    /// Sorted by position.
    pub bins: Vec<SgBin>,
    pub lost: f64,
    /// Bound population not seen by the imaging mode.
    pub unimaged: f64,
}

impl SgHistogram {
    pub fn total(&self) -> f64 {
        self.bins.iter().map(|b| b.occupation).sum()
    }

    /// The bin that holds `s`.
    pub fn bin_of(&self, s: HyperfineState) -> Option<&SgBin> {
        self.bins.iter().find(|b| b.states.contains(&s))
    }

    pub fn dominant(&self) -> Option<&SgBin> {
        self.bins
            .iter()
            .max_by(|a, b| a.occupation.total_cmp(&b.occupation))
    }
}

/// Group the eight states by final position.
pub fn bin_populations(p: &PopulationVector, cfg: &SGConfig, constants: &PhysicalConstants) -> SgHistogram {
    let mut bins: Vec<SgBin> = Vec::new();
    let mut unimaged = 0.0;
    for s in HyperfineState::ALL {
        if cfg.imaging == Imaging::F2Only && !s.is_upper() {
            unimaged += p.get(s);
            continue;
        }
        let y = displacement(s, cfg, constants);
        match bins.iter_mut().find(|b| b.position_mm == y) {
            Some(b) => {
                b.occupation += p.get(s);
                b.states.push(s);
            }
            None => bins.push(SgBin {
                position_mm: y,
                occupation: p.get(s),
                states: vec![s],
            }),
        }
    }
    bins.sort_by(|a, b| a.position_mm.total_cmp(&b.position_mm));
    SgHistogram {
        bins,
        lost: p.lost,
        unimaged,
    }
}

/// `(y_mm, density)` samples of the 1-D column density: one unit-area
/// Gaussian of width `bin_width` per bin, scaled by its occupation.
pub fn absorption_profile(hist: &SgHistogram, cfg: &SGConfig, points: usize) -> Vec<(f64, f64)> {
    let w = cfg.bin_width_mm;
    let lo = hist.bins.first().map_or(0.0, |b| b.position_mm) - 6.0 * w;
    let hi = hist.bins.last().map_or(0.0, |b| b.position_mm) + 6.0 * w;
    let n = points.max(2);
    let norm = 1.0 / (w * (2.0 * std::f64::consts::PI).sqrt());
    (0..n)
        .map(|k| {
            let y = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let d = hist
                .bins
                .iter()
                .map(|b| b.occupation * norm * (-0.5 * ((y - b.position_mm) / w).powi(2)).exp())
                .sum();
            (y, d)
        })
        .collect()
}
