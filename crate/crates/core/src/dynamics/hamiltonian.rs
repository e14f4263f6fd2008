//! Rotating-frame Hamiltonian of the swept single-frequency drive.
//!
//! Units are angular kHz (rad/ms) so that `i da/dt = H a` integrates with `t`
//! in milliseconds. Stored frequencies are cyclic; the 2π happens here.

use std::f64::consts::PI;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::zeeman::{FieldScenario, HyperfineState, Manifold, SweepProfile};

pub type Hamiltonian = SMatrix<Complex64, 8, 8>;

/// rad/ms per MHz.
pub(crate) const MHZ_TO_RAD_PER_MS: f64 = 2.0 * PI * 1e3;

/// Static part of the diagonal plus the list of couplings, so the time
/// dependence reduces to adding `2π Δ₀(t)` on the F=1 entries.
#[derive(Debug, Clone)]
pub struct FrameTerms {
    /// Zeeman energies, rad/ms.
    pub static_diag: [f64; 8],
    /// `(upper index, lower index, Ω/2 in rad/ms)`.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl FrameTerms {
    pub fn new(manifold: &Manifold, field: FieldScenario) -> Self {
        let mut static_diag = [0.0; 8];
        for s in HyperfineState::ALL {
            static_diag[s.index()] = MHZ_TO_RAD_PER_MS * manifold.zeeman_shift(s, field);
        }
        let couplings = manifold
            .transitions()
            .iter()
            .filter(|t| t.rabi_khz > 0.0)
            .map(|t| (t.upper.index(), t.lower.index(), PI * t.rabi_khz))
            .collect();
        FrameTerms {
            static_diag,
            couplings,
        }
    }

    pub fn diagonal(&self, t_ms: f64, sweep: &SweepProfile) -> [f64; 8] {
        let drive = MHZ_TO_RAD_PER_MS * sweep.detuning_at(t_ms);
        let mut d = self.static_diag;
        for v in &mut d[5..] {
            *v += drive;
        }
        d
    }
}

/// Dense 8×8 rotating-frame Hamiltonian at time `t`, rad/ms.
///
/// F=2 diagonal entries carry the Zeeman shift, F=1 entries the Zeeman shift
/// plus the instantaneous drive detuning; each allowed transition couples its
/// two states with Ω/2.
pub fn build_rotating_hamiltonian(
    manifold: &Manifold,
    t_ms: f64,
    sweep: &SweepProfile,
    field: FieldScenario,
) -> Hamiltonian {
    let terms = FrameTerms::new(manifold, field);
    let mut h = Hamiltonian::zeros();
    for (i, d) in terms.diagonal(t_ms, sweep).into_iter().enumerate() {
        h[(i, i)] = Complex64::new(d, 0.0);
    }
    for (u, l, v) in terms.couplings {
        h[(u, l)] = Complex64::new(v, 0.0);
        h[(l, u)] = Complex64::new(v, 0.0);
    }
    h
}
