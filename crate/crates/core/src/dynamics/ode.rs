//! Coherent engine: adaptive integration of the rotating-frame Schrödinger
//! equation, by a unitary fourth-order Magnus scheme or by Dormand–Prince 5(4).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{FrameTerms, MHZ_TO_RAD_PER_MS};
use super::magnus::Magnus4;
use super::{DynamicsError, EngineState, Propagator, Representation};
use crate::zeeman::{FieldScenario, HyperfineState, Manifold, SweepProfile};

pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Step scheme of the coherent engine.
///
/// `Magnus4` is unitary per step, so the norm stays at rounding level over
/// long sweeps. `Dopri5` is a classical explicit pair; its norm error grows
/// with the number of steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeMethod {
    #[default]
    Magnus4,
    Dopri5,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive embedded Runge–Kutta for complex linear systems.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step hint carried between calls.
    pub h: f64,
}

impl Dopri5 {
    pub fn new(rel_tol: f64) -> Self {
        Dopri5 {
            rel_tol,
            abs_tol: rel_tol,
            h: 0.0,
        }
    }

    /// Integrate `dy/dt = f(t, y)` from `t0` to `t1` in place. The final step
    /// is clipped to land on `t1` exactly.
    pub fn integrate<F>(
        &mut self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut [Complex64],
    ) -> Result<StepStats, DynamicsError>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let mut stats = StepStats {
            accepted: 0,
            rejected: 0,
        };
        if t1 <= t0 || n == 0 {
            return Ok(stats);
        }
        let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
        let mut tmp = vec![Complex64::default(); n];
        let mut y_new = vec![Complex64::default(); n];

        let mut t = t0;
        f(t, y, &mut k[0]);
        let mut h = if self.h > 0.0 {
            self.h
        } else {
            initial_step(y, &k[0], self.rel_tol)
        };
        h = h.min(t1 - t0);

        while t < t1 {
            let last = t + h >= t1;
            let h_step = if last { t1 - t } else { h };
            let h_min = 1e-13 * t.abs().max(1.0);
            if h_step < h_min && !last {
                return Err(DynamicsError::StepUnderflow { t_ms: t, h_ms: h_step });
            }

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = Complex64::default();
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * a;
                        }
                    }
                    tmp[i] = y[i] + acc * h_step;
                }
                f(t + C[s] * h_step, &tmp, &mut k[s]);
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }

            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = Complex64::default();
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let scale = self.abs_tol + self.rel_tol * y[i].norm().max(y_new[i].norm());
                err_sq += (e.norm() * h_step / scale).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();

            if err <= 1.0 {
                t = if last { t1 } else { t + h_step };
                y.copy_from_slice(&y_new);
                // First-same-as-last.
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = h_step * grow;
                } else if h_step < h {
                    // Clipped final step: the previous proposal is still the better hint.
                    self.h = h;
                } else {
                    self.h = h_step * grow;
                }
            } else {
                stats.rejected += 1;
                h = h_step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < h_min {
                    return Err(DynamicsError::StepUnderflow { t_ms: t, h_ms: h });
                }
            }
        }
        Ok(stats)
    }
}

fn initial_step(y: &[Complex64], dy: &[Complex64], tol: f64) -> f64 {
    let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
    let nd = dy.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if nd == 0.0 {
        1e-3
    } else {
        0.01 * tol.powf(0.2) * ny / nd
    }
}

/// Rotating-frame Schrödinger integrator over a dephased mixture of pure
/// branches.
#[derive(Debug, Clone)]
pub struct OdeEngine {
    terms: FrameTerms,
    sweep: SweepProfile,
    method: OdeMethod,
    dopri: Dopri5,
    magnus: Magnus4,
    pub stats: StepStats,
}

impl OdeEngine {
    pub fn new(
        manifold: &Manifold,
        sweep: &SweepProfile,
        field: FieldScenario,
        rel_tol: f64,
    ) -> Result<Self, DynamicsError> {
        if !(1e-12..=1e-6).contains(&rel_tol) {
            return Err(DynamicsError::InvalidTolerance(rel_tol));
        }
        Ok(OdeEngine {
            terms: FrameTerms::new(manifold, field),
            sweep: *sweep,
            method: OdeMethod::default(),
            dopri: Dopri5::new(rel_tol),
            magnus: Magnus4::new(rel_tol),
            stats: StepStats {
                accepted: 0,
                rejected: 0,
            },
        })
    }

    pub fn with_method(mut self, method: OdeMethod) -> Self {
        self.method = method;
        self
    }

    pub fn method(&self) -> OdeMethod {
        self.method
    }

    pub fn rel_tol(&self) -> f64 {
        self.dopri.rel_tol
    }

    /// Free evolution with the couplings switched off: exact diagonal phases.
    fn free_phases(&self, state: &mut super::CoherentState, t0: f64, t1: f64) {
        let dt = t1 - t0;
        let drive = MHZ_TO_RAD_PER_MS * self.sweep.detuning_integral(t0, t1);
        for b in &mut state.branches {
            for (i, a) in b.amplitudes.0.iter_mut().enumerate() {
                let mut phase = self.terms.static_diag[i] * dt;
                if i >= 5 {
                    phase += drive;
                }
                *a *= Complex64::from_polar(1.0, -phase);
            }
        }
    }
}

impl Propagator for OdeEngine {
    fn advance(&mut self, state: &mut EngineState, to_time_ms: f64) -> Result<(), DynamicsError> {
        let t0 = state.t_ms;
        if to_time_ms < t0 {
            return Err(DynamicsError::TimeReversal {
                from: t0,
                to: to_time_ms,
            });
        }
        let Representation::Coherent(coh) = &mut state.repr else {
            return Err(DynamicsError::RepresentationMismatch("ode engine needs amplitudes"));
        };
        if to_time_ms == t0 {
            return Ok(());
        }
        if !state.drive_on {
            self.free_phases(coh, t0, to_time_ms);
            state.t_ms = to_time_ms;
            return Ok(());
        }

        // A scalar energy offset only changes the global phase of each branch;
        // centring it on the occupied levels keeps the main amplitudes slow.
        let d0 = self.terms.diagonal(t0, &self.sweep);
        let pop = coh.populations();
        let weight = pop.bound();
        let e_ref = if weight > 0.0 {
            d0.iter().zip(pop.p).map(|(d, p)| d * p).sum::<f64>() / weight
        } else {
            0.0
        };

        let mut y: Vec<Complex64> = coh
            .branches
            .iter()
            .flat_map(|b| b.amplitudes.0.iter().copied())
            .collect();
        let terms = &self.terms;
        let sweep = &self.sweep;
        let shifted = |t: f64| {
            let mut d = terms.diagonal(t, sweep);
            for v in &mut d {
                *v -= e_ref;
            }
            d
        };
        let s = match self.method {
            OdeMethod::Magnus4 => {
                self.magnus
                    .integrate(shifted, &terms.couplings, t0, to_time_ms, &mut y)?
            }
            OdeMethod::Dopri5 => {
                let rhs = |t: f64, a: &[Complex64], out: &mut [Complex64]| {
                    let d = shifted(t);
                    for (ab, ob) in a.chunks_exact(8).zip(out.chunks_exact_mut(8)) {
                        for i in 0..8 {
                            ob[i] = ab[i] * d[i];
                        }
                        for &(u, l, v) in &terms.couplings {
                            ob[u] += ab[l] * v;
                            ob[l] += ab[u] * v;
                        }
                        for o in ob.iter_mut() {
                            *o *= -I;
                        }
                    }
                };
                self.dopri.integrate(rhs, t0, to_time_ms, &mut y)?
            }
        };
        self.stats.accepted += s.accepted;
        self.stats.rejected += s.rejected;

        for (b, chunk) in coh.branches.iter_mut().zip(y.chunks_exact(8)) {
            for (a, v) in b.amplitudes.0.iter_mut().zip(chunk) {
                *a = *v;
            }
        }
        state.t_ms = to_time_ms;
        Ok(())
    }

    fn initial_state(&self, s: HyperfineState, t_ms: f64) -> EngineState {
        EngineState::coherent(s, t_ms)
    }
}
