use nalgebra::SVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::zeeman::HyperfineState;

/// Occupation probabilities of the eight ground states plus the fraction
/// lost from the trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector {
    pub p: [f64; 8],
    pub lost: f64,
}

impl PopulationVector {
    pub fn pure(s: HyperfineState) -> Self {
        let mut p = [0.0; 8];
        p[s.index()] = 1.0;
        PopulationVector { p, lost: 0.0 }
    }

    pub fn uniform() -> Self {
        PopulationVector {
            p: [0.125; 8],
            lost: 0.0,
        }
    }

    pub fn get(&self, s: HyperfineState) -> f64 {
        self.p[s.index()]
    }

    pub fn set(&mut self, s: HyperfineState, value: f64) {
        self.p[s.index()] = value;
    }

    /// Population still held in the trap.
    pub fn bound(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.bound() + self.lost
    }

    /// Population in the probe-visible F=2 level.
    pub fn f2_fraction(&self) -> f64 {
        self.p[..5].iter().sum()
    }

    /// Most populated state; ties resolve to the earlier canonical index.
    pub fn majority(&self) -> HyperfineState {
        let mut best = 0;
        for i in 1..8 {
            if self.p[i] > self.p[best] {
                best = i;
            }
        }
        HyperfineState::ALL[best]
    }

    /// Exchange a fraction `prob` of the occupation between two states.
    pub fn mix(&mut self, a: HyperfineState, b: HyperfineState, prob: f64) {
        let (pa, pb) = (self.get(a), self.get(b));
        let moved = prob * (pa - pb);
        self.set(a, pa - moved);
        self.set(b, pb + moved);
    }
}

pub type Amplitudes = SVector<Complex64, 8>;

/// Rotating-frame amplitudes of a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeVector(pub Amplitudes);

impl AmplitudeVector {
    pub fn pure(s: HyperfineState) -> Self {
        let mut a = Amplitudes::zeros();
        a[s.index()] = Complex64::new(1.0, 0.0);
        AmplitudeVector(a)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> [f64; 8] {
        let mut p = [0.0; 8];
        for (pi, a) in p.iter_mut().zip(self.0.iter()) {
            *pi = a.norm_sqr();
        }
        p
    }
}

/// A weighted pure component of a dephased mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub amplitudes: AmplitudeVector,
}

/// Incoherent mixture of pure states evolved by the coherent engine.
///
/// A single branch is a pure state. Probe pulses dephase the mixture, which
/// resets it to one basis-state branch per populated level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub branches: Vec<Branch>,
    pub lost: f64,
}

impl CoherentState {
    pub fn pure(s: HyperfineState) -> Self {
        CoherentState {
            branches: vec![Branch {
                weight: 1.0,
                amplitudes: AmplitudeVector::pure(s),
            }],
            lost: 0.0,
        }
    }

    pub fn populations(&self) -> PopulationVector {
        let mut p = [0.0; 8];
        for b in &self.branches {
            for (pi, q) in p.iter_mut().zip(b.amplitudes.probabilities()) {
                *pi += b.weight * q;
            }
        }
        PopulationVector { p, lost: self.lost }
    }

    pub fn from_populations(pop: &PopulationVector) -> Self {
        let branches = HyperfineState::ALL
            .iter()
            .filter(|s| pop.get(**s) > 0.0)
            .map(|s| Branch {
                weight: pop.get(*s),
                amplitudes: AmplitudeVector::pure(*s),
            })
            .collect();
        CoherentState {
            branches,
            lost: pop.lost,
        }
    }

    /// Largest deviation of any branch norm from one.
    pub fn norm_drift(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| (b.amplitudes.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Populations(PopulationVector),
    Coherent(CoherentState),
}

/// Time, state and drive switch of one engine trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub t_ms: f64,
    pub repr: Representation,
    /// Microwave drive reaches the atoms. Off freezes populations.
    pub drive_on: bool,
    /// Identifier of the random stream of the owning trial.
    pub rng_stream: u64,
}

impl EngineState {
    pub fn classical(s: HyperfineState, t_ms: f64) -> Self {
        EngineState {
            t_ms,
            repr: Representation::Populations(PopulationVector::pure(s)),
            drive_on: true,
            rng_stream: 0,
        }
    }

    pub fn coherent(s: HyperfineState, t_ms: f64) -> Self {
        EngineState {
            t_ms,
            repr: Representation::Coherent(CoherentState::pure(s)),
            drive_on: true,
            rng_stream: 0,
        }
    }

    pub fn populations(&self) -> PopulationVector {
        match &self.repr {
            Representation::Populations(p) => *p,
            Representation::Coherent(c) => c.populations(),
        }
    }
}
