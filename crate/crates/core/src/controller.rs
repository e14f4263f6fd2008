//! Edge-counting feedback automaton.
//!
//! Tracks the extrema of the probe magnitude between transitions, flags an
//! edge whenever the signal crosses the midpoint of the current extrema and
//! raises STOP once the requested number of edges has been seen.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probe::IQSample;
use crate::zeeman::{HyperfineState, PathStep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("sample {index} arrived after STOP")]
    SampleAfterStop { index: usize },
    #[error("invalid controller config: {0}")]
    InvalidConfig(&'static str),
    #[error("{target} is not reachable from {initial} along the ladder")]
    Unreachable {
        target: HyperfineState,
        initial: HyperfineState,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub target_edges: u32,
    pub threshold_fraction: f64,
    /// Consecutive threshold crossings needed to accept an edge.
    pub debounce: u32,
    pub initial_min: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            target_edges: 2,
            threshold_fraction: 0.5,
            debounce: 1,
            initial_min: 0.0,
        }
    }
}

impl ControllerConfig {
    pub fn with_target(target_edges: u32) -> Self {
        ControllerConfig {
            target_edges,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.target_edges < 1 {
            return Err(ControllerError::InvalidConfig("target_edges must be >= 1"));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(ControllerError::InvalidConfig("threshold_fraction must lie in (0, 1)"));
        }
        if self.debounce < 1 {
            return Err(ControllerError::InvalidConfig("debounce must be >= 1"));
        }
        if !self.initial_min.is_finite() {
            return Err(ControllerError::InvalidConfig("initial_min must be finite"));
        }
        Ok(())
    }
}

/// Which plateau the controller expects next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EdgeDirection {
    Falling,
    Rising,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    None,
    Stop,
}

/// One accepted edge, with the thresholds in force when it fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    /// Index of the triggering sample; the init sample is index 0.
    pub sample_index: usize,
    pub t_ms: f64,
    pub direction: EdgeDirection,
    pub magnitude: f64,
    pub ref_min: f64,
    pub ref_max: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackController {
    cfg: ControllerConfig,
    pub ref_max: f64,
    pub ref_min: f64,
    pub phase: Phase,
    pub edge_count: u32,
    pub pending: u32,
    pub stopped: bool,
    pub log: Vec<EdgeEvent>,
    samples_seen: usize,
}

impl FeedbackController {
    /// Seed the extrema from the first sample: its magnitude is the maximum,
    /// `initial_min` the minimum.
    pub fn init(cfg: ControllerConfig, first: &IQSample) -> Result<Self, ControllerError> {
        cfg.validate()?;
        Ok(FeedbackController {
            cfg,
            ref_max: first.magnitude(),
            ref_min: cfg.initial_min,
            phase: Phase::High,
            edge_count: 0,
            pending: 0,
            stopped: false,
            log: Vec::new(),
            samples_seen: 1,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    pub fn threshold(&self) -> f64 {
        self.ref_min + self.cfg.threshold_fraction * (self.ref_max - self.ref_min)
    }

    pub fn process(&mut self, s: &IQSample) -> Result<Action, ControllerError> {
        let index = self.samples_seen;
        if self.stopped {
            return Err(ControllerError::SampleAfterStop { index });
        }
        self.samples_seen += 1;
        let a = s.magnitude();
        let threshold = self.threshold();
        let crossed = match self.phase {
            Phase::High => a < threshold,
            Phase::Low => a > threshold,
        };
        if !crossed {
            self.pending = 0;
            match self.phase {
                Phase::High => self.ref_max = self.ref_max.max(a),
                Phase::Low => self.ref_min = self.ref_min.min(a),
            }
            return Ok(Action::None);
        }
        self.pending += 1;
        if self.pending < self.cfg.debounce {
            return Ok(Action::None);
        }

        let direction = match self.phase {
            Phase::High => EdgeDirection::Falling,
            Phase::Low => EdgeDirection::Rising,
        };
        self.log.push(EdgeEvent {
            sample_index: index,
            t_ms: s.t_ms,
            direction,
            magnitude: a,
            ref_min: self.ref_min,
            ref_max: self.ref_max,
            threshold,
        });
        self.edge_count += 1;
        self.pending = 0;
        match direction {
            EdgeDirection::Falling => {
                self.phase = Phase::Low;
                self.ref_min = a;
            }
            EdgeDirection::Rising => {
                self.phase = Phase::High;
                self.ref_max = a;
            }
        }
        if self.edge_count == self.cfg.target_edges {
            self.stopped = true;
            return Ok(Action::Stop);
        }
        Ok(Action::None)
    }
}

/// Edges to count before `target` is reached along `path` from `initial`.
pub fn expected_edges(
    target: HyperfineState,
    initial: HyperfineState,
    path: &[PathStep],
) -> Result<u32, ControllerError> {
    if target == initial {
        return Ok(0);
    }
    path.iter()
        .position(|step| step.state == target)
        .map(|i| i as u32 + 1)
        .ok_or(ControllerError::Unreachable { target, initial })
}
