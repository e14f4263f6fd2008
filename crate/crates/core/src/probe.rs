//! Pulsed dispersive probe: demodulated I/Q samples whose envelope tracks the
//! F=2 population.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("invalid probe config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Pulse spacing, ms.
    pub pulse_period_ms: f64,
    /// Pulse length, ns. Pulses are sampled as instants; kept for reference.
    pub pulse_duration_ns: f64,
    /// Signal per unit F=2 fraction.
    pub gain: f64,
    /// Baseline offset.
    pub offset0: f64,
    /// Offset added per unit of lost population.
    pub offset_growth: f64,
    /// Demodulation phase, rad.
    pub demod_phase: f64,
    /// Per-quadrature Gaussian noise.
    pub noise_sigma: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            pulse_period_ms: 2.5,
            pulse_duration_ns: 500.0,
            gain: 1.0,
            offset0: 0.05,
            offset_growth: 1.0,
            demod_phase: 0.6,
            noise_sigma: 0.03,
        }
    }
}

impl ProbeConfig {
    pub fn noiseless() -> Self {
        ProbeConfig {
            noise_sigma: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        if !(self.pulse_period_ms.is_finite() && self.pulse_period_ms > 0.0) {
            return Err(ProbeError::InvalidConfig("pulse_period_ms must be positive"));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(ProbeError::InvalidConfig("gain must be positive"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(ProbeError::InvalidConfig("noise_sigma must be >= 0"));
        }
        if ![self.offset0, self.offset_growth, self.demod_phase, self.pulse_duration_ns]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(ProbeError::InvalidConfig("values must be finite"));
        }
        Ok(())
    }
}

/// One demodulated probe pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IQSample {
    pub t_ms: f64,
    pub i: f64,
    pub q: f64,
}

impl IQSample {
    pub fn magnitude(&self) -> f64 {
        magnitude(self)
    }
}

/// `A = sqrt(I² + Q²)`.
pub fn magnitude(s: &IQSample) -> f64 {
    s.i.hypot(s.q)
}

/// `t_start, t_start + period, ...` up to and including `t_end`.
pub fn pulse_times(cfg: &ProbeConfig, t_start: f64, t_end: f64) -> Vec<f64> {
    if t_end < t_start {
        return Vec::new();
    }
    let period = cfg.pulse_period_ms;
    // Tolerate rounding in t_end so a pulse landing on the end is kept.
    let n = ((t_end - t_start) / period + 1e-9).floor() as usize;
    (0..=n).map(|k| t_start + k as f64 * period).collect()
}

/// Noise-free envelope `offset0 + offset_growth·lost + gain·f2`.
pub fn envelope(f2_fraction: f64, lost: f64, cfg: &ProbeConfig) -> f64 {
    cfg.offset0 + cfg.offset_growth * lost + cfg.gain * f2_fraction
}

/// Draw one I/Q sample. Always consumes two normal deviates from `rng`, so the
/// stream position does not depend on `noise_sigma`.
pub fn synthesize_sample<R: Rng + ?Sized>(
    t_ms: f64,
    f2_fraction: f64,
    lost: f64,
    cfg: &ProbeConfig,
    rng: &mut R,
) -> IQSample {
    let a = envelope(f2_fraction, lost, cfg);
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    IQSample {
        t_ms,
        i: a * cfg.demod_phase.cos() + cfg.noise_sigma * n1,
        q: a * cfg.demod_phase.sin() + cfg.noise_sigma * n2,
    }
}
