use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::controller::ControllerConfig;
use crate::dynamics::crossing::CrossingSetup;
use crate::dynamics::{EngineKind, OdeMethod, PumpPattern, DEFAULT_REL_TOL};
use crate::probe::ProbeConfig;
use crate::sterngerlach::SGConfig;
use crate::zeeman::{DriveCouplings, FieldScenario, HyperfineState, PhysicalConstants, SweepProfile};

/// Bias field of a run: fixed, or drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Fixed(f64),
    /// `|B|` uniform in `[min, max]`, sign uniform if `random_sign`.
    UniformAbs {
        min: f64,
        max: f64,
        #[serde(default = "yes")]
        random_sign: bool,
    },
}

fn yes() -> bool {
    true
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::UniformAbs {
            min: 4.5,
            max: 14.5,
            random_sign: true,
        }
    }
}

impl FieldSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        match *self {
            FieldSpec::Fixed(b) if !b.is_finite() => Err(HarnessError::config("field must be finite")),
            FieldSpec::UniformAbs { min, max, .. } if !(min >= 0.0 && max >= min && max.is_finite()) => {
                Err(HarnessError::config("field range needs 0 <= min <= max"))
            }
            _ => Ok(()),
        }
    }

    /// Resolve to a concrete field. Always consumes two uniforms for a range.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldScenario {
        match *self {
            FieldSpec::Fixed(b) => FieldScenario { bz_gauss: b },
            FieldSpec::UniformAbs { min, max, random_sign } => {
                let u: f64 = rng.gen();
                let flip: bool = rng.gen();
                let magnitude = min + (max - min) * u;
                let sign = if random_sign && flip { -1.0 } else { 1.0 };
                FieldScenario {
                    bz_gauss: sign * magnitude,
                }
            }
        }
    }
}

/// Switch the drive and probe off at a fixed point of an open-loop sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OpenLoopStop {
    DetuningMhz(f64),
    TimeMs(f64),
}

impl OpenLoopStop {
    pub fn time_ms(&self, sweep: &SweepProfile) -> f64 {
        match *self {
            OpenLoopStop::DetuningMhz(d) => sweep.time_at_detuning(d),
            OpenLoopStop::TimeMs(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub method: OdeMethod,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rel_tol: DEFAULT_REL_TOL,
            method: OdeMethod::default(),
        }
    }
}

/// Grid of the adiabaticity scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub rabi_min_khz: f64,
    pub rabi_max_khz: f64,
    /// Log-spaced points between the bounds.
    pub rabi_points: usize,
    /// Add an Ω = 0 row.
    pub include_zero: bool,
    pub rates_mhz_per_ms: Vec<f64>,
    /// Also run the coherent engine at every point.
    pub with_ode: bool,
    pub crossing: CrossingSetup,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            rabi_min_khz: 1.0,
            rabi_max_khz: 20.0,
            rabi_points: 7,
            include_zero: true,
            rates_mhz_per_ms: vec![-0.3],
            with_ode: true,
            crossing: CrossingSetup::default(),
        }
    }
}

impl ScanConfig {
    pub fn rabi_grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.include_zero {
            out.push(0.0);
        }
        let n = self.rabi_points;
        if n == 1 {
            out.push(self.rabi_min_khz);
        } else if n > 1 {
            let (lo, hi) = (self.rabi_min_khz.ln(), self.rabi_max_khz.ln());
            out.extend((0..n).map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rabi_points > 0 && !(self.rabi_min_khz > 0.0 && self.rabi_max_khz >= self.rabi_min_khz) {
            return Err(HarnessError::config("scan needs 0 < rabi_min_khz <= rabi_max_khz"));
        }
        if self.rates_mhz_per_ms.is_empty() || self.rates_mhz_per_ms.iter().any(|r| *r == 0.0 || !r.is_finite()) {
            return Err(HarnessError::config("scan rates must be non-empty and non-zero"));
        }
        if !(self.crossing.half_window_mhz > 0.0) {
            return Err(HarnessError::config("scan half_window_mhz must be positive"));
        }
        Ok(())
    }
}

/// Complete run configuration; one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub drive: DriveCouplings,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default = "SweepProfile::closed_loop")]
    pub sweep: SweepProfile,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub pump: PumpPattern,
    #[serde(default)]
    pub controller: Option<ControllerConfig>,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    #[serde(default)]
    pub ode: OdeSettings,
    /// Quoted along the local field.
    #[serde(default = "stretched")]
    pub initial_state: HyperfineState,
    /// Quoted along the local field. Defaults to the ladder state reached
    /// after `controller.target_edges` transitions.
    #[serde(default)]
    pub target_state: Option<HyperfineState>,
    /// Delay between STOP and the drive switching off, ms.
    #[serde(default)]
    pub stop_latency_ms: f64,
    #[serde(default)]
    pub open_loop_stop: Option<OpenLoopStop>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub stern_gerlach: SGConfig,
}

fn default_engine() -> EngineKind {
    EngineKind::Lz
}

fn stretched() -> HyperfineState {
    HyperfineState::ket(2, 2)
}

fn default_trials() -> u32 {
    500
}

impl Default for SimConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.constants.validate().map_err(HarnessError::config)?;
        self.drive.validate().map_err(HarnessError::config)?;
        self.field.validate()?;
        self.sweep.validate().map_err(HarnessError::config)?;
        self.probe.validate().map_err(HarnessError::config)?;
        self.pump.model().map_err(HarnessError::config)?;
        if let Some(c) = &self.controller {
            c.validate().map_err(HarnessError::config)?;
        }
        if !(1e-12..=1e-6).contains(&self.ode.rel_tol) {
            return Err(HarnessError::config("ode.rel_tol must lie in [1e-12, 1e-6]"));
        }
        if !(self.stop_latency_ms >= 0.0 && self.stop_latency_ms.is_finite()) {
            return Err(HarnessError::config("stop_latency_ms must be >= 0"));
        }
        if self.trials < 1 {
            return Err(HarnessError::config("trials must be >= 1"));
        }
        self.scan.validate()?;
        self.stern_gerlach.validate().map_err(HarnessError::config)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_valid() {
        let cfg = SimConfig::from_json("{}").unwrap();
        assert_eq!(cfg.sweep, SweepProfile::closed_loop());
        assert_eq!(cfg.engine, EngineKind::Lz);
        assert_eq!(cfg.trials, 500);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SimConfig::from_json(r#"{"sweeep": {}}"#).is_err());
        assert!(SimConfig::from_json(r#"{"probe": {"gian": 1}}"#).is_err());
    }

    #[test]
    fn field_forms() {
        let c = SimConfig::from_json(r#"{"field": {"fixed": 7.0}}"#).unwrap();
        assert_eq!(c.field, FieldSpec::Fixed(7.0));
        let c = SimConfig::from_json(r#"{"field": {"uniform_abs": {"min": 4.5, "max": 14.5}}}"#).unwrap();
        assert_eq!(c.field, FieldSpec::default());
        assert!(SimConfig::from_json(r#"{"field": {"uniform_abs": {"min": 5, "max": 4}}}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let c = SimConfig {
            controller: Some(ControllerConfig::default()),
            open_loop_stop: Some(OpenLoopStop::DetuningMhz(11.0)),
            ..SimConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn scan_grid() {
        let s = ScanConfig::default();
        let g = s.rabi_grid();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.0);
        assert!((g[7] - 20.0).abs() < 1e-12);
    }
}
