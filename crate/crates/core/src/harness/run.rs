use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, Scenario, ScenarioKind, SimConfig};
use crate::controller::{Action, ControllerConfig, EdgeEvent, FeedbackController};
use crate::dynamics::crossing::{isolated_crossing, CrossingOutcome};
use crate::dynamics::{
    adiabaticity, EngineKind, EngineState, LzEngine, OdeEngine, PopulationVector, Propagator,
};
use crate::probe::{pulse_times, synthesize_sample};
use crate::sterngerlach::{bin_populations, SgHistogram};
use crate::zeeman::{FieldScenario, HyperfineState, Manifold};

/// Pulse times within this distance of a stop time count as simultaneous.
const TIME_EPS_MS: f64 = 1e-9;

/// Seed of trial `index` under `master`: a splitmix64 mix of both.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How the drive is switched off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// The controller stops drive and probe.
    Feedback(ControllerConfig),
    /// No feedback; drive and probe stop at `stop_ms` if given. Edges are
    /// still counted offline.
    OpenLoop { stop_ms: Option<f64> },
}

/// One probe pulse with the ground truth just before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t_ms: f64,
    pub delta0_mhz: f64,
    pub i: f64,
    pub q: f64,
    pub a: f64,
    pub p: [f64; 8],
    pub lost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub field_gauss: f64,
    /// Lab-frame labels.
    pub initial_state: HyperfineState,
    pub target_state: Option<HyperfineState>,
    pub trace: Vec<TraceRow>,
    pub controller_log: Vec<EdgeEvent>,
    pub edges: u32,
    /// The active controller raised STOP.
    pub stopped: bool,
    /// Time of the STOP decision or of the open-loop cut.
    pub stop_time_ms: Option<f64>,
    /// Time the drive actually went off.
    pub drive_off_ms: Option<f64>,
    pub final_populations: PopulationVector,
    pub ode_steps: Option<usize>,
}

impl TrialOutcome {
    pub fn majority(&self) -> HyperfineState {
        self.final_populations.majority()
    }

    pub fn purity(&self) -> Option<f64> {
        self.target_state.map(|s| self.final_populations.get(s))
    }
}

enum Engine {
    Lz(LzEngine),
    Ode(Box<OdeEngine>),
}

impl Engine {
    fn advance(&mut self, state: &mut EngineState, t: f64) -> Result<(), HarnessError> {
        let r = match self {
            Engine::Lz(e) => e.advance(state, t),
            Engine::Ode(e) => e.advance(state, t),
        };
        r.map_err(HarnessError::simulation)
    }

    fn initial_state(&self, s: HyperfineState, t: f64) -> EngineState {
        match self {
            Engine::Lz(e) => e.initial_state(s, t),
            Engine::Ode(e) => e.initial_state(s, t),
        }
    }

    fn steps(&self) -> Option<usize> {
        match self {
            Engine::Lz(_) => None,
            Engine::Ode(e) => Some(e.stats.accepted + e.stats.rejected),
        }
    }
}

/// Lab-frame target: the configured one, or the ladder state after
/// `edges` transitions.
fn resolve_target(
    cfg: &SimConfig,
    manifold: &Manifold,
    field: FieldScenario,
    initial: HyperfineState,
    edges: Option<u32>,
) -> Option<HyperfineState> {
    if let Some(s) = cfg.target_state {
        return Some(field.align(s));
    }
    let n = edges? as usize;
    if n == 0 {
        return Some(initial);
    }
    manifold
        .ladder_path(initial, &cfg.sweep, field)
        .get(n - 1)
        .map(|step| step.state)
}

/// Run one sweep at `field`, drawing probe noise from `rng`.
pub fn simulate_trial(
    cfg: &SimConfig,
    field: FieldScenario,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome, HarnessError> {
    let manifold = Manifold::new(cfg.constants, &cfg.drive);
    let sweep = cfg.sweep;
    let mut engine = match cfg.engine {
        EngineKind::Lz => Engine::Lz(LzEngine::new(&manifold, &sweep, field).map_err(HarnessError::simulation)?),
        EngineKind::Ode => Engine::Ode(Box::new(
            OdeEngine::new(&manifold, &sweep, field, cfg.ode.rel_tol)
                .map_err(HarnessError::simulation)?
                .with_method(cfg.ode.method),
        )),
    };
    let pump = cfg.pump.model().map_err(HarnessError::config)?;
    let initial = field.align(cfg.initial_state);
    let (ctrl_cfg, feedback) = match mode {
        Mode::Feedback(c) => (c, true),
        Mode::OpenLoop { .. } => (
            ControllerConfig {
                target_edges: u32::MAX,
                ..cfg.controller.unwrap_or_default()
            },
            false,
        ),
    };
    let target_edges = match mode {
        Mode::Feedback(c) => Some(c.target_edges),
        Mode::OpenLoop { .. } => cfg.controller.map(|c| c.target_edges),
    };
    let target = resolve_target(cfg, &manifold, field, initial, target_edges);

    let t0 = sweep.t_start_ms;
    let t_end = sweep.t_end_ms();
    let mut state = engine.initial_state(initial, t0);
    let mut controller: Option<FeedbackController> = None;
    let mut trace = Vec::new();
    let mut stopped = false;
    let (mut stop_time, mut drive_off) = match mode {
        Mode::OpenLoop { stop_ms: Some(t) } => (Some(t), Some(t)),
        _ => (None, None),
    };

    for tp in pulse_times(&cfg.probe, t0, t_end) {
        if drive_off.is_some_and(|t| tp > t + TIME_EPS_MS) {
            break;
        }
        engine.advance(&mut state, tp)?;
        let pop = state.populations();
        let s = synthesize_sample(tp, pop.f2_fraction(), pop.lost, &cfg.probe, rng);
        trace.push(TraceRow {
            t_ms: tp,
            delta0_mhz: sweep.detuning_at(tp),
            i: s.i,
            q: s.q,
            a: s.magnitude(),
            p: pop.p,
            lost: pop.lost,
        });
        pump.apply_probe_pulse(&mut state);
        match controller.as_mut() {
            None => controller = Some(FeedbackController::init(ctrl_cfg, &s).map_err(HarnessError::config)?),
            Some(c) => {
                let action = c.process(&s).map_err(HarnessError::simulation)?;
                if action == Action::Stop && feedback {
                    stopped = true;
                    stop_time = Some(tp);
                    drive_off = Some(tp + cfg.stop_latency_ms);
                    break;
                }
            }
        }
    }

    if let Some(t) = drive_off {
        let t = t.clamp(state.t_ms, t_end.max(state.t_ms));
        engine.advance(&mut state, t)?;
        state.drive_on = false;
    }
    if t_end > state.t_ms {
        engine.advance(&mut state, t_end)?;
    }

    let (log, edges) = controller.map_or((Vec::new(), 0), |c| (c.log, c.edge_count));
    Ok(TrialOutcome {
        field_gauss: field.bz_gauss,
        initial_state: initial,
        target_state: target,
        trace,
        controller_log: log,
        edges,
        stopped,
        stop_time_ms: stop_time,
        drive_off_ms: drive_off,
        final_populations: state.populations(),
        ode_steps: engine.steps(),
    })
}

/// Everything a single-trajectory run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub trial_seed: u64,
    pub config: SimConfig,
    pub engine: EngineKind,
    pub field_gauss: f64,
    pub initial_state: HyperfineState,
    pub target_state: Option<HyperfineState>,
    pub sweep_start_ms: f64,
    pub sweep_end_ms: f64,
    pub pulses: usize,
    pub edges: u32,
    pub stopped: bool,
    pub stop_time_ms: Option<f64>,
    pub drive_off_ms: Option<f64>,
    pub final_populations: PopulationVector,
    pub final_majority: HyperfineState,
    pub target_purity: Option<f64>,
    pub ode_steps: Option<usize>,
    pub histogram: Option<SgHistogram>,
    pub controller_log: Vec<EdgeEvent>,
    pub trace: Vec<TraceRow>,
}

impl RunRecord {
    fn new(sc: &Scenario, trial_seed: u64, out: TrialOutcome) -> Self {
        RunRecord {
            scenario: sc.kind,
            seed: sc.seed,
            trial_seed,
            config: sc.config.clone(),
            engine: sc.config.engine,
            field_gauss: out.field_gauss,
            initial_state: out.initial_state,
            target_state: out.target_state,
            sweep_start_ms: sc.config.sweep.t_start_ms,
            sweep_end_ms: sc.config.sweep.t_end_ms(),
            pulses: out.trace.len(),
            edges: out.edges,
            stopped: out.stopped,
            stop_time_ms: out.stop_time_ms,
            drive_off_ms: out.drive_off_ms,
            final_majority: out.majority(),
            target_purity: out.purity(),
            final_populations: out.final_populations,
            ode_steps: out.ode_steps,
            histogram: None,
            controller_log: out.controller_log,
            trace: out.trace,
        }
    }
}

/// Order statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let q = |p: f64| v[((n - 1) as f64 * p).round() as usize];
        Some(Stats {
            n,
            mean,
            std: var.sqrt(),
            min: v[0],
            p05: q(0.05),
            median: q(0.5),
            p95: q(0.95),
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub field_gauss: f64,
    pub edges: u32,
    pub stopped: bool,
    pub stop_time_ms: Option<f64>,
    pub majority: HyperfineState,
    pub target: Option<HyperfineState>,
    pub purity: Option<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub seed: u64,
    pub trials: usize,
    pub target_edges: u32,
    pub successes: usize,
    pub success_rate: f64,
    pub purity: Option<Stats>,
    pub stop_time_ms: Option<Stats>,
    pub field_abs_gauss: Option<Stats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub rabi_khz: f64,
    pub rate_mhz_per_ms: f64,
    pub gamma: f64,
    pub p_lz: f64,
    pub p_ode: Option<f64>,
    pub abs_diff: Option<f64>,
    pub norm_drift: Option<f64>,
    pub ode_steps: Option<usize>,
}

/// Result of any scenario, ready for export.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Single(Box<RunRecord>),
    MonteCarlo {
        summary: MonteCarloSummary,
        trials: Vec<TrialSummary>,
        /// Full record of trial 0.
        example: Box<RunRecord>,
    },
    Scan {
        seed: u64,
        config: Box<SimConfig>,
        rows: Vec<ScanRow>,
    },
}

fn feedback_config(cfg: &SimConfig) -> Result<ControllerConfig, HarnessError> {
    cfg.controller
        .ok_or_else(|| HarnessError::config("this scenario requires a controller section"))
}

fn single(sc: &Scenario, mode: Mode) -> Result<RunRecord, HarnessError> {
    let seed = trial_seed(sc.seed, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = sc.config.field.draw(&mut rng);
    let out = simulate_trial(&sc.config, field, mode, &mut rng)?;
    Ok(RunRecord::new(sc, seed, out))
}

/// Sweep with feedback; the drive stops once the controller has counted
/// `target_edges` edges.
pub fn run_closed_loop(sc: &Scenario) -> Result<RunRecord, HarnessError> {
    single(sc, Mode::Feedback(feedback_config(&sc.config)?))
}

/// Sweep without feedback. `OpenLoopStop` cuts drive and probe at the
/// configured point; `Staircase` runs the whole band.
pub fn run_open_loop(sc: &Scenario) -> Result<RunRecord, HarnessError> {
    let stop_ms = match sc.kind {
        ScenarioKind::OpenLoopStop => Some(
            sc.config
                .open_loop_stop
                .ok_or_else(|| HarnessError::config("open_loop_stop scenario needs an open_loop_stop entry"))?
                .time_ms(&sc.config.sweep),
        ),
        _ => None,
    };
    single(sc, Mode::OpenLoop { stop_ms })
}

/// Independent closed-loop trials with per-trial fields and noise streams.
pub fn run_monte_carlo(sc: &Scenario) -> Result<RunOutput, HarnessError> {
    let ctrl = feedback_config(&sc.config)?;
    let n = sc.config.trials as u64;
    let outcomes: Vec<(u64, TrialOutcome)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let seed = trial_seed(sc.seed, k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let field = sc.config.field.draw(&mut rng);
            simulate_trial(&sc.config, field, Mode::Feedback(ctrl), &mut rng).map(|o| (seed, o))
        })
        .collect::<Result<_, _>>()?;

    let trials: Vec<TrialSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(k, (seed, o))| TrialSummary {
            trial: k as u64,
            seed: *seed,
            field_gauss: o.field_gauss,
            edges: o.edges,
            stopped: o.stopped,
            stop_time_ms: o.stop_time_ms,
            majority: o.majority(),
            target: o.target_state,
            purity: o.purity(),
            success: o.stopped && o.edges == ctrl.target_edges && Some(o.majority()) == o.target_state,
        })
        .collect();
    let successes = trials.iter().filter(|t| t.success).count();
    let purity: Vec<f64> = trials.iter().filter_map(|t| t.purity).collect();
    let stops: Vec<f64> = trials.iter().filter_map(|t| t.stop_time_ms).collect();
    let fields: Vec<f64> = trials.iter().map(|t| t.field_gauss.abs()).collect();
    let summary = MonteCarloSummary {
        seed: sc.seed,
        trials: trials.len(),
        target_edges: ctrl.target_edges,
        successes,
        success_rate: successes as f64 / trials.len() as f64,
        purity: Stats::of(&purity),
        stop_time_ms: Stats::of(&stops),
        field_abs_gauss: Stats::of(&fields),
    };
    let (seed0, first) = outcomes.into_iter().next().expect("trials >= 1");
    Ok(RunOutput::MonteCarlo {
        summary,
        trials,
        example: Box::new(RunRecord::new(sc, seed0, first)),
    })
}

/// Single-crossing transfer over a grid of Rabi frequencies and rates,
/// from the closed form and, optionally, the coherent engine.
pub fn run_adiabaticity_scan(sc: &Scenario) -> Result<Vec<ScanRow>, HarnessError> {
    let scan = &sc.config.scan;
    let mut setup = scan.crossing;
    setup.method = sc.config.ode.method;
    let grid: Vec<(f64, f64)> = scan
        .rates_mhz_per_ms
        .iter()
        .flat_map(|&r| scan.rabi_grid().into_iter().map(move |o| (o, r)))
        .collect();
    grid.into_par_iter()
        .map(|(rabi, rate)| {
            let lz = isolated_crossing(rabi, rate, &setup, EngineKind::Lz).map_err(HarnessError::simulation)?;
            let ode: Option<CrossingOutcome> = if scan.with_ode {
                Some(isolated_crossing(rabi, rate, &setup, EngineKind::Ode).map_err(HarnessError::simulation)?)
            } else {
                None
            };
            Ok(ScanRow {
                rabi_khz: rabi,
                rate_mhz_per_ms: rate,
                gamma: adiabaticity(rabi, rate),
                p_lz: lz.transfer,
                p_ode: ode.map(|o| o.transfer),
                abs_diff: ode.map(|o| (o.transfer - lz.transfer).abs()),
                norm_drift: ode.map(|o| o.norm_drift),
                ode_steps: ode.map(|o| o.steps),
            })
        })
        .collect()
}

/// Prepare (closed loop if a controller is configured, else open loop) and
/// image after time of flight.
pub fn run_stern_gerlach(sc: &Scenario) -> Result<RunRecord, HarnessError> {
    let mut rec = match sc.config.controller {
        Some(c) => single(sc, Mode::Feedback(c))?,
        None => single(
            sc,
            Mode::OpenLoop {
                stop_ms: sc.config.open_loop_stop.map(|s| s.time_ms(&sc.config.sweep)),
            },
        )?,
    };
    rec.histogram = Some(bin_populations(
        &rec.final_populations,
        &sc.config.stern_gerlach,
        &sc.config.constants,
    ));
    Ok(rec)
}

pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, HarnessError> {
    sc.config.validate()?;
    Ok(match sc.kind {
        ScenarioKind::Staircase | ScenarioKind::OpenLoopStop => RunOutput::Single(Box::new(run_open_loop(sc)?)),
        ScenarioKind::ClosedLoop => RunOutput::Single(Box::new(run_closed_loop(sc)?)),
        ScenarioKind::MonteCarlo => run_monte_carlo(sc)?,
        ScenarioKind::AdiabaticityScan => RunOutput::Scan {
            seed: sc.seed,
            config: Box::new(sc.config.clone()),
            rows: run_adiabaticity_scan(sc)?,
        },
        ScenarioKind::SternGerlach => RunOutput::Single(Box::new(run_stern_gerlach(sc)?)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::FieldSpec;

    #[test]
    fn trial_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|k| trial_seed(7, k)).collect();
        let mut d = s.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn stats_of_known_sample() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (3.0, 3.0, 1.0, 5.0));
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn target_follows_ladder() {
        let cfg = SimConfig {
            field: FieldSpec::Fixed(-7.0),
            ..SimConfig::default()
        };
        let field = FieldScenario::new(-7.0).unwrap();
        let m = Manifold::default();
        let initial = field.align(cfg.initial_state);
        assert_eq!(initial, HyperfineState::ket(2, -2));
        assert_eq!(resolve_target(&cfg, &m, field, initial, Some(2)), Some(HyperfineState::ket(2, -1)));
    }
}
