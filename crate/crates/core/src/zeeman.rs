//! Level structure of the ⁸⁷Rb 5²S₁/₂ ground manifold in a static field.
//!
//! All frequencies are cyclic and expressed as detunings from the zero-field
//! hyperfine splitting `f0`, in MHz. The Zeeman model is linear in the field.
//!
//! State labels (`m_F`) are taken along the lab `+z` axis, so a negative `bz`
//! reverses the energy ordering of the ladder. [`FieldScenario::align`] maps a
//! label quoted along the local field direction onto the lab label.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ZeemanError {
    #[error("no ground state |F={f}, m_F={mf}>")]
    InvalidState { f: i32, mf: i32 },
    #[error("|{upper}> <-> |{lower}> is not an allowed F=2 <-> F=1 transition")]
    InvalidTransition {
        upper: HyperfineState,
        lower: HyperfineState,
    },
    #[error("invalid physical constants: {0}")]
    InvalidConstants(&'static str),
    #[error("invalid sweep: {0}")]
    InvalidSweep(&'static str),
    #[error("invalid field: {0}")]
    InvalidField(&'static str),
}

/// Hyperfine and magnetic constants of the ground manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// Zero-field hyperfine splitting, MHz.
    pub f0_mhz: f64,
    /// Bohr magneton over Planck's constant, MHz/G.
    pub mu_b_over_h: f64,
    /// Landé factor of the F=2 level.
    pub g_f2: f64,
    /// Landé factor of the F=1 level.
    pub g_f1: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            f0_mhz: 6834.68261,
            mu_b_over_h: 1.3996245,
            g_f2: 0.5,
            g_f1: -0.5,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ZeemanError> {
        if !(self.f0_mhz.is_finite() && self.f0_mhz > 0.0) {
            return Err(ZeemanError::InvalidConstants("f0_mhz must be positive"));
        }
        if !(self.mu_b_over_h.is_finite() && self.mu_b_over_h > 0.0) {
            return Err(ZeemanError::InvalidConstants("mu_b_over_h must be positive"));
        }
        if !(self.g_f2.is_finite() && self.g_f1.is_finite()) {
            return Err(ZeemanError::InvalidConstants("g-factors must be finite"));
        }
        Ok(())
    }

    pub fn g_factor(&self, f: u8) -> f64 {
        if f == 2 {
            self.g_f2
        } else {
            self.g_f1
        }
    }
}

/// One `|F, m_F>` sub-level of the eight-state ground manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct HyperfineState {
    f: u8,
    mf: i8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    f: i32,
    mf: i32,
}

impl TryFrom<RawState> for HyperfineState {
    type Error = ZeemanError;

    fn try_from(raw: RawState) -> Result<Self, Self::Error> {
        HyperfineState::new(raw.f, raw.mf)
    }
}

impl From<HyperfineState> for RawState {
    fn from(s: HyperfineState) -> Self {
        RawState {
            f: s.f as i32,
            mf: s.mf as i32,
        }
    }
}

impl HyperfineState {
    /// Canonical ordering used for population vectors and trace columns.
    pub const ALL: [HyperfineState; 8] = [
        HyperfineState { f: 2, mf: 2 },
        HyperfineState { f: 2, mf: 1 },
        HyperfineState { f: 2, mf: 0 },
        HyperfineState { f: 2, mf: -1 },
        HyperfineState { f: 2, mf: -2 },
        HyperfineState { f: 1, mf: 1 },
        HyperfineState { f: 1, mf: 0 },
        HyperfineState { f: 1, mf: -1 },
    ];

    pub fn new(f: i32, mf: i32) -> Result<Self, ZeemanError> {
        if (f == 1 || f == 2) && mf.abs() <= f {
            Ok(HyperfineState {
                f: f as u8,
                mf: mf as i8,
            })
        } else {
            Err(ZeemanError::InvalidState { f, mf })
        }
    }

    /// Shorthand for states known to be valid at the call site.
    ///
    /// Panics on an invalid label.
    pub const fn ket(f: u8, mf: i8) -> Self {
        assert!((f == 1 || f == 2) && mf.unsigned_abs() <= f, "invalid hyperfine state");
        HyperfineState { f, mf }
    }

    pub fn f(&self) -> u8 {
        self.f
    }

    pub fn mf(&self) -> i8 {
        self.mf
    }

    pub fn is_upper(&self) -> bool {
        self.f == 2
    }

    /// Position in [`HyperfineState::ALL`].
    pub fn index(&self) -> usize {
        if self.f == 2 {
            (2 - self.mf) as usize
        } else {
            (6 - self.mf) as usize
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The same `F` with `m_F` reversed.
    pub fn mirrored(&self) -> Self {
        HyperfineState {
            f: self.f,
            mf: -self.mf,
        }
    }

    /// Trace column name, e.g. `p_2_-1`.
    pub fn column_name(&self) -> String {
        format!("p_{}_{}", self.f, self.mf)
    }
}

impl fmt::Display for HyperfineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.f, self.mf)
    }
}

/// Static bias field along the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldScenario {
    /// Signed field, gauss.
    pub bz_gauss: f64,
}

impl FieldScenario {
    pub fn new(bz_gauss: f64) -> Result<Self, ZeemanError> {
        if bz_gauss.is_finite() {
            Ok(FieldScenario { bz_gauss })
        } else {
            Err(ZeemanError::InvalidField("bz must be finite"))
        }
    }

    /// Lab label of a state quoted along the local field direction.
    ///
    /// The map is an involution, so it also converts lab labels back.
    pub fn align(&self, state: HyperfineState) -> HyperfineState {
        if self.bz_gauss < 0.0 {
            state.mirrored()
        } else {
            state
        }
    }
}

/// Default uniform Rabi frequency, kHz.
pub const DEFAULT_RABI_KHZ: f64 = 5.0;

/// An allowed `F=2 <-> F=1` magnetic-dipole coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub upper: HyperfineState,
    pub lower: HyperfineState,
    /// `m_upper + m_lower`; the resonance sits at `shift_index * 0.7 MHz/G * B`
    /// under the default g-factors.
    pub shift_index: i8,
    /// `m_upper - m_lower`.
    pub delta_m: i8,
    /// Rabi frequency Ω₀/2π, kHz.
    pub rabi_khz: f64,
}

impl Transition {
    pub fn new(
        upper: HyperfineState,
        lower: HyperfineState,
        rabi_khz: f64,
    ) -> Result<Self, ZeemanError> {
        let delta_m = upper.mf - lower.mf;
        if upper.f != 2 || lower.f != 1 || delta_m.abs() > 1 {
            return Err(ZeemanError::InvalidTransition { upper, lower });
        }
        Ok(Transition {
            upper,
            lower,
            shift_index: upper.mf + lower.mf,
            delta_m,
            rabi_khz,
        })
    }

    pub fn involves(&self, s: HyperfineState) -> bool {
        self.upper == s || self.lower == s
    }

    /// The other end of the transition, if `s` is one of its ends.
    pub fn partner(&self, s: HyperfineState) -> Option<HyperfineState> {
        if s == self.upper {
            Some(self.lower)
        } else if s == self.lower {
            Some(self.upper)
        } else {
            None
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<->{}", self.upper, self.lower)
    }
}

/// The nine allowed transitions at the default Rabi frequency, sorted by
/// `shift_index` descending with ties broken by `m_upper` descending.
pub fn allowed_transitions() -> Vec<Transition> {
    let mut out = Vec::with_capacity(9);
    for m2 in (-2i8..=2).rev() {
        for m1 in (-1i8..=1).rev() {
            if (m2 - m1).abs() <= 1 {
                out.push(Transition {
                    upper: HyperfineState::ket(2, m2),
                    lower: HyperfineState::ket(1, m1),
                    shift_index: m2 + m1,
                    delta_m: m2 - m1,
                    rabi_khz: DEFAULT_RABI_KHZ,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.shift_index
            .cmp(&a.shift_index)
            .then(b.upper.mf.cmp(&a.upper.mf))
    });
    out
}

/// Per-transition Rabi frequency override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiOverride {
    pub upper: HyperfineState,
    pub lower: HyperfineState,
    pub rabi_khz: f64,
}

/// Microwave coupling strengths: a uniform Rabi frequency plus overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveCouplings {
    pub rabi_khz: f64,
    pub overrides: Vec<RabiOverride>,
}

impl Default for DriveCouplings {
    fn default() -> Self {
        DriveCouplings {
            rabi_khz: DEFAULT_RABI_KHZ,
            overrides: Vec::new(),
        }
    }
}

impl DriveCouplings {
    pub fn uniform(rabi_khz: f64) -> Self {
        DriveCouplings {
            rabi_khz,
            overrides: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ZeemanError> {
        let ok = |r: f64| r >= 0.0 && !r.is_nan();
        if !ok(self.rabi_khz) {
            return Err(ZeemanError::InvalidConstants("rabi_khz must be >= 0"));
        }
        for o in &self.overrides {
            Transition::new(o.upper, o.lower, o.rabi_khz)?;
            if !ok(o.rabi_khz) {
                return Err(ZeemanError::InvalidConstants("rabi_khz must be >= 0"));
            }
        }
        Ok(())
    }

    /// Allowed transitions in canonical order carrying these couplings.
    pub fn transitions(&self) -> Vec<Transition> {
        allowed_transitions()
            .into_iter()
            .map(|mut t| {
                t.rabi_khz = self
                    .overrides
                    .iter()
                    .rev()
                    .find(|o| o.upper == t.upper && o.lower == t.lower)
                    .map_or(self.rabi_khz, |o| o.rabi_khz);
                t
            })
            .collect()
    }
}

/// A linear chirp of the drive detuning.
///
/// The sweep starts at the band edge opposite its direction of travel: a
/// negative rate starts at `center + span/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepProfile {
    /// Band center, MHz from f0.
    pub center_mhz: f64,
    /// Full band width, MHz.
    pub span_mhz: f64,
    /// Signed chirp rate, MHz/ms.
    pub rate_mhz_per_ms: f64,
    /// Sweep start time, ms.
    #[serde(default)]
    pub t_start_ms: f64,
}

impl Default for SweepProfile {
    fn default() -> Self {
        Self::closed_loop()
    }
}

impl SweepProfile {
    pub fn new(
        center_mhz: f64,
        span_mhz: f64,
        rate_mhz_per_ms: f64,
        t_start_ms: f64,
    ) -> Result<Self, ZeemanError> {
        let s = SweepProfile {
            center_mhz,
            span_mhz,
            rate_mhz_per_ms,
            t_start_ms,
        };
        s.validate()?;
        Ok(s)
    }

    /// 75 MHz around f0 at -0.3 MHz/ms.
    pub fn closed_loop() -> Self {
        SweepProfile {
            center_mhz: 0.0,
            span_mhz: 75.0,
            rate_mhz_per_ms: -0.3,
            t_start_ms: 0.0,
        }
    }

    /// +21 MHz down to -22 MHz in 200 ms.
    pub fn staircase() -> Self {
        SweepProfile {
            center_mhz: -0.5,
            span_mhz: 43.0,
            rate_mhz_per_ms: -43.0 / 200.0,
            t_start_ms: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ZeemanError> {
        if !(self.span_mhz.is_finite() && self.span_mhz > 0.0) {
            return Err(ZeemanError::InvalidSweep("span must be positive"));
        }
        if !(self.rate_mhz_per_ms.is_finite() && self.rate_mhz_per_ms != 0.0) {
            return Err(ZeemanError::InvalidSweep("rate must be finite and non-zero"));
        }
        if !(self.center_mhz.is_finite() && self.t_start_ms.is_finite()) {
            return Err(ZeemanError::InvalidSweep("center and start time must be finite"));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> f64 {
        self.span_mhz / self.rate_mhz_per_ms.abs()
    }

    pub fn t_end_ms(&self) -> f64 {
        self.t_start_ms + self.duration_ms()
    }

    pub fn start_detuning_mhz(&self) -> f64 {
        self.center_mhz - self.rate_mhz_per_ms.signum() * self.span_mhz / 2.0
    }

    pub fn end_detuning_mhz(&self) -> f64 {
        self.center_mhz + self.rate_mhz_per_ms.signum() * self.span_mhz / 2.0
    }

    /// Instantaneous drive detuning Δ₀(t), MHz. Linear outside the window too.
    pub fn detuning_at(&self, t_ms: f64) -> f64 {
        self.start_detuning_mhz() + self.rate_mhz_per_ms * (t_ms - self.t_start_ms)
    }

    /// ∫ Δ₀ dt from `t0` to `t1`, MHz·ms.
    pub fn detuning_integral(&self, t0_ms: f64, t1_ms: f64) -> f64 {
        let dt = t1_ms - t0_ms;
        self.detuning_at(t0_ms) * dt + 0.5 * self.rate_mhz_per_ms * dt * dt
    }

    pub fn time_at_detuning(&self, detuning_mhz: f64) -> f64 {
        self.t_start_ms + (detuning_mhz - self.start_detuning_mhz()) / self.rate_mhz_per_ms
    }

    pub fn covers(&self, detuning_mhz: f64) -> bool {
        let half = self.span_mhz / 2.0;
        detuning_mhz >= self.center_mhz - half && detuning_mhz <= self.center_mhz + half
    }
}

/// A scheduled resonance of the drive with one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time_ms: f64,
    pub detuning_mhz: f64,
    pub transition: Transition,
}

/// One step of the idealized adiabatic ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub transition: Transition,
    pub state: HyperfineState,
    pub time_ms: f64,
    pub detuning_mhz: f64,
}

/// Constants plus the coupled transitions of the driven manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    pub constants: PhysicalConstants,
    transitions: Vec<Transition>,
}

impl Default for Manifold {
    fn default() -> Self {
        Manifold::new(PhysicalConstants::default(), &DriveCouplings::default())
    }
}

impl Manifold {
    pub fn new(constants: PhysicalConstants, couplings: &DriveCouplings) -> Self {
        Manifold {
            constants,
            transitions: couplings.transitions(),
        }
    }

    pub fn with_rabi(rabi_khz: f64) -> Self {
        Manifold::new(PhysicalConstants::default(), &DriveCouplings::uniform(rabi_khz))
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Linear Zeeman shift `g_F m_F μ_B B / h`, MHz.
    pub fn zeeman_shift(&self, s: HyperfineState, b: FieldScenario) -> f64 {
        self.constants.g_factor(s.f) * s.mf as f64 * self.constants.mu_b_over_h * b.bz_gauss
    }

    /// Resonance of `t` as a detuning from f0, MHz.
    pub fn transition_detuning(&self, t: &Transition, b: FieldScenario) -> f64 {
        self.zeeman_shift(t.upper, b) - self.zeeman_shift(t.lower, b)
    }

    /// Resonances inside the swept band, in time order. Coincident crossings
    /// keep canonical transition order.
    pub fn crossing_schedule(&self, sweep: &SweepProfile, b: FieldScenario) -> Vec<Crossing> {
        let mut out: Vec<Crossing> = self
            .transitions
            .iter()
            .filter_map(|t| {
                let d = self.transition_detuning(t, b);
                sweep.covers(d).then(|| Crossing {
                    time_ms: sweep.time_at_detuning(d),
                    detuning_mhz: d,
                    transition: *t,
                })
            })
            .collect();
        out.sort_by(|a, b| a.time_ms.total_cmp(&b.time_ms));
        out
    }

    /// Fully adiabatic path from `initial`: each crossing that touches the
    /// occupied state moves the occupation to its partner.
    pub fn ladder_path(
        &self,
        initial: HyperfineState,
        sweep: &SweepProfile,
        b: FieldScenario,
    ) -> Vec<PathStep> {
        let mut current = initial;
        let mut path = Vec::new();
        for c in self.crossing_schedule(sweep, b) {
            if let Some(next) = c.transition.partner(current) {
                current = next;
                path.push(PathStep {
                    transition: c.transition,
                    state: next,
                    time_ms: c.time_ms,
                    detuning_mhz: c.detuning_mhz,
                });
            }
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(b: f64) -> FieldScenario {
        FieldScenario::new(b).unwrap()
    }

    #[test]
    fn eight_states_round_trip_index() {
        for (i, s) in HyperfineState::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(HyperfineState::from_index(i), Some(*s));
        }
        assert!(HyperfineState::new(1, 2).is_err());
        assert!(HyperfineState::new(3, 0).is_err());
        assert!(HyperfineState::new(2, -3).is_err());
    }

    #[test]
    fn state_serde_rejects_invalid() {
        let s: HyperfineState = serde_json::from_str(r#"{"f":2,"mf":-1}"#).unwrap();
        assert_eq!(s, HyperfineState::ket(2, -1));
        assert!(serde_json::from_str::<HyperfineState>(r#"{"f":1,"mf":2}"#).is_err());
    }

    #[test]
    fn zeeman_shift_examples() {
        let m = Manifold::default();
        assert_eq!(m.zeeman_shift(HyperfineState::ket(2, 0), field(7.3)), 0.0);
        assert_relative_eq!(
            m.zeeman_shift(HyperfineState::ket(2, 2), field(10.0)),
            13.996245,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            m.zeeman_shift(HyperfineState::ket(1, 1), field(10.0)),
            -6.9981225,
            epsilon = 1e-12
        );
    }

    #[test]
    fn transition_detuning_examples() {
        let m = Manifold::default();
        let ts = allowed_transitions();
        let clock = ts
            .iter()
            .find(|t| t.upper.mf() == 0 && t.lower.mf() == 0)
            .unwrap();
        assert_eq!(m.transition_detuning(clock, field(12.0)), 0.0);
        assert_relative_eq!(
            m.transition_detuning(&ts[0], field(4.7)),
            3.0 * 0.69981225 * 4.7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            m.transition_detuning(&ts[0], field(10.0)),
            20.9943675,
            max_relative = 1e-12
        );
    }

    #[test]
    fn allowed_transition_ordering() {
        let ts = allowed_transitions();
        assert_eq!(ts.len(), 9);
        assert_eq!(ts[0].upper, HyperfineState::ket(2, 2));
        assert_eq!(ts[0].lower, HyperfineState::ket(1, 1));
        assert_eq!(ts[0].shift_index, 3);
        let plus_one: Vec<_> = ts.iter().filter(|t| t.shift_index == 1).collect();
        assert_eq!(plus_one.len(), 2);
        assert_eq!(plus_one[0].upper, HyperfineState::ket(2, 1));
        assert_eq!(plus_one[0].lower, HyperfineState::ket(1, 0));
        assert_eq!(plus_one[1].upper, HyperfineState::ket(2, 0));
        assert_eq!(plus_one[1].lower, HyperfineState::ket(1, 1));
        assert!(ts.windows(2).all(|w| w[0].shift_index >= w[1].shift_index));
        assert!(ts.iter().all(|t| t.delta_m.abs() <= 1 && t.shift_index.abs() <= 3));
    }

    #[test]
    fn overrides_replace_single_rabi() {
        let c = DriveCouplings {
            rabi_khz: 4.0,
            overrides: vec![RabiOverride {
                upper: HyperfineState::ket(2, 1),
                lower: HyperfineState::ket(1, 1),
                rabi_khz: 9.0,
            }],
        };
        let ts = c.transitions();
        assert_eq!(ts.iter().filter(|t| t.rabi_khz == 9.0).count(), 1);
        assert_eq!(ts.iter().filter(|t| t.rabi_khz == 4.0).count(), 8);
        let bad = DriveCouplings {
            rabi_khz: 4.0,
            overrides: vec![RabiOverride {
                upper: HyperfineState::ket(2, 2),
                lower: HyperfineState::ket(1, -1),
                rabi_khz: 1.0,
            }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn staircase_first_crossing() {
        let m = Manifold::default();
        let sched = m.crossing_schedule(&SweepProfile::staircase(), field(4.7));
        let first = sched[0];
        assert_eq!(first.transition.shift_index, 3);
        assert_relative_eq!(first.detuning_mhz, 9.867352725, max_relative = 1e-9);
        assert_relative_eq!(first.time_ms, (21.0 - 9.867352725) / 0.215, max_relative = 1e-9);
    }

    #[test]
    fn zero_field_crossings_coincide() {
        let m = Manifold::default();
        let sched = m.crossing_schedule(&SweepProfile::staircase(), field(0.0));
        assert_eq!(sched.len(), 9);
        assert!(sched.iter().all(|c| c.detuning_mhz == 0.0));
        // Canonical order survives the stable sort.
        let canon = allowed_transitions();
        for (c, t) in sched.iter().zip(&canon) {
            assert_eq!(c.transition, *t);
        }
    }

    #[test]
    fn sweep_band_misses_everything() {
        let m = Manifold::default();
        let sweep = SweepProfile::new(50.0, 10.0, -0.3, 0.0).unwrap();
        assert!(m.crossing_schedule(&sweep, field(4.7)).is_empty());
        assert!(m
            .ladder_path(HyperfineState::ket(2, 0), &sweep, field(4.7))
            .is_empty());
    }

    #[test]
    fn ladder_from_stretched_state() {
        let m = Manifold::default();
        let path = m.ladder_path(HyperfineState::ket(2, 2), &SweepProfile::staircase(), field(4.7));
        let states: Vec<_> = path.iter().map(|p| p.state).collect();
        assert_eq!(
            states,
            vec![
                HyperfineState::ket(1, 1),
                HyperfineState::ket(2, 1),
                HyperfineState::ket(1, 0),
                HyperfineState::ket(2, 0),
                HyperfineState::ket(1, -1),
                HyperfineState::ket(2, -1),
            ]
        );
    }

    #[test]
    fn negative_field_ladder_uses_aligned_labels() {
        let m = Manifold::default();
        let b = field(-7.0);
        let start = b.align(HyperfineState::ket(2, 2));
        assert_eq!(start, HyperfineState::ket(2, -2));
        let path = m.ladder_path(start, &SweepProfile::closed_loop(), b);
        assert_eq!(path.len(), 6);
        assert_eq!(b.align(path[1].state), HyperfineState::ket(2, 1));
        // The lab-labelled |2,2> only meets its crossing at the very end.
        let lab = m.ladder_path(HyperfineState::ket(2, 2), &SweepProfile::closed_loop(), b);
        assert_eq!(lab.len(), 1);
    }

    #[test]
    fn sweep_geometry() {
        let s = SweepProfile::closed_loop();
        assert_eq!(s.duration_ms(), 250.0);
        assert_eq!(s.start_detuning_mhz(), 37.5);
        assert_eq!(s.detuning_at(250.0), -37.5);
        assert_relative_eq!(s.time_at_detuning(0.0), 125.0);
        assert_relative_eq!(s.detuning_integral(0.0, 250.0), 0.0, epsilon = 1e-9);
        assert!(SweepProfile::new(0.0, 0.0, -0.3, 0.0).is_err());
        assert!(SweepProfile::new(0.0, 10.0, 0.0, 0.0).is_err());
        let up = SweepProfile::new(0.0, 10.0, 2.0, 1.0).unwrap();
        assert_eq!(up.start_detuning_mhz(), -5.0);
        assert_eq!(up.t_end_ms(), 6.0);
    }
}
