use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use arpfb::controller::{Action, ControllerConfig, EdgeDirection, FeedbackController};
use arpfb::dynamics::{
    lz_probability, EngineState, LzEngine, OdeEngine, PopulationVector, Propagator, PumpPattern,
};
use arpfb::harness::{simulate_trial, FieldSpec, Mode, SimConfig};
use arpfb::probe::{IQSample, ProbeConfig};
use arpfb::zeeman::{DriveCouplings, FieldScenario, HyperfineState, Manifold, SweepProfile};

fn field() -> impl Strategy<Value = f64> {
    (4.5..14.5f64, any::<bool>()).prop_map(|(b, neg)| if neg { -b } else { b })
}

fn state() -> impl Strategy<Value = HyperfineState> {
    (0..8usize).prop_map(|i| HyperfineState::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeeman_shift_is_linear_and_odd(s in state(), b in -20.0..20.0f64, k in -3.0..3.0f64) {
        let m = Manifold::default();
        let at = |x: f64| m.zeeman_shift(s, FieldScenario::new(x).unwrap());
        prop_assert!((at(k * b) - k * at(b)).abs() <= 1e-12 * (1.0 + at(b).abs() * k.abs()));
        prop_assert_eq!(at(-b), -at(b));
    }

    #[test]
    fn transition_detuning_is_odd_in_field(b in 0.1..20.0f64) {
        let m = Manifold::default();
        for t in m.transitions() {
            let up = m.transition_detuning(t, FieldScenario::new(b).unwrap());
            let down = m.transition_detuning(t, FieldScenario::new(-b).unwrap());
            prop_assert_eq!(up, -down);
        }
    }

    #[test]
    fn lz_probability_monotone(a in 0.0..50.0f64, da in 0.0..10.0f64, rate in -2.0..-0.01f64) {
        let p0 = lz_probability(a, rate).unwrap();
        let p1 = lz_probability(a + da, rate).unwrap();
        prop_assert!((0.0..=1.0).contains(&p0));
        prop_assert!(p1 >= p0);
        let slower = lz_probability(a, rate / 2.0).unwrap();
        prop_assert!(slower >= p0);
    }

    #[test]
    fn lz_engine_conserves_probability(b in field(), rabi in 0.0..30.0f64, pulses in 1usize..60) {
        let m = Manifold::with_rabi(rabi);
        let sweep = SweepProfile::closed_loop();
        let f = FieldScenario::new(b).unwrap();
        let mut e = LzEngine::new(&m, &sweep, f).unwrap();
        let pump = PumpPattern::calibrated().model().unwrap();
        let mut st = e.initial_state(f.align(HyperfineState::ket(2, 2)), 0.0);
        for k in 1..=pulses {
            e.advance(&mut st, k as f64 * 2.5).unwrap();
            pump.apply_probe_pulse(&mut st);
            let p = st.populations();
            prop_assert!((p.total() - 1.0).abs() <= 1e-12);
            prop_assert!(p.p.iter().all(|x| *x >= -1e-15));
        }
    }

    #[test]
    fn controller_alternates_and_is_deterministic(xs in prop::collection::vec(0.0..2.0f64, 2..80)) {
        let cfg = ControllerConfig::with_target(u32::MAX);
        let run = || {
            let mut c = FeedbackController::init(cfg, &IQSample { t_ms: 0.0, i: xs[0], q: 0.0 }).unwrap();
            for (k, x) in xs.iter().enumerate().skip(1) {
                c.process(&IQSample { t_ms: k as f64, i: 0.0, q: *x }).unwrap();
            }
            c
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        prop_assert!(a.ref_max >= a.ref_min);
        for (k, e) in a.log.iter().enumerate() {
            let want = if k % 2 == 0 { EdgeDirection::Falling } else { EdgeDirection::Rising };
            prop_assert_eq!(e.direction, want);
            prop_assert!(e.sample_index < xs.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Near-adiabatic drive and quiet probe: the controller stops after the
    /// requested number of edges with the target state in the majority.
    #[test]
    fn stop_is_correct_with_efficient_crossings(
        b in field(),
        rabi in 8.4..30.0f64,
        target in 1u32..=6,
        seed in any::<u64>(),
    ) {
        let probe = ProbeConfig { noise_sigma: 0.01, ..ProbeConfig::default() };
        let cfg = SimConfig {
            field: FieldSpec::Fixed(b),
            drive: DriveCouplings::uniform(rabi),
            probe,
            controller: Some(ControllerConfig::with_target(target)),
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = FieldScenario::new(b).unwrap();
        let out = simulate_trial(&cfg, f, Mode::Feedback(cfg.controller.unwrap()), &mut rng).unwrap();
        prop_assert!(out.stopped);
        prop_assert_eq!(out.edges, target);
        prop_assert_eq!(Some(out.majority()), out.target_state);
    }

    /// Once the drive is off the populations stay put.
    #[test]
    fn drive_off_freezes_lz(b in field(), t_off in 5.0..200.0f64) {
        let m = Manifold::with_rabi(20.0);
        let sweep = SweepProfile::closed_loop();
        let f = FieldScenario::new(b).unwrap();
        let mut e = LzEngine::new(&m, &sweep, f).unwrap();
        let mut st = e.initial_state(f.align(HyperfineState::ket(2, 2)), 0.0);
        e.advance(&mut st, t_off).unwrap();
        st.drive_on = false;
        let before = st.populations();
        e.advance(&mut st, sweep.t_end_ms()).unwrap();
        prop_assert_eq!(before, st.populations());
    }
}

#[test]
fn drive_off_freezes_ode() {
    let m = Manifold::with_rabi(20.0);
    let sweep = SweepProfile::closed_loop();
    let f = FieldScenario::new(7.0).unwrap();
    let mut e = OdeEngine::new(&m, &sweep, f, 1e-8).unwrap();
    let mut st: EngineState = e.initial_state(HyperfineState::ket(2, 2), 0.0);
    e.advance(&mut st, 60.0).unwrap();
    st.drive_on = false;
    let before = st.populations();
    e.advance(&mut st, sweep.t_end_ms()).unwrap();
    let after = st.populations();
    for (a, b) in before.p.iter().zip(after.p) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn coincident_crossings_at_zero_field_stay_finite() {
    let m = Manifold::with_rabi(20.0);
    let sweep = SweepProfile::closed_loop();
    let f = FieldScenario::new(0.0).unwrap();
    let mut e = LzEngine::new(&m, &sweep, f).unwrap();
    let mut st = e.initial_state(HyperfineState::ket(2, 2), 0.0);
    e.advance(&mut st, sweep.t_end_ms()).unwrap();
    let p: PopulationVector = st.populations();
    assert!(p.p.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert!((p.total() - 1.0).abs() < 1e-12);
}

#[test]
fn one_sample_latency() {
    let cfg = ControllerConfig::with_target(1);
    let mut c = FeedbackController::init(cfg, &IQSample { t_ms: 0.0, i: 1.0, q: 0.0 }).unwrap();
    assert_eq!(c.process(&IQSample { t_ms: 1.0, i: 0.9, q: 0.0 }).unwrap(), Action::None);
    assert_eq!(c.process(&IQSample { t_ms: 2.0, i: 0.1, q: 0.0 }).unwrap(), Action::Stop);
    assert!(c.process(&IQSample { t_ms: 3.0, i: 0.1, q: 0.0 }).is_err());
}
