use condbayes::diagnostics::{posterior_after, DiseaseModel, TestProfile, TestResult};
use condbayes::sequential::{
    reaches_lower, reaches_upper, run_sequence, simulate_trials, simulate_with, step, Execution, SequentialError, SessionState,
    SimulationOptions, Status, StoppingRuleConfig, ThresholdSchedule, TruthMode,
};
use proptest::prelude::*;

fn config(alphas: Vec<f64>, betas: Vec<f64>, cap: u32) -> StoppingRuleConfig {
    StoppingRuleConfig::new(ThresholdSchedule::new(alphas, betas).validate().unwrap(), cap).unwrap()
}

fn schedule_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.001f64..0.2, 1..4),
        prop::collection::vec(0.8f64..0.999, 1..4),
    )
        .prop_map(|(mut a, mut b)| {
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            (a, b)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn replayed_sessions_obey_the_rule(
        (alphas, betas) in schedule_strategy(),
        cap in 1u32..30,
        se in 0.55f64..0.99, sp in 0.55f64..0.99, pi in 0.01f64..0.99,
        bits in prop::collection::vec(any::<bool>(), 0..40),
    ) {
        let cfg = config(alphas, betas, cap);
        let schedule = cfg.schedule().clone();
        let profile = TestProfile::new(se, sp).unwrap();
        let disease = DiseaseModel::new(pi).unwrap();
        let results: Vec<TestResult> =
            bits.iter().map(|&b| if b { TestResult::Positive } else { TestResult::Negative }).collect();
        let out = run_sequence(&cfg, &profile, &disease, &results).unwrap();

        let used = out.trace.len();
        prop_assert_eq!(used, out.state.tests_done());
        prop_assert_eq!(used + out.unconsumed.len(), results.len());
        prop_assert_eq!(&results[..used], out.state.history());
        prop_assert!(used <= cap as usize);

        let mut closest_edge = pi.min(1.0 - pi);
        for (i, &p) in out.trace.iter().enumerate() {
            let n = i + 1;
            closest_edge = closest_edge.min(p).min(1.0 - p);
            let batch = posterior_after(&profile, &disease, &results[..n]).unwrap();
            let tol = 1e-12f64.max(16.0 * n as f64 * f64::EPSILON / closest_edge);
            prop_assert!((p - batch).abs() <= tol);
            if n < used {
                prop_assert!(!reaches_lower(p, schedule.alpha(n)) && !reaches_upper(p, schedule.beta(n)));
            }
        }
        match out.state.status() {
            Status::Running => {
                prop_assert_eq!(used, results.len());
                prop_assert!(used < cap as usize);
            }
            Status::DecidedPresent => prop_assert!(reaches_upper(out.trace[used - 1], schedule.beta(used))),
            Status::DecidedAbsent => prop_assert!(reaches_lower(out.trace[used - 1], schedule.alpha(used))),
            Status::UndecidedCapped => prop_assert_eq!(used, cap as usize),
        }
    }

    #[test]
    fn lower_cap_truncates_stopping_time(seed in any::<u64>(), small in 1u32..10, extra in 1u32..20) {
        let profile = TestProfile::new(0.8, 0.7).unwrap();
        let disease = DiseaseModel::new(0.3).unwrap();
        let options = SimulationOptions::new(64, seed);
        let short = simulate_trials(&config(vec![0.02], vec![0.98], small), &profile, &disease, &options).unwrap();
        let long = simulate_trials(&config(vec![0.02], vec![0.98], small + extra), &profile, &disease, &options).unwrap();
        for (s, l) in short.iter().zip(&long) {
            prop_assert_eq!(s.diseased, l.diseased);
            prop_assert_eq!(s.stopping_time, l.stopping_time.min(small));
            if l.stopping_time <= small {
                prop_assert_eq!(s.status, l.status);
            }
        }
    }

    #[test]
    fn narrower_corridor_stops_no_later(
        seed in any::<u64>(),
        (a_wide, a_extra) in (0.001f64..0.1, 0.0f64..0.2),
        (b_wide, b_extra) in (0.9f64..0.999, 0.0f64..0.2),
    ) {
        let profile = TestProfile::new(0.9, 0.85).unwrap();
        let disease = DiseaseModel::new(0.4).unwrap();
        let options = SimulationOptions::new(64, seed);
        let a_narrow = a_wide + a_extra;
        let b_narrow = (b_wide - b_extra).max(a_narrow);
        let wide = simulate_trials(&config(vec![a_wide], vec![b_wide], 40), &profile, &disease, &options).unwrap();
        let narrow = simulate_trials(&config(vec![a_narrow], vec![b_narrow], 40), &profile, &disease, &options).unwrap();
        for (w, n) in wide.iter().zip(&narrow) {
            prop_assert!(n.stopping_time <= w.stopping_time);
        }
    }
}

#[test]
fn serial_and_parallel_agree() {
    let cfg = config(vec![0.01, 0.02], vec![0.97, 0.99], 25);
    let profile = TestProfile::new(0.9, 0.8).unwrap();
    let disease = DiseaseModel::new(0.2).unwrap();
    let parallel = SimulationOptions::new(5000, 11);
    let serial = SimulationOptions { execution: Execution::Serial, ..parallel };
    assert_eq!(
        simulate_trials(&cfg, &profile, &disease, &parallel).unwrap(),
        simulate_trials(&cfg, &profile, &disease, &serial).unwrap()
    );
    assert_eq!(
        simulate_with(&cfg, &profile, &disease, &parallel).unwrap(),
        simulate_with(&cfg, &profile, &disease, &serial).unwrap()
    );
}

#[test]
fn fixed_truth() {
    let cfg = config(vec![0.05], vec![0.95], 20);
    let profile = TestProfile::new(0.9, 0.9).unwrap();
    let disease = DiseaseModel::new(0.5).unwrap();
    let healthy = SimulationOptions { truth: TruthMode::AlwaysHealthy, ..SimulationOptions::new(500, 3) };
    let report = simulate_with(&cfg, &profile, &disease, &healthy).unwrap();
    assert_eq!(report.healthy_trials, 500);
    assert_eq!(report.diseased_trials, 0);
    assert_eq!(report.false_absent_rate, None);
    assert!(report.false_present_rate.is_some());
    let rates = report.decided_present_rate + report.decided_absent_rate + report.capped_rate;
    assert!((rates - 1.0).abs() < 1e-12);
}

#[test]
fn different_seeds_differ() {
    let cfg = config(vec![0.05], vec![0.95], 20);
    let profile = TestProfile::new(0.8, 0.8).unwrap();
    let disease = DiseaseModel::new(0.5).unwrap();
    let a = simulate_trials(&cfg, &profile, &disease, &SimulationOptions::new(200, 1)).unwrap();
    let b = simulate_trials(&cfg, &profile, &disease, &SimulationOptions::new(200, 2)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn stepping_after_a_decision_fails() {
    let cfg = config(vec![0.05], vec![0.95], 5);
    let profile = TestProfile::new(0.99, 0.99).unwrap();
    let disease = DiseaseModel::new(0.5).unwrap();
    let state = step(&SessionState::new(&disease), &cfg, &profile, TestResult::Positive).unwrap();
    assert_eq!(state.status(), Status::DecidedPresent);
    assert_eq!(
        step(&state, &cfg, &profile, TestResult::Positive),
        Err(SequentialError::Stopped(Status::DecidedPresent))
    );
}

#[test]
fn thresholds_extend_with_last_value() {
    let schedule = ThresholdSchedule::new(vec![0.01, 0.02], vec![0.9]).validate().unwrap();
    assert_eq!(schedule.alpha(1), 0.01);
    assert_eq!(schedule.alpha(2), 0.02);
    assert_eq!(schedule.alpha(100), 0.02);
    assert_eq!(schedule.beta(7), 0.9);
}

#[test]
fn schedule_validation() {
    let chain = |a: Vec<f64>, b: Vec<f64>| ThresholdSchedule::new(a, b).validate().unwrap_err();
    assert!(matches!(chain(vec![], vec![0.9]), SequentialError::EmptySchedule { sequence: "alpha" }));
    assert!(matches!(chain(vec![0.0], vec![0.9]), SequentialError::Chain { index: 1, .. }));
    assert!(matches!(
        chain(vec![0.1, 0.05], vec![0.9]),
        SequentialError::Chain { sequence: "alpha", index: 2, reason: "decreases", .. }
    ));
    assert!(matches!(
        chain(vec![0.1], vec![0.9, 1.0]),
        SequentialError::Chain { sequence: "beta", index: 2, reason: "must be less than 1", .. }
    ));
    assert!(matches!(
        chain(vec![0.1, 0.95], vec![0.9]),
        SequentialError::Chain { reason: "exceeds beta_1", .. }
    ));
    let schedule = ThresholdSchedule::constant(0.1, 0.9).validate().unwrap();
    assert_eq!(StoppingRuleConfig::new(schedule, 0), Err(SequentialError::ZeroCap));
}
