//! Sequential diagnostic testing with a two-threshold stopping rule.
//!
//! After each test the posterior `p_n = P(D | results so far)` is compared to
//! a lower threshold `α_n` and an upper threshold `β_n`. Testing stops at the
//! first `n >= 1` with `p_n <= α_n` (disease absent) or `p_n >= β_n` (disease
//! present). The prior itself is never compared. A cap on the number of tests
//! guarantees termination; a session that reaches it without crossing either
//! threshold ends undecided.
//!
//! Ties stop: `p_n == α_n` stops as absent and `p_n == β_n` stops as
//! present. If a degenerate schedule makes both hold, present wins. A
//! posterior within a relative [`TIE_TOLERANCE`] of a threshold counts as
//! equal to it, so that `1 - 0.95` evaluating to `0.050000000000000044`
//! does not move a tie off the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticError, DiseaseModel, TestProfile, TestResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequentialError {
    #[error("{sequence} thresholds must not be empty")]
    EmptySchedule { sequence: &'static str },
    #[error("{sequence}_{index} = {value}: {reason}")]
    Chain {
        sequence: &'static str,
        /// One-based position in the offending sequence.
        index: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("max_tests must be at least 1")]
    ZeroCap,
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("session already stopped ({0})")]
    Stopped(Status),
    #[error(transparent)]
    Diagnostic(#[from] DiagnosticError),
}

pub type Result<T, E = SequentialError> = std::result::Result<T, E>;

/// Relative distance below which a posterior and a threshold compare equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `p >= threshold`, up to [`TIE_TOLERANCE`].
pub fn reaches_upper(p: f64, threshold: f64) -> bool {
    p >= threshold - TIE_TOLERANCE * threshold
}

/// `p <= threshold`, up to [`TIE_TOLERANCE`].
pub fn reaches_lower(p: f64, threshold: f64) -> bool {
    p <= threshold + TIE_TOLERANCE * threshold
}

/// Lower (`alphas`) and upper (`betas`) thresholds. Beyond the listed values
/// each sequence repeats its last entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl ThresholdSchedule {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Self {
        ThresholdSchedule { alphas, betas }
    }

    pub fn constant(alpha: f64, beta: f64) -> Self {
        ThresholdSchedule { alphas: vec![alpha], betas: vec![beta] }
    }

    pub fn validate(self) -> Result<ValidSchedule> {
        validate_schedule(self)
    }
}

/// A schedule satisfying `0 < α_1 <= α_2 <= … <= β_1 <= β_2 <= … < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidSchedule(ThresholdSchedule);

impl ValidSchedule {
    /// `α_n` for `n >= 1`.
    pub fn alpha(&self, n: usize) -> f64 {
        extended(&self.0.alphas, n)
    }

    /// `β_n` for `n >= 1`.
    pub fn beta(&self, n: usize) -> f64 {
        extended(&self.0.betas, n)
    }

    pub fn schedule(&self) -> &ThresholdSchedule {
        &self.0
    }
}

fn extended(values: &[f64], n: usize) -> f64 {
    assert!(n >= 1, "thresholds are indexed from 1");
    values[n.min(values.len()) - 1]
}

/// Checks the threshold chain, reporting the first offending entry.
pub fn validate_schedule(schedule: ThresholdSchedule) -> Result<ValidSchedule> {
    let ThresholdSchedule { alphas, betas } = &schedule;
    if alphas.is_empty() {
        return Err(SequentialError::EmptySchedule { sequence: "alpha" });
    }
    if betas.is_empty() {
        return Err(SequentialError::EmptySchedule { sequence: "beta" });
    }
    let beta_1 = betas[0];
    let violation = |sequence, i: usize, value, reason| SequentialError::Chain {
        sequence,
        index: i + 1,
        value,
        reason,
    };

    let mut previous = 0.0;
    for (i, &a) in alphas.iter().enumerate() {
        if i == 0 && !(a > 0.0) {
            return Err(violation("alpha", i, a, "must be greater than 0"));
        }
        if !(a >= previous) {
            return Err(violation("alpha", i, a, "decreases"));
        }
        if !(a <= beta_1) {
            return Err(violation("alpha", i, a, "exceeds beta_1"));
        }
        previous = a;
    }
    for (i, &b) in betas.iter().enumerate() {
        if !(b >= previous) {
            return Err(violation("beta", i, b, "decreases"));
        }
        if !(b < 1.0) {
            return Err(violation("beta", i, b, "must be less than 1"));
        }
        previous = b;
    }
    Ok(ValidSchedule(schedule))
}

/// A validated schedule plus the cap on the number of tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingRuleConfig {
    schedule: ValidSchedule,
    max_tests: u32,
}

impl StoppingRuleConfig {
    pub fn new(schedule: ValidSchedule, max_tests: u32) -> Result<Self> {
        if max_tests == 0 {
            return Err(SequentialError::ZeroCap);
        }
        Ok(StoppingRuleConfig { schedule, max_tests })
    }

    pub fn schedule(&self) -> &ValidSchedule {
        &self.schedule
    }

    pub fn max_tests(&self) -> u32 {
        self.max_tests
    }

    /// Status implied by posterior `p` after test number `n`.
    pub fn classify(&self, n: usize, p: f64) -> Status {
        if reaches_upper(p, self.schedule.beta(n)) {
            Status::DecidedPresent
        } else if reaches_lower(p, self.schedule.alpha(n)) {
            Status::DecidedAbsent
        } else if n >= self.max_tests as usize {
            Status::UndecidedCapped
        } else {
            Status::Running
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    DecidedPresent,
    DecidedAbsent,
    UndecidedCapped,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Running => "running",
            Status::DecidedPresent => "decided-present",
            Status::DecidedAbsent => "decided-absent",
            Status::UndecidedCapped => "undecided-capped",
        })
    }
}

/// One patient's testing session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    posterior: f64,
    history: Vec<TestResult>,
    status: Status,
}

impl SessionState {
    /// A fresh session whose posterior starts at the prevalence.
    pub fn new(disease: &DiseaseModel) -> Self {
        SessionState {
            posterior: disease.prevalence(),
            history: Vec::new(),
            status: Status::Running,
        }
    }

    pub fn tests_done(&self) -> usize {
        self.history.len()
    }

    pub fn posterior(&self) -> f64 {
        self.posterior
    }

    pub fn history(&self) -> &[TestResult] {
        &self.history
    }

    pub fn status(&self) -> Status {
        self.status
    }

    fn advance(
        &mut self,
        config: &StoppingRuleConfig,
        profile: &TestProfile,
        result: TestResult,
    ) -> Result<()> {
        if self.status != Status::Running {
            return Err(SequentialError::Stopped(self.status));
        }
        let posterior = diagnostics::update_posterior(profile, self.posterior, result)?;
        self.posterior = posterior;
        self.history.push(result);
        self.status = config.classify(self.history.len(), posterior);
        Ok(())
    }
}

/// Applies one test result to a running session.
pub fn step(
    state: &SessionState,
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    result: TestResult,
) -> Result<SessionState> {
    let mut next = state.clone();
    next.advance(config, profile, result)?;
    Ok(next)
}

/// Final state of [`run_sequence`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceOutcome {
    pub state: SessionState,
    /// `p_1, p_2, …` for every test actually applied.
    pub trace: Vec<f64>,
    /// Results supplied after the session stopped; never applied.
    pub unconsumed: Vec<TestResult>,
}

/// Feeds `results` through the stopping rule, stopping early on a decision.
pub fn run_sequence(
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    disease: &DiseaseModel,
    results: &[TestResult],
) -> Result<SequenceOutcome> {
    let mut state = SessionState::new(disease);
    let mut trace = Vec::new();
    let mut consumed = 0;
    for &result in results {
        if state.status != Status::Running {
            break;
        }
        state.advance(config, profile, result)?;
        trace.push(state.posterior);
        consumed += 1;
    }
    Ok(SequenceOutcome { state, trace, unconsumed: results[consumed..].to_vec() })
}

/// How each simulated patient's true status is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    /// Diseased with probability equal to the prevalence.
    #[default]
    Sampled,
    AlwaysDiseased,
    AlwaysHealthy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub trials: u64,
    pub seed: u64,
    pub truth: TruthMode,
    pub execution: Execution,
}

impl SimulationOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        SimulationOptions { trials, seed, truth: TruthMode::Sampled, execution: Execution::Parallel }
    }
}

/// One simulated session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub diseased: bool,
    pub stopping_time: u32,
    pub status: Status,
    pub posterior: f64,
    pub results: Vec<TestResult>,
}

/// Aggregate of a Monte Carlo run of the stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub truth: TruthMode,
    pub diseased_trials: u64,
    pub healthy_trials: u64,
    /// Sample mean of the stopping index `N`.
    pub mean_stopping_time: f64,
    /// Standard error of `mean_stopping_time`.
    pub stopping_time_std_error: f64,
    pub decided_present_rate: f64,
    pub decided_absent_rate: f64,
    pub capped_rate: f64,
    /// `P(decided absent | diseased)`; `None` without diseased trials.
    pub false_absent_rate: Option<f64>,
    /// `P(decided present | healthy)`; `None` without healthy trials.
    pub false_present_rate: Option<f64>,
}

/// The generator for trial `index`: ChaCha8 seeded with `seed`, on stream
/// `index`. Trials never share a stream, so results do not depend on how
/// trials are scheduled across threads.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs every trial and returns them in index order.
pub fn simulate_trials(
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    disease: &DiseaseModel,
    options: &SimulationOptions,
) -> Result<Vec<TrialOutcome>> {
    if options.trials == 0 {
        return Err(SequentialError::ZeroTrials);
    }
    let run = |i: u64| run_trial(config, profile, disease, options, i);
    match options.execution {
        Execution::Serial => (0..options.trials).map(run).collect(),
        Execution::Parallel => (0..options.trials).into_par_iter().map(run).collect(),
    }
}

/// Monte Carlo evaluation of the stopping rule.
///
/// Identical inputs and seed give an identical report whatever the
/// [`Execution`] mode.
pub fn simulate(
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    disease: &DiseaseModel,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    simulate_with(config, profile, disease, &SimulationOptions::new(trials, seed))
}

pub fn simulate_with(
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    disease: &DiseaseModel,
    options: &SimulationOptions,
) -> Result<SimulationReport> {
    let outcomes = simulate_trials(config, profile, disease, options)?;
    Ok(summarize(&outcomes, options))
}

fn run_trial(
    config: &StoppingRuleConfig,
    profile: &TestProfile,
    disease: &DiseaseModel,
    options: &SimulationOptions,
    index: u64,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(options.seed, index);
    let diseased = match options.truth {
        TruthMode::Sampled => rng.gen_bool(disease.prevalence()),
        TruthMode::AlwaysDiseased => true,
        TruthMode::AlwaysHealthy => false,
    };
    let p_positive = if diseased {
        profile.sensitivity()
    } else {
        1.0 - profile.specificity()
    };
    let mut state = SessionState::new(disease);
    while state.status == Status::Running {
        let result = if rng.gen_bool(p_positive) {
            TestResult::Positive
        } else {
            TestResult::Negative
        };
        state.advance(config, profile, result)?;
    }
    Ok(TrialOutcome {
        diseased,
        stopping_time: state.history.len() as u32,
        status: state.status,
        posterior: state.posterior,
        results: state.history,
    })
}

// integer tallies only, so the summary is independent of trial order
fn summarize(outcomes: &[TrialOutcome], options: &SimulationOptions) -> SimulationReport {
    let trials = outcomes.len() as u64;
    let (mut present, mut absent, mut capped) = (0u64, 0u64, 0u64);
    let (mut diseased, mut false_absent, mut false_present) = (0u64, 0u64, 0u64);
    let (mut sum, mut sum_sq) = (0u128, 0u128);
    for t in outcomes {
        let n = t.stopping_time as u128;
        sum += n;
        sum_sq += n * n;
        match t.status {
            Status::DecidedPresent => present += 1,
            Status::DecidedAbsent => absent += 1,
            _ => capped += 1,
        }
        if t.diseased {
            diseased += 1;
            false_absent += (t.status == Status::DecidedAbsent) as u64;
        } else {
            false_present += (t.status == Status::DecidedPresent) as u64;
        }
    }
    let healthy = trials - diseased;
    let total = trials as f64;
    let mean = sum as f64 / total;
    let variance = if trials > 1 {
        // exact integer numerator: n Σx² - (Σx)²
        let numerator = trials as u128 * sum_sq - sum * sum;
        numerator as f64 / (total * (total - 1.0))
    } else {
        0.0
    };
    let rate = |count: u64, of: u64| (of > 0).then(|| count as f64 / of as f64);
    SimulationReport {
        trials,
        seed: options.seed,
        truth: options.truth,
        diseased_trials: diseased,
        healthy_trials: healthy,
        mean_stopping_time: mean,
        stopping_time_std_error: (variance / total).sqrt(),
        decided_present_rate: present as f64 / total,
        decided_absent_rate: absent as f64 / total,
        capped_rate: capped as f64 / total,
        false_absent_rate: rate(false_absent, diseased),
        false_present_rate: rate(false_present, healthy),
    }
}
