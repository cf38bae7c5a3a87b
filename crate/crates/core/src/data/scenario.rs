//! Scenario files: TOML documents describing a finite-space check, a
//! diagnostic computation or a stopping-rule simulation.
//!
//! Every file carries `schema_version = 1` and a `kind` discriminator.
//! Unknown fields are rejected.
//!
//! ```toml
//! schema_version = 1
//! kind = "finite"
//! outcomes = 6
//!
//! [events]
//! A1 = [1, 2, 3]
//! A2 = [2, 4]
//! B = [1, 3, 4]
//!
//! [[checks]]
//! check = "classify"
//! events = ["A1", "A2"]
//! given = "B"
//! ```
//!
//! In checks, an event name followed by `'` (for example `B'`) refers to the
//! complement of that event.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::render::{render_scenario, Format, PosteriorTrace};
use super::{DataError, Result};
use crate::diagnostics::{
    likelihood_ratio, DiseaseModel, LikelihoodRatio, TestProfile, TestResult,
};
use crate::finite::{self, CiMode, Event, FiniteError, SampleSpace};
use crate::sequential::{
    run_sequence, simulate_with, SimulationOptions, SimulationReport, StoppingRuleConfig,
    ThresholdSchedule, TruthMode,
};

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_PRECISION: usize = 4;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Finite(FiniteScenario),
    Diagnostic(DiagnosticScenario),
    Simulation(SimulationScenario),
}

impl ScenarioSpec {
    fn schema_version(&self) -> u32 {
        match self {
            ScenarioSpec::Finite(s) => s.schema_version,
            ScenarioSpec::Diagnostic(s) => s.schema_version,
            ScenarioSpec::Simulation(s) => s.schema_version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteScenario {
    pub schema_version: u32,
    pub outcomes: Outcomes,
    #[serde(default)]
    pub events: BTreeMap<String, Vec<Label>>,
    pub checks: Vec<Check>,
}

/// Either a count `n` (outcomes `1..=n`) or an explicit list of labels.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Outcomes {
    Count(usize),
    Labels(Vec<Label>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Number(i64),
    Text(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Number(n) => write!(f, "{n}"),
            Label::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Probability { event: String },
    Conditional { event: String, given: String },
    Independent { events: [String; 2] },
    ConditionallyIndependent { events: [String; 2], given: String },
    Family { events: Vec<String>, given: String, mode: CiMode },
    Classify { events: [String; 2], given: String },
    CiPremises { events: [String; 2], given: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticScenario {
    pub schema_version: u32,
    pub sensitivity: f64,
    pub specificity: f64,
    pub prevalence: f64,
    /// Compact result string such as `"++-+"`.
    pub results: Option<String>,
    pub n_positives: Option<u32>,
    pub precision: Option<usize>,
    pub stopping: Option<StoppingSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub max_tests: u32,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationScenario {
    pub schema_version: u32,
    pub sensitivity: f64,
    pub specificity: f64,
    pub prevalence: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub max_tests: u32,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub truth: TruthMode,
}

/// One line of a finite-space check result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum CheckLine {
    Value { name: String, value: String },
    Verdict { name: String, holds: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub description: String,
    pub lines: Vec<CheckLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticOutcome {
    pub trace: PosteriorTrace,
    pub likelihood_ratio: LikelihoodRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioReport {
    Finite { checks: Vec<CheckOutcome> },
    Diagnostic(DiagnosticOutcome),
    Simulation(SimulationReport),
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec =
        toml::from_str(text).map_err(|e| DataError::Schema(e.message().to_string()))?;
    if spec.schema_version() != SCHEMA_VERSION {
        return Err(DataError::Schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            spec.schema_version()
        )));
    }
    Ok(spec)
}

/// Reads, validates and runs a scenario file, then renders the result.
///
/// Nothing is rendered unless the whole scenario succeeds.
pub fn run_scenario_file(path: impl AsRef<Path>, format: Format) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let report = run_scenario(&parse_scenario(&text)?)?;
    Ok(render_scenario(&report, format))
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    match spec {
        ScenarioSpec::Finite(s) => run_finite(s),
        ScenarioSpec::Diagnostic(s) => run_diagnostic(s),
        ScenarioSpec::Simulation(s) => run_simulation(s),
    }
}

struct FiniteContext {
    space: SampleSpace,
    events: BTreeMap<String, Event>,
}

impl FiniteContext {
    fn lookup(&self, name: &str) -> Result<Event> {
        if let Some(event) = self.events.get(name) {
            return Ok(event.clone());
        }
        if let Some(base) = name.strip_suffix('\'') {
            return Ok(self.lookup(base)?.complement());
        }
        Err(DataError::Schema(format!("unknown event `{name}`")))
    }
}

fn run_finite(s: &FiniteScenario) -> Result<ScenarioReport> {
    let space_error = |source| DataError::Finite { context: "sample space".into(), source };
    let space = match &s.outcomes {
        Outcomes::Count(0) => return Err(space_error(FiniteError::EmptySpace)),
        Outcomes::Count(n) => SampleSpace::numbered(*n),
        Outcomes::Labels(labels) => {
            SampleSpace::new(labels.iter().map(Label::to_string)).map_err(space_error)?
        }
    };
    let mut events = BTreeMap::new();
    for (name, members) in &s.events {
        let event = space.event(members).map_err(|source| DataError::Finite {
            context: format!("event `{name}`"),
            source,
        })?;
        events.insert(name.clone(), event);
    }
    let ctx = FiniteContext { space, events };
    let checks = s
        .checks
        .iter()
        .map(|check| run_check(&ctx, check))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport::Finite { checks })
}

fn run_check(ctx: &FiniteContext, check: &Check) -> Result<CheckOutcome> {
    let space = &ctx.space;
    let mut lines = Vec::new();
    let value = |lines: &mut Vec<CheckLine>, name: String, v: crate::Rational| {
        lines.push(CheckLine::Value { name, value: v.to_string() });
    };
    let verdict = |lines: &mut Vec<CheckLine>, name: String, holds: bool| {
        lines.push(CheckLine::Verdict { name, holds });
    };

    let description = describe(check);
    let wrap = |source: FiniteError| DataError::Finite { context: description.clone(), source };

    match check {
        Check::Probability { event } => {
            let a = ctx.lookup(event)?;
            value(&mut lines, format!("P({event})"), finite::probability(space, &a).map_err(wrap)?);
        }
        Check::Conditional { event, given } => {
            let (a, b) = (ctx.lookup(event)?, ctx.lookup(given)?);
            value(
                &mut lines,
                format!("P({event} | {given})"),
                finite::conditional_probability(space, &a, &b).map_err(wrap)?,
            );
        }
        Check::Independent { events: [n1, n2] } => {
            let (a1, a2) = (ctx.lookup(n1)?, ctx.lookup(n2)?);
            unconditional_values(space, &mut lines, n1, n2, &a1, &a2).map_err(wrap)?;
            verdict(&mut lines, "independent".into(), finite::is_independent(space, &a1, &a2).map_err(wrap)?);
        }
        Check::ConditionallyIndependent { events: [n1, n2], given } => {
            let (a1, a2, b) = (ctx.lookup(n1)?, ctx.lookup(n2)?, ctx.lookup(given)?);
            conditional_values(space, &mut lines, [n1, n2, given], [&a1, &a2, &b]).map_err(wrap)?;
            verdict(
                &mut lines,
                format!("conditionally independent given {given}"),
                finite::is_conditionally_independent(space, &a1, &a2, &b).map_err(wrap)?,
            );
        }
        Check::Family { events, given, mode } => {
            let family = events.iter().map(|n| ctx.lookup(n)).collect::<Result<Vec<_>>>()?;
            let b = ctx.lookup(given)?;
            let holds =
                finite::is_conditionally_independent_many(space, &family, &b, *mode).map_err(wrap)?;
            let mode = match mode {
                CiMode::Pairwise => "pairwise",
                CiMode::Mutual => "mutually",
            };
            verdict(&mut lines, format!("{mode} conditionally independent given {given}"), holds);
        }
        Check::Classify { events: [n1, n2], given } => {
            let (a1, a2, b) = (ctx.lookup(n1)?, ctx.lookup(n2)?, ctx.lookup(given)?);
            let classes = finite::classify_pair(space, &a1, &a2, &b).map_err(wrap)?;
            let complement_name = format!("{given}'");
            let b_complement = b.complement();
            unconditional_values(space, &mut lines, n1, n2, &a1, &a2).map_err(wrap)?;
            verdict(&mut lines, "independent".into(), classes.independent);
            conditional_values(space, &mut lines, [n1, n2, given], [&a1, &a2, &b]).map_err(wrap)?;
            verdict(&mut lines, format!("conditionally independent given {given}"), classes.ci_given_b);
            conditional_values(space, &mut lines, [n1, n2, &complement_name], [&a1, &a2, &b_complement])
                .map_err(wrap)?;
            verdict(
                &mut lines,
                format!("conditionally independent given {complement_name}"),
                classes.ci_given_b_complement,
            );
        }
        Check::CiPremises { events: [n1, n2], given } => {
            let (a1, a2, b) = (ctx.lookup(n1)?, ctx.lookup(n2)?, ctx.lookup(given)?);
            let premises = finite::ci_premises_hold(space, &a1, &a2, &b).map_err(wrap)?;
            let a2b = a2.intersection(&b).map_err(wrap)?;
            verdict(
                &mut lines,
                format!("{n1} independent of {given}"),
                finite::is_independent(space, &a1, &b).map_err(wrap)?,
            );
            verdict(
                &mut lines,
                format!("{n1} independent of {n2} ∩ {given}"),
                finite::is_independent(space, &a1, &a2b).map_err(wrap)?,
            );
            verdict(&mut lines, "premises hold".into(), premises);
            verdict(
                &mut lines,
                format!("conditionally independent given {given}"),
                finite::is_conditionally_independent(space, &a1, &a2, &b).map_err(wrap)?,
            );
        }
    }
    Ok(CheckOutcome { description, lines })
}

fn describe(check: &Check) -> String {
    match check {
        Check::Probability { event } => format!("probability of {event}"),
        Check::Conditional { event, given } => format!("probability of {event} given {given}"),
        Check::Independent { events: [a, b] } => format!("independence of {a} and {b}"),
        Check::ConditionallyIndependent { events: [a, b], given } => {
            format!("conditional independence of {a} and {b} given {given}")
        }
        Check::Family { events, given, .. } => {
            format!("conditional independence of {} given {given}", events.join(", "))
        }
        Check::Classify { events: [a, b], given } => format!("classify {a} and {b} given {given}"),
        Check::CiPremises { events: [a, b], given } => {
            format!("independence premises for {a} and {b} given {given}")
        }
    }
}

fn unconditional_values(
    space: &SampleSpace,
    lines: &mut Vec<CheckLine>,
    n1: &str,
    n2: &str,
    a1: &Event,
    a2: &Event,
) -> Result<(), FiniteError> {
    let both = a1.intersection(a2)?;
    for (name, event) in [(n1.to_string(), a1), (n2.to_string(), a2), (format!("{n1} ∩ {n2}"), &both)] {
        lines.push(CheckLine::Value {
            name: format!("P({name})"),
            value: finite::probability(space, event)?.to_string(),
        });
    }
    Ok(())
}

fn conditional_values(
    space: &SampleSpace,
    lines: &mut Vec<CheckLine>,
    [n1, n2, given]: [&str; 3],
    [a1, a2, b]: [&Event; 3],
) -> Result<(), FiniteError> {
    let both = a1.intersection(a2)?;
    for (name, event) in [(n1.to_string(), a1), (n2.to_string(), a2), (format!("{n1} ∩ {n2}"), &both)] {
        lines.push(CheckLine::Value {
            name: format!("P({name} | {given})"),
            value: finite::conditional_probability(space, event, b)?.to_string(),
        });
    }
    Ok(())
}

fn run_diagnostic(s: &DiagnosticScenario) -> Result<ScenarioReport> {
    let profile = TestProfile::new(s.sensitivity, s.specificity)?;
    let disease = DiseaseModel::new(s.prevalence)?;
    let results = match (&s.results, s.n_positives) {
        (Some(r), None) => TestResult::parse_sequence(r)?,
        (None, Some(n)) => vec![TestResult::Positive; n as usize],
        _ => {
            return Err(DataError::Schema(
                "diagnostic scenario needs exactly one of `results` or `n_positives`".into(),
            ))
        }
    };
    let precision = s.precision.unwrap_or(DEFAULT_PRECISION);
    let trace = match &s.stopping {
        None => PosteriorTrace::compute(&profile, &disease, &results, precision)?,
        Some(stop) => {
            let schedule = ThresholdSchedule::new(stop.alphas.clone(), stop.betas.clone()).validate()?;
            let config = StoppingRuleConfig::new(schedule, stop.max_tests)?;
            let outcome = run_sequence(&config, &profile, &disease, &results)?;
            PosteriorTrace::from_sequence(&profile, &disease, &outcome, precision)
        }
    };
    Ok(ScenarioReport::Diagnostic(DiagnosticOutcome {
        trace,
        likelihood_ratio: likelihood_ratio(&profile),
    }))
}

fn run_simulation(s: &SimulationScenario) -> Result<ScenarioReport> {
    let profile = TestProfile::new(s.sensitivity, s.specificity)?;
    let disease = DiseaseModel::new(s.prevalence)?;
    let schedule = ThresholdSchedule::new(s.alphas.clone(), s.betas.clone()).validate()?;
    let config = StoppingRuleConfig::new(schedule, s.max_tests)?;
    let options = SimulationOptions { truth: s.truth, ..SimulationOptions::new(s.trials, s.seed) };
    Ok(ScenarioReport::Simulation(simulate_with(&config, &profile, &disease, &options)?))
}
