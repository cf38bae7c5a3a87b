use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scenario::{CheckLine, ScenarioReport};
use super::{Result, TableReport};
use crate::diagnostics::{self, DiseaseModel, TestProfile, TestResult};
use crate::sequential::{SequenceOutcome, SimulationReport, Status};

/// Decimals used for simulation summaries.
const SIMULATION_PRECISION: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected text, csv or json)")),
        }
    }
}

/// `x` rounded to `precision` decimals, ties to even.
///
/// The standard formatter rounds the exact binary value of `x`, and resolves
/// exact decimal ties to the even digit.
pub fn format_decimal(x: f64, precision: usize) -> String {
    format!("{x:.precision$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    pub result: TestResult,
    pub posterior: f64,
}

/// Posterior after each prefix of a sequence of test results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTrace {
    pub sensitivity: f64,
    pub specificity: f64,
    pub prevalence: f64,
    pub precision: usize,
    pub steps: Vec<TraceStep>,
    /// Present when the trace came from the stopping rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unconsumed: Vec<TestResult>,
}

impl PosteriorTrace {
    pub fn compute(
        profile: &TestProfile,
        disease: &DiseaseModel,
        results: &[TestResult],
        precision: usize,
    ) -> Result<Self> {
        let mut steps = Vec::with_capacity(results.len());
        let mut p = disease.prevalence();
        for (i, &result) in results.iter().enumerate() {
            p = diagnostics::update_posterior(profile, p, result)?;
            steps.push(TraceStep { n: i + 1, result, posterior: p });
        }
        Ok(PosteriorTrace {
            sensitivity: profile.sensitivity(),
            specificity: profile.specificity(),
            prevalence: disease.prevalence(),
            precision,
            steps,
            status: None,
            unconsumed: Vec::new(),
        })
    }

    pub fn from_sequence(
        profile: &TestProfile,
        disease: &DiseaseModel,
        outcome: &SequenceOutcome,
        precision: usize,
    ) -> Self {
        let steps = outcome
            .state
            .history()
            .iter()
            .zip(&outcome.trace)
            .enumerate()
            .map(|(i, (&result, &posterior))| TraceStep { n: i + 1, result, posterior })
            .collect();
        PosteriorTrace {
            sensitivity: profile.sensitivity(),
            specificity: profile.specificity(),
            prevalence: disease.prevalence(),
            precision,
            steps,
            status: Some(outcome.state.status()),
            unconsumed: outcome.unconsumed.clone(),
        }
    }

    pub fn final_posterior(&self) -> f64 {
        self.steps.last().map_or(self.prevalence, |s| s.posterior)
    }
}

/// Anything [`render_report`] can print.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Table(&'a TableReport),
    Trace(&'a PosteriorTrace),
    Simulation(&'a SimulationReport),
}

/// Renders a report. Output is a pure function of the input: identical
/// reports give identical bytes.
pub fn render_report(report: Report<'_>, format: Format) -> Vec<u8> {
    let text = match (report, format) {
        (Report::Table(t), Format::Text) => table_text(t),
        (Report::Table(t), Format::Csv) => table_csv(t),
        (Report::Table(t), Format::Json) => json(t),
        (Report::Trace(t), Format::Text) => trace_text(t),
        (Report::Trace(t), Format::Csv) => trace_csv(t),
        (Report::Trace(t), Format::Json) => json(t),
        (Report::Simulation(s), Format::Text) => simulation_text(s),
        (Report::Simulation(s), Format::Csv) => simulation_csv(s),
        (Report::Simulation(s), Format::Json) => json(s),
    };
    text.into_bytes()
}

pub fn render_scenario(report: &ScenarioReport, format: Format) -> Vec<u8> {
    match report {
        ScenarioReport::Finite { checks } => match format {
            Format::Json => json(report).into_bytes(),
            Format::Text | Format::Csv => {
                let mut out = String::new();
                for (i, check) in checks.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    if format == Format::Text {
                        let _ = writeln!(out, "{}", check.description);
                    }
                    for line in &check.lines {
                        match (line, format) {
                            (CheckLine::Value { name, value }, Format::Text) => {
                                let _ = writeln!(out, "  {name} = {value}");
                            }
                            (CheckLine::Verdict { name, holds }, Format::Text) => {
                                let _ = writeln!(out, "  {name}: {}", yes_no(*holds));
                            }
                            (CheckLine::Value { name, value }, _) => {
                                let _ = writeln!(out, "{},{}", csv_field(name), value);
                            }
                            (CheckLine::Verdict { name, holds }, _) => {
                                let _ = writeln!(out, "{},{}", csv_field(name), yes_no(*holds));
                            }
                        }
                    }
                }
                out.into_bytes()
            }
        },
        ScenarioReport::Diagnostic(d) => match format {
            Format::Json => json(report).into_bytes(),
            _ => {
                let mut out = render_report(Report::Trace(&d.trace), format);
                if format == Format::Text {
                    out.extend_from_slice(
                        format!("likelihood ratio: {:.*}\n", d.trace.precision, d.likelihood_ratio).as_bytes(),
                    );
                }
                out
            }
        },
        ScenarioReport::Simulation(s) => match format {
            Format::Json => json(report).into_bytes(),
            _ => render_report(Report::Simulation(s), format),
        },
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn positives_header(n: u32) -> String {
    if n == 1 {
        "1 positive".to_string()
    } else {
        format!("{n} positives")
    }
}

fn table_text(t: &TableReport) -> String {
    let mut headers = vec!["Region".to_string(), "Prevalence".to_string()];
    headers.extend((1..=t.max_positives).map(positives_header));
    let cells: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.region.clone(), row.prevalence.to_string()];
            cells.extend(row.ppv.iter().map(|&p| format_decimal(p, t.precision)));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| {
            cells
                .iter()
                .map(|r| r[c].chars().count())
                .chain([headers[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = format!(
        "Probability of disease after n positive tests (sensitivity {}, specificity {})\n\n",
        t.sensitivity, t.specificity
    );
    let line = |out: &mut String, fields: &[String]| {
        let rendered: Vec<String> = fields
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (f, &w))| if c == 0 { format!("{f:<w$}") } else { format!("{f:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", rendered.join("  ").trim_end());
    };
    line(&mut out, &headers);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule);
    for row in &cells {
        line(&mut out, row);
    }
    out
}

fn table_csv(t: &TableReport) -> String {
    let mut out = String::from("region,prevalence");
    for n in 1..=t.max_positives {
        let _ = write!(out, ",ppv_{n}");
    }
    out.push('\n');
    for row in &t.rows {
        let _ = write!(out, "{},{}", csv_field(&row.region), row.prevalence);
        for &p in &row.ppv {
            let _ = write!(out, ",{}", format_decimal(p, t.precision));
        }
        out.push('\n');
    }
    out
}

fn trace_text(t: &PosteriorTrace) -> String {
    let mut out = format!(
        "sensitivity {}, specificity {}, prevalence {}\n",
        t.sensitivity, t.specificity, t.prevalence
    );
    let _ = writeln!(out, "{:>4}  {:<6}  posterior", "n", "result");
    for s in &t.steps {
        let _ = writeln!(
            out,
            "{:>4}  {:<6}  {}",
            s.n,
            s.result.to_string(),
            format_decimal(s.posterior, t.precision)
        );
    }
    if let Some(status) = t.status {
        let _ = writeln!(out, "status: {status} after {} tests", t.steps.len());
        if !t.unconsumed.is_empty() {
            let _ = writeln!(out, "unused results: {}", t.unconsumed.len());
        }
    }
    out
}

fn trace_csv(t: &PosteriorTrace) -> String {
    let mut out = String::from("n,result,posterior\n");
    for s in &t.steps {
        let _ = writeln!(out, "{},{},{}", s.n, s.result, format_decimal(s.posterior, t.precision));
    }
    out
}

fn simulation_fields(s: &SimulationReport) -> Vec<(&'static str, String)> {
    let d = |x: f64| format_decimal(x, SIMULATION_PRECISION);
    let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), d);
    let truth = serde_json::to_value(s.truth)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    vec![
        ("trials", s.trials.to_string()),
        ("seed", s.seed.to_string()),
        ("truth", truth),
        ("diseased_trials", s.diseased_trials.to_string()),
        ("healthy_trials", s.healthy_trials.to_string()),
        ("mean_stopping_time", d(s.mean_stopping_time)),
        ("stopping_time_std_error", d(s.stopping_time_std_error)),
        ("decided_present_rate", d(s.decided_present_rate)),
        ("decided_absent_rate", d(s.decided_absent_rate)),
        ("capped_rate", d(s.capped_rate)),
        ("false_absent_rate", opt(s.false_absent_rate)),
        ("false_present_rate", opt(s.false_present_rate)),
    ]
}

fn simulation_text(s: &SimulationReport) -> String {
    let fields = simulation_fields(s);
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    fields
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn simulation_csv(s: &SimulationReport) -> String {
    let fields = simulation_fields(s);
    let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", keys.join(","), values.join(","))
}
