//! `condbayes`: finite-space independence checks, diagnostic posteriors,
//! prevalence tables and stopping-rule simulations from the command line.
//!
//! Exit status is 0 on success, 1 when inputs are well formed but outside
//! the domain of a computation, and 2 for malformed invocations or files.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use condbayes::data::{
    build_table, bundled_regions, load_regions, render_report, run_scenario_file, DataError,
    Format, PosteriorTrace, Report,
};
use condbayes::diagnostics::{
    ppv_n_positives, tests_to_confidence, DiseaseModel, TestProfile, TestResult,
};
use condbayes::sequential::{
    simulate_with, Execution, SimulationOptions, StoppingRuleConfig, ThresholdSchedule, TruthMode,
};

#[derive(Debug, Parser)]
#[command(name = "condbayes", version, about = "Conditional independence, Bayes updates and sequential diagnostic testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file (finite, diagnostic or simulation).
    Check {
        file: PathBuf,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Posterior probability of disease after a sequence of test results.
    Ppv {
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        specificity: f64,
        #[arg(long)]
        prevalence: f64,
        /// Results as a string of `+` and `-`, e.g. `++-`.
        #[arg(long, conflicts_with = "n_positives", required_unless_present = "n_positives")]
        results: Option<String>,
        /// Shorthand for that many consecutive positive results.
        #[arg(long)]
        n_positives: Option<u32>,
        #[arg(long, default_value_t = 4)]
        precision: usize,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Posterior after 1..=N positive tests for each region of a prevalence file.
    Table {
        /// `region,prevalence` CSV; the bundled 2018 regional data when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.99)]
        sensitivity: f64,
        #[arg(long, default_value_t = 0.99)]
        specificity: f64,
        #[arg(long, default_value_t = 3)]
        max_positives: u32,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Monte Carlo run of the sequential stopping rule.
    Simulate {
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        specificity: f64,
        #[arg(long)]
        prevalence: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lower thresholds, comma separated; the last one repeats.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Upper thresholds, comma separated; the last one repeats.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long)]
        max_tests: u32,
        /// Give every simulated patient this true status.
        #[arg(long)]
        fix_truth: Option<Truth>,
        /// Run trials on one thread.
        #[arg(long)]
        serial: bool,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Fewest consecutive positive tests that reach a posterior confidence.
    Threshold {
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        specificity: f64,
        #[arg(long)]
        prevalence: f64,
        #[arg(long)]
        confidence: f64,
        #[arg(long, default_value = "text")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Truth {
    Diseased,
    Healthy,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let rendered = err.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("condbayes: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(bytes) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&bytes).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("condbayes: {err}");
            ExitCode::from(if err.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<Vec<u8>, DataError> {
    match command {
        Command::Check { file, format } => run_scenario_file(file, format),
        Command::Ppv {
            sensitivity,
            specificity,
            prevalence,
            results,
            n_positives,
            precision,
            format,
        } => {
            let profile = TestProfile::new(sensitivity, specificity)?;
            let disease = DiseaseModel::new(prevalence)?;
            let results = match (results, n_positives) {
                (Some(r), _) => TestResult::parse_sequence(&r)?,
                (None, Some(n)) => vec![TestResult::Positive; n as usize],
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let trace = PosteriorTrace::compute(&profile, &disease, &results, precision)?;
            Ok(render_report(Report::Trace(&trace), format))
        }
        Command::Table { input, sensitivity, specificity, max_positives, format } => {
            let records = match input {
                Some(path) => load_regions(path)?,
                None => bundled_regions(),
            };
            let profile = TestProfile::new(sensitivity, specificity)?;
            let table = build_table(&records, &profile, max_positives)?;
            Ok(render_report(Report::Table(&table), format))
        }
        Command::Simulate {
            sensitivity,
            specificity,
            prevalence,
            trials,
            seed,
            alpha,
            beta,
            max_tests,
            fix_truth,
            serial,
            format,
        } => {
            let profile = TestProfile::new(sensitivity, specificity)?;
            let disease = DiseaseModel::new(prevalence)?;
            let schedule = ThresholdSchedule::new(alpha, beta).validate()?;
            let config = StoppingRuleConfig::new(schedule, max_tests)?;
            let options = SimulationOptions {
                truth: match fix_truth {
                    None => TruthMode::Sampled,
                    Some(Truth::Diseased) => TruthMode::AlwaysDiseased,
                    Some(Truth::Healthy) => TruthMode::AlwaysHealthy,
                },
                execution: if serial { Execution::Serial } else { Execution::Parallel },
                ..SimulationOptions::new(trials, seed)
            };
            let report = simulate_with(&config, &profile, &disease, &options)?;
            Ok(render_report(Report::Simulation(&report), format))
        }
        Command::Threshold { sensitivity, specificity, prevalence, confidence, format } => {
            let profile = TestProfile::new(sensitivity, specificity)?;
            let disease = DiseaseModel::new(prevalence)?;
            let n = tests_to_confidence(&profile, &disease, confidence)?;
            let posterior = ppv_n_positives(&profile, &disease, n)?;
            Ok(render_threshold(n, posterior, format))
        }
    }
}

fn render_threshold(n: u32, posterior: f64, format: Format) -> Vec<u8> {
    let posterior = format!("{posterior:.6}");
    match format {
        Format::Text => format!("tests: {n}\nposterior: {posterior}\n"),
        Format::Csv => format!("tests,posterior\n{n},{posterior}\n"),
        Format::Json => format!("{{\n  \"tests\": {n},\n  \"posterior\": {posterior}\n}}\n"),
    }
    .into_bytes()
}
