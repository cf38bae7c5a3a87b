//! Diagnostic testing: predictive values and posteriors after repeated tests.
//!
//! The partition is `{D, D'}` (diseased, healthy), the prior is the
//! prevalence, and a test contributes the likelihood row `(Se, 1 - Sp)` when
//! positive and `(1 - Se, Sp)` when negative. Repeated tests are assumed
//! conditionally independent given disease status and all share one
//! [`TestProfile`].
//!
//! ```
//! use condbayes::diagnostics::{DiseaseModel, TestProfile, ppv_n_positives};
//!
//! let test = TestProfile::new(0.95, 0.95).unwrap();
//! let rare = DiseaseModel::new(0.001).unwrap();
//! let after_three = ppv_n_positives(&test, &rare, 3).unwrap();
//! assert!((after_three - 0.873).abs() < 5e-4);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{self, BayesError};

/// Upper bound on the scan in [`tests_to_confidence`].
pub const MAX_CONFIDENCE_SCAN: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("{name} must be in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("posterior is undefined: the observed results have probability zero")]
    UndefinedPosterior,
    #[error("threshold must be in (0, 1), got {0}")]
    Threshold(f64),
    #[error("positive tests never reach the threshold: {0}")]
    Divergent(&'static str),
    #[error("threshold not reached within {0} positive tests")]
    ScanLimit(u64),
    #[error("invalid test result `{0}`, expected `+` or `-`")]
    ParseResult(String),
}

pub type Result<T, E = DiagnosticError> = std::result::Result<T, E>;

impl From<BayesError> for DiagnosticError {
    fn from(err: BayesError) -> Self {
        match err {
            BayesError::ZeroEvidence => DiagnosticError::UndefinedPosterior,
            other => unreachable!("diagnostic rows are validated before use: {other}"),
        }
    }
}

fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(DiagnosticError::OutOfRange { name, value })
    }
}

/// Sensitivity `P(T+ | D)` and specificity `P(T- | D')` of a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestProfile {
    sensitivity: f64,
    specificity: f64,
}

impl TestProfile {
    pub fn new(sensitivity: f64, specificity: f64) -> Result<Self> {
        Ok(TestProfile {
            sensitivity: unit_interval("sensitivity", sensitivity)?,
            specificity: unit_interval("specificity", specificity)?,
        })
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn specificity(&self) -> f64 {
        self.specificity
    }

    /// Likelihood row `(P(result | D), P(result | D'))`.
    pub fn likelihoods(&self, result: TestResult) -> [f64; 2] {
        match result {
            TestResult::Positive => [self.sensitivity, 1.0 - self.specificity],
            TestResult::Negative => [1.0 - self.sensitivity, self.specificity],
        }
    }
}

/// Prevalence `P(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiseaseModel {
    prevalence: f64,
}

impl DiseaseModel {
    pub fn new(prevalence: f64) -> Result<Self> {
        Ok(DiseaseModel { prevalence: unit_interval("prevalence", prevalence)? })
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestResult {
    Positive,
    Negative,
}

impl TestResult {
    /// Parses a compact sequence such as `++-+`. Commas and whitespace are
    /// ignored.
    pub fn parse_sequence(s: &str) -> Result<Vec<TestResult>> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| c.to_string().parse())
            .collect()
    }
}

impl fmt::Display for TestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestResult::Positive => "+",
            TestResult::Negative => "-",
        })
    }
}

impl FromStr for TestResult {
    type Err = DiagnosticError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "pos" | "positive" => Ok(TestResult::Positive),
            "-" | "neg" | "negative" => Ok(TestResult::Negative),
            other => Err(DiagnosticError::ParseResult(other.to_string())),
        }
    }
}

/// Positive likelihood ratio `Se / (1 - Sp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodRatio {
    Finite(f64),
    /// `Sp = 1` and `Se > 0`: a positive result is conclusive.
    Infinite,
    /// `Sp = 1` and `Se = 0`: a positive result is impossible.
    Indeterminate,
}

impl LikelihoodRatio {
    pub fn exceeds_one(&self) -> bool {
        match *self {
            LikelihoodRatio::Finite(lr) => lr > 1.0,
            LikelihoodRatio::Infinite => true,
            LikelihoodRatio::Indeterminate => false,
        }
    }
}

impl fmt::Display for LikelihoodRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LikelihoodRatio::Finite(lr) => match f.precision() {
                Some(p) => write!(f, "{lr:.p$}"),
                None => write!(f, "{lr}"),
            },
            LikelihoodRatio::Infinite => f.write_str("inf"),
            LikelihoodRatio::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

/// Positive predictive value `P(D | T+)`.
pub fn ppv(profile: &TestProfile, disease: &DiseaseModel) -> Result<f64> {
    ppv_n_positives(profile, disease, 1)
}

/// Negative predictive value `P(D' | T-)`.
pub fn npv(profile: &TestProfile, disease: &DiseaseModel) -> Result<f64> {
    let healthy = 1.0 - disease.prevalence;
    let true_negative = profile.specificity * healthy;
    let total = true_negative + (1.0 - profile.sensitivity) * disease.prevalence;
    if total > 0.0 {
        Ok(true_negative / total)
    } else {
        Err(DiagnosticError::UndefinedPosterior)
    }
}

/// `P(D | n positive results)` in closed form:
/// `Se^n π / (Se^n π + (1 - Sp)^n (1 - π))`.
///
/// Evaluated directly for small `n` and through log-odds when `n` is large or
/// the direct powers underflow.
pub fn ppv_n_positives(profile: &TestProfile, disease: &DiseaseModel, n: u32) -> Result<f64> {
    let pi = disease.prevalence;
    let se = profile.sensitivity;
    let fp = 1.0 - profile.specificity;

    if n as usize <= bayes::LOG_SPACE_THRESHOLD {
        let diseased = se.powi(n as i32) * pi;
        let total = diseased + fp.powi(n as i32) * (1.0 - pi);
        if total > 0.0 {
            return Ok(diseased / total);
        }
    }

    let log_diseased = log_weight(pi, se, n);
    let log_healthy = log_weight(1.0 - pi, fp, n);
    match (log_diseased.is_finite(), log_healthy.is_finite()) {
        (false, false) => Err(DiagnosticError::UndefinedPosterior),
        (true, false) => Ok(1.0),
        (false, true) => Ok(0.0),
        (true, true) => Ok(1.0 / (1.0 + (log_healthy - log_diseased).exp())),
    }
}

fn log_weight(prior: f64, factor: f64, n: u32) -> f64 {
    if prior == 0.0 || (factor == 0.0 && n > 0) {
        f64::NEG_INFINITY
    } else {
        prior.ln() + n as f64 * factor.ln()
    }
}

/// `P(D | results)` for an arbitrary sequence of positives and negatives.
///
/// Goes through the same product/normalization path as
/// [`crate::bayes::extended_bayes`] on the `{D, D'}` partition, with the
/// difference that prevalence 0 or 1 is allowed here.
pub fn posterior_after(
    profile: &TestProfile,
    disease: &DiseaseModel,
    results: &[TestResult],
) -> Result<f64> {
    update_many(profile, disease.prevalence, results)
}

/// One Bayes step from `prior` (the current `P(D)`) on a single result.
pub fn update_posterior(profile: &TestProfile, prior: f64, result: TestResult) -> Result<f64> {
    update_many(profile, unit_interval("prior", prior)?, &[result])
}

fn update_many(profile: &TestProfile, prior: f64, results: &[TestResult]) -> Result<f64> {
    let rows: Vec<[f64; 2]> = results.iter().map(|&r| profile.likelihoods(r)).collect();
    let rows: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let masses = bayes::posterior_masses(&[prior, 1.0 - prior], &rows)?;
    Ok(masses[0])
}

pub fn likelihood_ratio(profile: &TestProfile) -> LikelihoodRatio {
    let fp = 1.0 - profile.specificity;
    if fp > 0.0 {
        LikelihoodRatio::Finite(profile.sensitivity / fp)
    } else if profile.sensitivity > 0.0 {
        LikelihoodRatio::Infinite
    } else {
        LikelihoodRatio::Indeterminate
    }
}

/// Smallest number of consecutive positive results after which
/// `P(D | positives) >= threshold`.
///
/// Requires a likelihood ratio above one and `0 < π < 1`; otherwise the
/// posterior never climbs to the threshold.
pub fn tests_to_confidence(
    profile: &TestProfile,
    disease: &DiseaseModel,
    threshold: f64,
) -> Result<u32> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(DiagnosticError::Threshold(threshold));
    }
    if !likelihood_ratio(profile).exceeds_one() {
        return Err(DiagnosticError::Divergent("likelihood ratio is not above one"));
    }
    let pi = disease.prevalence;
    if pi == 0.0 || pi == 1.0 {
        return Err(DiagnosticError::Divergent("prevalence is 0 or 1"));
    }
    for n in 1..=MAX_CONFIDENCE_SCAN as u32 {
        if ppv_n_positives(profile, disease, n)? >= threshold {
            return Ok(n);
        }
    }
    Err(DiagnosticError::ScanLimit(MAX_CONFIDENCE_SCAN))
}
