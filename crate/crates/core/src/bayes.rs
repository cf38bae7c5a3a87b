//! Bayes' rule over a finite partition, with several pieces of evidence.
//!
//! Given priors `P(B_k)` over a partition and likelihoods `P(A_i | B_k)` for
//! evidence events that are conditionally independent within every cell, the
//! posterior of cell `k` is
//!
//! ```text
//! P(B_k | A_1 ∩ … ∩ A_n) = P(B_k) Π_i P(A_i | B_k) / Σ_j P(B_j) Π_i P(A_i | B_j)
//! ```
//!
//! The conditional independence assumption is the caller's responsibility;
//! nothing here can check it from marginal likelihoods alone.
//!
//! Arithmetic is `f64`. Within each cell the factors are multiplied in
//! ascending order of value, and cells are summed in index order, so the
//! result is bit-for-bit independent of the order the evidence arrives in.
//! Products of more than [`LOG_SPACE_THRESHOLD`] factors, or products that
//! underflow, are evaluated as sums of logarithms.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Products with more factors than this are accumulated in log space.
pub const LOG_SPACE_THRESHOLD: usize = 30;

/// Allowed deviation of the prior total from one.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("a partition needs at least two cells, got {0}")]
    TooFewCells(usize),
    #[error("{labels} labels for {priors} priors")]
    LabelCount { labels: usize, priors: usize },
    #[error("prior for cell {index} must be strictly positive, got {value}")]
    NonPositivePrior { index: usize, value: f64 },
    #[error("priors sum to {0}, expected 1")]
    PriorSum(f64),
    #[error("probability {value} at row {row}, cell {cell} is outside [0, 1]")]
    OutOfRange { row: usize, cell: usize, value: f64 },
    #[error("likelihood row {row} has {got} entries, partition has {expected} cells")]
    DimensionMismatch { row: usize, expected: usize, got: usize },
    #[error("likelihood matrix has no rows")]
    EmptyMatrix,
    #[error("observed evidence has probability zero under the model")]
    ZeroEvidence,
}

pub type Result<T, E = BayesError> = std::result::Result<T, E>;

/// Prior masses over `m >= 2` mutually exclusive, exhaustive cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionModel {
    labels: Vec<String>,
    priors: Vec<f64>,
}

impl PartitionModel {
    /// Priors must be strictly positive and sum to one within
    /// [`PRIOR_SUM_TOLERANCE`]; they are stored divided by their sum.
    pub fn new<L: Into<String>>(labels: Vec<L>, priors: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if priors.len() < 2 {
            return Err(BayesError::TooFewCells(priors.len()));
        }
        if labels.len() != priors.len() {
            return Err(BayesError::LabelCount { labels: labels.len(), priors: priors.len() });
        }
        for (index, &value) in priors.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(BayesError::NonPositivePrior { index, value });
            }
        }
        let total = ordered_sum(&priors);
        if (total - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(BayesError::PriorSum(total));
        }
        let priors = priors.into_iter().map(|p| p / total).collect();
        Ok(PartitionModel { labels, priors })
    }

    /// Cells labelled `0..m`.
    pub fn unlabelled(priors: Vec<f64>) -> Result<Self> {
        let labels = (0..priors.len()).map(|k| k.to_string()).collect();
        Self::new(labels, priors)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn cells(&self) -> usize {
        self.priors.len()
    }
}

/// `P(A_i | B_k)` for `n >= 1` evidence events (rows) and `m` cells (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodMatrix {
    rows: Vec<Vec<f64>>,
}

impl LikelihoodMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let first = rows.first().ok_or(BayesError::EmptyMatrix)?;
        let width = first.len();
        for (i, row) in rows.iter().enumerate() {
            check_row(row, width, i)?;
        }
        Ok(LikelihoodMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn cells(&self) -> usize {
        self.rows[0].len()
    }
}

/// Posterior masses over the cells of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDistribution {
    labels: Vec<String>,
    masses: Vec<f64>,
}

impl PosteriorDistribution {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|k| self.masses[k])
    }

    /// The prior of a model, viewed as a posterior on no evidence.
    pub fn from_prior(model: &PartitionModel) -> Self {
        PosteriorDistribution { labels: model.labels.clone(), masses: model.priors.clone() }
    }
}

/// Single-evidence Bayes' rule; identical to [`extended_bayes`] with one row.
pub fn bayes_posterior(model: &PartitionModel, likelihood_row: &[f64]) -> Result<PosteriorDistribution> {
    check_row(likelihood_row, model.cells(), 0)?;
    let masses = posterior_masses(&model.priors, &[likelihood_row])?;
    Ok(PosteriorDistribution { labels: model.labels.clone(), masses })
}

/// Posterior over the partition given every row of `likelihoods`.
pub fn extended_bayes(
    model: &PartitionModel,
    likelihoods: &LikelihoodMatrix,
) -> Result<PosteriorDistribution> {
    if likelihoods.cells() != model.cells() {
        return Err(BayesError::DimensionMismatch {
            row: 0,
            expected: model.cells(),
            got: likelihoods.cells(),
        });
    }
    let rows: Vec<&[f64]> = likelihoods.rows.iter().map(Vec::as_slice).collect();
    let masses = posterior_masses(&model.priors, &rows)?;
    Ok(PosteriorDistribution { labels: model.labels.clone(), masses })
}

/// Folds one more piece of evidence into an existing posterior.
///
/// Cells that already carry zero mass stay at zero.
pub fn sequential_update(
    current: &PosteriorDistribution,
    likelihood_row: &[f64],
) -> Result<PosteriorDistribution> {
    check_row(likelihood_row, current.masses.len(), 0)?;
    let masses = posterior_masses(&current.masses, &[likelihood_row])?;
    Ok(PosteriorDistribution { labels: current.labels.clone(), masses })
}

/// Probability of observing every evidence event: `Σ_k P(B_k) Π_i P(A_i | B_k)`.
///
/// Generic so it can be evaluated exactly over rationals.
pub fn evidence_probability<T>(priors: &[T], rows: &[Vec<T>]) -> T
where
    T: Clone + Zero + One,
{
    priors
        .iter()
        .enumerate()
        .map(|(k, prior)| {
            rows.iter()
                .fold(prior.clone(), |acc, row| acc * row[k].clone())
        })
        .fold(T::zero(), |acc, w| acc + w)
}

/// `Π_i Σ_k P(A_i | B_k) P(B_k)`: the evidence probability one gets by
/// wrongly treating the `A_i` as unconditionally independent.
///
/// Only equal to [`evidence_probability`] in special cases. Kept as a
/// reference for that mistake.
pub fn naive_evidence_probability<T>(priors: &[T], rows: &[Vec<T>]) -> T
where
    T: Clone + Zero + One,
{
    rows.iter()
        .map(|row| {
            priors
                .iter()
                .zip(row)
                .fold(T::zero(), |acc, (p, l)| acc + p.clone() * l.clone())
        })
        .fold(T::one(), |acc, marginal| acc * marginal)
}

fn check_row(row: &[f64], expected: usize, index: usize) -> Result<()> {
    if row.len() != expected {
        return Err(BayesError::DimensionMismatch { row: index, expected, got: row.len() });
    }
    for (cell, &value) in row.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(BayesError::OutOfRange { row: index, cell, value });
        }
    }
    Ok(())
}

/// Normalized `prior_k Π_i row_i[k]`. Priors may contain zeros.
pub(crate) fn posterior_masses(priors: &[f64], rows: &[&[f64]]) -> Result<Vec<f64>> {
    let mut factors = Vec::with_capacity(rows.len());
    let cell_factors = |k: usize, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend(rows.iter().map(|row| row[k]));
        buf.sort_by(f64::total_cmp);
    };

    if rows.len() <= LOG_SPACE_THRESHOLD {
        let mut weights = Vec::with_capacity(priors.len());
        for (k, &prior) in priors.iter().enumerate() {
            cell_factors(k, &mut factors);
            weights.push(factors.iter().fold(prior, |acc, &f| acc * f));
        }
        let total = ordered_sum(&weights);
        if total > 0.0 && total.is_finite() {
            return Ok(weights.into_iter().map(|w| w / total).collect());
        }
    }

    // log space: either many factors or the direct products underflowed
    let mut logs = Vec::with_capacity(priors.len());
    for (k, &prior) in priors.iter().enumerate() {
        cell_factors(k, &mut factors);
        let log_weight = if prior == 0.0 || factors.first() == Some(&0.0) {
            f64::NEG_INFINITY
        } else {
            factors.iter().fold(prior.ln(), |acc, &f| acc + f.ln())
        };
        logs.push(log_weight);
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Err(BayesError::ZeroEvidence);
    }
    let weights: Vec<f64> = logs.iter().map(|&l| (l - peak).exp()).collect();
    let total = ordered_sum(&weights);
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Left-to-right sum; the fixed order is what makes results reproducible.
fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, &v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    fn two_cell(p: f64) -> PartitionModel {
        PartitionModel::new(vec!["D", "healthy"], vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn model_validation() {
        assert_eq!(PartitionModel::unlabelled(vec![1.0]).unwrap_err(), BayesError::TooFewCells(1));
        assert_eq!(
            PartitionModel::unlabelled(vec![0.0, 1.0]).unwrap_err(),
            BayesError::NonPositivePrior { index: 0, value: 0.0 }
        );
        assert!(matches!(
            PartitionModel::unlabelled(vec![0.5, 0.6]),
            Err(BayesError::PriorSum(_))
        ));
        assert!(matches!(
            PartitionModel::new(vec!["a"], vec![0.5, 0.5]),
            Err(BayesError::LabelCount { .. })
        ));
        let m = PartitionModel::unlabelled(vec![0.1, 0.2, 0.7]).unwrap();
        assert!((m.priors().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn matrix_validation() {
        assert_eq!(LikelihoodMatrix::new(vec![]).unwrap_err(), BayesError::EmptyMatrix);
        assert!(matches!(
            LikelihoodMatrix::new(vec![vec![0.5, 0.5], vec![0.5]]),
            Err(BayesError::DimensionMismatch { row: 1, expected: 2, got: 1 })
        ));
        assert!(matches!(
            LikelihoodMatrix::new(vec![vec![0.5, 1.5]]),
            Err(BayesError::OutOfRange { row: 0, cell: 1, .. })
        ));
        let m = two_cell(0.5);
        let l = LikelihoodMatrix::new(vec![vec![0.5, 0.5, 0.5]]).unwrap();
        assert!(matches!(extended_bayes(&m, &l), Err(BayesError::DimensionMismatch { .. })));
    }

    #[test]
    fn single_positive_test() {
        let post = bayes_posterior(&two_cell(0.001), &[0.95, 0.05]).unwrap();
        assert_eq!((post.masses()[0] * 1000.0).round() / 1000.0, 0.019);
        assert_eq!(post.mass("D"), Some(post.masses()[0]));
    }

    #[test]
    fn three_cell_against_joint_table() {
        // oracle: joint products normalized by their sum
        let priors = [0.5, 0.3, 0.2];
        let row = [0.2, 0.5, 0.9];
        let joint: Vec<f64> = priors.iter().zip(&row).map(|(p, l)| p * l).collect();
        let evidence: f64 = joint.iter().sum();
        let model = PartitionModel::unlabelled(priors.to_vec()).unwrap();
        let post = bayes_posterior(&model, &row).unwrap();
        for (got, want) in post.masses().iter().zip(&joint) {
            assert!((got - want / evidence).abs() <= 1e-15);
        }
        // 0.10 / 0.43, 0.15 / 0.43, 0.18 / 0.43
        assert!((post.masses()[0] - 10.0 / 43.0).abs() <= 1e-15);
        assert!((post.masses()[2] - 18.0 / 43.0).abs() <= 1e-15);
    }

    #[test]
    fn uniform_prior_constant_row() {
        let model = PartitionModel::unlabelled(vec![0.25; 4]).unwrap();
        let post = bayes_posterior(&model, &[0.3; 4]).unwrap();
        assert!(post.masses().iter().all(|&m| m == 0.25));
    }

    #[test]
    fn zero_evidence() {
        let model = two_cell(0.3);
        assert_eq!(bayes_posterior(&model, &[0.0, 0.0]).unwrap_err(), BayesError::ZeroEvidence);
        let l = LikelihoodMatrix::new(vec![vec![1.0, 0.0]; 40]).unwrap();
        assert!(extended_bayes(&model, &l).is_ok());
        let l = LikelihoodMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(extended_bayes(&model, &l).unwrap_err(), BayesError::ZeroEvidence);
    }

    #[test]
    fn two_and_four_positive_tests() {
        let model = two_cell(0.001);
        let two = LikelihoodMatrix::new(vec![vec![0.95, 0.05]; 2]).unwrap();
        let p2 = extended_bayes(&model, &two).unwrap().masses()[0];
        assert_eq!((p2 * 1000.0).round() / 1000.0, 0.265);

        let mut post = PosteriorDistribution::from_prior(&model);
        for _ in 0..4 {
            post = sequential_update(&post, &[0.95, 0.05]).unwrap();
        }
        assert_eq!((post.masses()[0] * 1000.0).round() / 1000.0, 0.992);
    }

    #[test]
    fn uninformative_row_leaves_posterior() {
        let model = PartitionModel::unlabelled(vec![0.2, 0.3, 0.5]).unwrap();
        let start = PosteriorDistribution::from_prior(&model);
        let next = sequential_update(&start, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(next.masses(), start.masses());
    }

    #[test]
    fn mixed_rows_against_extended_precision_oracle() {
        // oracle: numerator/denominator evaluated term by term in exact rationals
        let priors = [0.3, 0.7];
        let rows = [[0.9, 0.2], [0.35, 0.6], [0.8, 0.45]];
        let exact = |x: f64| Rational::from_decimal_str(&x.to_string()).unwrap();
        let exact_priors: Vec<Rational> = priors.iter().map(|&p| exact(p)).collect();
        let exact_rows: Vec<Vec<Rational>> =
            rows.iter().map(|r| r.iter().map(|&x| exact(x)).collect()).collect();
        let denominator = evidence_probability(&exact_priors, &exact_rows);
        let numerator = exact_rows
            .iter()
            .fold(exact_priors[0].clone(), |acc, row| acc * row[0].clone());
        // 0.3*0.9*0.35*0.8 = 0.0756 ; 0.7*0.2*0.6*0.45 = 0.0378 ; 0.0756/0.1134 = 2/3
        assert_eq!(denominator, Rational::new(1134, 10000));
        assert_eq!(numerator, Rational::new(756, 10000));

        let model = PartitionModel::unlabelled(priors.to_vec()).unwrap();
        let l = LikelihoodMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap();
        let post = extended_bayes(&model, &l).unwrap();
        assert!((post.masses()[0] - 2.0 / 3.0).abs() <= 1e-15);
        assert!((post.masses()[1] - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn log_space_handles_long_evidence() {
        let model = two_cell(0.5);
        // 200 weak positives: direct products would underflow to 0
        let l = LikelihoodMatrix::new(vec![vec![1e-3, 5e-4]; 200]).unwrap();
        let post = extended_bayes(&model, &l).unwrap();
        // odds 2^200 : 1
        let expected_healthy = 1.0 / (1.0 + 2f64.powi(200));
        assert!(((post.masses()[1] - expected_healthy) / expected_healthy).abs() <= 1e-9);
        assert!((post.masses()[0] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn underflow_below_threshold_falls_back_to_logs() {
        let model = two_cell(0.5);
        let l = LikelihoodMatrix::new(vec![vec![1e-200, 2e-200]; 2]).unwrap();
        let post = extended_bayes(&model, &l).unwrap();
        assert!((post.masses()[0] - 0.2).abs() <= 1e-12);
    }

    #[test]
    fn naive_and_correct_evidence_coincide_for_single_row() {
        let priors = vec![Rational::new(1, 3), Rational::new(2, 3)];
        let rows = vec![vec![Rational::new(1, 2), Rational::new(1, 4)]];
        assert_eq!(
            evidence_probability(&priors, &rows),
            naive_evidence_probability(&priors, &rows)
        );
    }
}
