//! Exact conditional independence on finite sample spaces, Bayes' rule with
//! several conditionally independent pieces of evidence, and sequential
//! diagnostic testing built on top of it.
//!
//! * [`finite`] decides independence and conditional independence of events
//!   exactly, over equally likely outcomes.
//! * [`bayes`] computes posteriors over a partition from priors and a matrix
//!   of per-cell likelihoods.
//! * [`diagnostics`] specializes that to disease testing: PPV, NPV and the
//!   posterior after any sequence of results.
//! * [`sequential`] runs the two-threshold stopping rule, one session at a
//!   time or as a seeded Monte Carlo study.
//! * [`data`] reads region prevalence files and scenario files and renders
//!   reports.
//!
//! The guide in `book/` walks through each of these with runnable snippets;
//! its code blocks are compiled and run as doc-tests of this crate.

pub mod bayes;
pub mod data;
pub mod diagnostics;
pub mod finite;
pub mod rational;
pub mod sequential;

pub use rational::Rational;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/events.md")]
    mod events {}
    #[doc = include_str!("../../../book/src/conditional-independence.md")]
    mod conditional_independence {}
    #[doc = include_str!("../../../book/src/extended-bayes.md")]
    mod extended_bayes {}
    #[doc = include_str!("../../../book/src/diagnostic-testing.md")]
    mod diagnostic_testing {}
    #[doc = include_str!("../../../book/src/sequential-testing.md")]
    mod sequential_testing {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
