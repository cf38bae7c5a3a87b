//! Reference computations for the integration tests.
//!
//! Events are plain bit masks over outcomes `0..n` and probabilities are
//! `Ratio<i64>` counts, kept separate from the library's own event type.

#![allow(dead_code)]

use num_rational::Ratio;

pub type Q = Ratio<i64>;

pub fn count(mask: u64) -> i64 {
    i64::from(mask.count_ones())
}

pub fn full(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn prob(n: usize, a: u64) -> Q {
    Q::new(count(a), n as i64)
}

pub fn cond(a: u64, b: u64) -> Q {
    Q::new(count(a & b), count(b))
}

pub fn independent(n: usize, a1: u64, a2: u64) -> bool {
    prob(n, a1 & a2) == prob(n, a1) * prob(n, a2)
}

pub fn ci(a1: u64, a2: u64, b: u64) -> bool {
    cond(a1 & a2, b) == cond(a1, b) * cond(a2, b)
}

/// Every subset of at least two events factorizes given `b`.
pub fn mutual_ci(events: &[u64], b: u64) -> bool {
    (1u32..1 << events.len()).filter(|s| s.count_ones() >= 2).all(|subset| {
        let picked: Vec<u64> = events
            .iter()
            .enumerate()
            .filter(|(i, _)| subset & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let joint = picked.iter().fold(b, |acc, &e| acc & e);
        let product = picked.iter().fold(Q::from_integer(1), |acc, &e| acc * cond(e, b));
        cond(joint, b) == product
    })
}

pub fn pairwise_ci(events: &[u64], b: u64) -> bool {
    (0..events.len())
        .all(|i| (i + 1..events.len()).all(|j| ci(events[i], events[j], b)))
}

/// Mask from 1-based outcome labels.
pub fn mask(members: &[u64]) -> u64 {
    members.iter().fold(0, |acc, &m| acc | 1 << (m - 1))
}
