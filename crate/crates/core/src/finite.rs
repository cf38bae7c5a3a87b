//! Event algebra over finite sample spaces with equally likely outcomes.
//!
//! Every probability here is an exact [`Rational`]. The independence checks
//! never build intermediate fractions: each definitional equation is
//! cross-multiplied into an identity between outcome counts, which is exact
//! and cheap enough for exhaustive enumeration over small spaces.
//!
//! ```
//! use condbayes::finite::{SampleSpace, probability, is_independent};
//! use condbayes::Rational;
//!
//! let die = SampleSpace::numbered(6);
//! let low = die.event([1, 2, 3]).unwrap();
//! let even_small = die.event([2, 4]).unwrap();
//! assert_eq!(probability(&die, &low).unwrap(), Rational::new(1, 2));
//! assert!(is_independent(&die, &low, &even_small).unwrap());
//! ```

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::rational::Rational;

/// Upper bound on the family size accepted by
/// [`is_conditionally_independent_many`].
pub const MAX_FAMILY_SIZE: usize = 20;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiniteError {
    #[error("sample space must contain at least one outcome")]
    EmptySpace,
    #[error("duplicate outcome `{0}`")]
    DuplicateOutcome(String),
    #[error("outcome `{0}` is not in the sample space")]
    UnknownOutcome(String),
    #[error("outcome index {index} out of range for a space of {size} outcomes")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("event belongs to a different sample space")]
    ForeignEvent,
    #[error("conditioning event has probability zero")]
    ZeroCondition,
    #[error("complement of the conditioning event has probability zero")]
    ZeroComplementCondition,
    #[error("need between 2 and {max} events, got {got}")]
    Arity { got: usize, max: usize },
}

pub type Result<T, E = FiniteError> = std::result::Result<T, E>;

/// A finite set of distinct, equally likely outcomes.
///
/// Cloning is cheap and clones share identity: events built from one clone
/// are accepted by every other.
#[derive(Clone)]
pub struct SampleSpace {
    id: u64,
    labels: Arc<[String]>,
    index: Arc<HashMap<String, usize>>,
}

impl SampleSpace {
    pub fn new<I, L>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(FiniteError::EmptySpace);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(FiniteError::DuplicateOutcome(label.clone()));
            }
        }
        Ok(SampleSpace {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            labels: labels.into(),
            index: Arc::new(index),
        })
    }

    /// The space `{1, 2, ..., size}`.
    ///
    /// Panics if `size` is zero.
    pub fn numbered(size: usize) -> Self {
        SampleSpace::new((1..=size).map(|i| i.to_string())).expect("size must be positive")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Builds an event from outcome labels. Labels are matched by their
    /// `Display` form, so `space.event([1, 2])` works on a numbered space.
    pub fn event<I, L>(&self, members: I) -> Result<Event>
    where
        I: IntoIterator<Item = L>,
        L: ToString,
    {
        let mut event = self.empty_event();
        for member in members {
            let label = member.to_string();
            let &i = self
                .index
                .get(&label)
                .ok_or(FiniteError::UnknownOutcome(label))?;
            event.insert(i);
        }
        Ok(event)
    }

    /// Builds an event from zero-based outcome positions.
    pub fn event_from_indices<I>(&self, indices: I) -> Result<Event>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut event = self.empty_event();
        for i in indices {
            if i >= self.len() {
                return Err(FiniteError::IndexOutOfRange { index: i, size: self.len() });
            }
            event.insert(i);
        }
        Ok(event)
    }

    /// Builds an event from a bit mask over the first 64 outcome positions.
    pub fn event_from_mask(&self, mask: u64) -> Result<Event> {
        if self.len() < 64 && mask >> self.len() != 0 {
            let index = 63 - mask.leading_zeros() as usize;
            return Err(FiniteError::IndexOutOfRange { index, size: self.len() });
        }
        let mut event = self.empty_event();
        event.words[0] = mask;
        Ok(event)
    }

    pub fn empty_event(&self) -> Event {
        Event {
            space_id: self.id,
            size: self.len(),
            words: SmallVec::from_elem(0, self.len().div_ceil(64)),
        }
    }

    pub fn full_event(&self) -> Event {
        self.empty_event().complement()
    }

    pub fn contains(&self, event: &Event) -> bool {
        event.space_id == self.id
    }

    /// Renders an event as `{a, b, c}` using outcome labels.
    pub fn describe(&self, event: &Event) -> String {
        let members: Vec<&str> = event.indices().map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", members.join(", "))
    }

    fn check(&self, event: &Event) -> Result<()> {
        if self.contains(event) {
            Ok(())
        } else {
            Err(FiniteError::ForeignEvent)
        }
    }
}

impl fmt::Debug for SampleSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleSpace")
            .field("id", &self.id)
            .field("outcomes", &self.labels.len())
            .finish()
    }
}

impl PartialEq for SampleSpace {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for SampleSpace {}

/// A subset of one particular [`SampleSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    space_id: u64,
    size: usize,
    words: SmallVec<[u64; 2]>,
}

impl Event {
    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains_index(&self, i: usize) -> bool {
        i < self.size && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    /// Number of outcomes in the event.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.size
    }

    /// Zero-based outcome positions, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&i| self.contains_index(i))
    }

    pub fn complement(&self) -> Event {
        let mut words: SmallVec<[u64; 2]> = self.words.iter().map(|w| !w).collect();
        let tail = self.size % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        Event { space_id: self.space_id, size: self.size, words }
    }

    pub fn intersection(&self, other: &Event) -> Result<Event> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Event) -> Result<Event> {
        self.zip_with(other, |a, b| a | b)
    }

    fn zip_with(&self, other: &Event, f: impl Fn(u64, u64) -> u64) -> Result<Event> {
        if self.space_id != other.space_id {
            return Err(FiniteError::ForeignEvent);
        }
        Ok(Event {
            space_id: self.space_id,
            size: self.size,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    fn count_and(&self, other: &Event) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}

/// Whether a family of events is tested pairwise or over every subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMode {
    Pairwise,
    Mutual,
}

/// Independence and conditional independence of a pair, given `B` and `B'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairClassification {
    pub independent: bool,
    pub ci_given_b: bool,
    pub ci_given_b_complement: bool,
}

/// `|a| / |S|`.
pub fn probability(space: &SampleSpace, a: &Event) -> Result<Rational> {
    space.check(a)?;
    Ok(Rational::from_counts(a.count(), space.len()))
}

/// `|a ∩ b| / |b|`; `b` must be non-empty.
pub fn conditional_probability(space: &SampleSpace, a: &Event, b: &Event) -> Result<Rational> {
    space.check(a)?;
    space.check(b)?;
    let given = b.count();
    if given == 0 {
        return Err(FiniteError::ZeroCondition);
    }
    Ok(Rational::from_counts(a.count_and(b), given))
}

/// Product-form independence: `P(a1 ∩ a2) = P(a1) P(a2)`.
///
/// Defined for every pair of events, including null ones.
pub fn is_independent(space: &SampleSpace, a1: &Event, a2: &Event) -> Result<bool> {
    space.check(a1)?;
    space.check(a2)?;
    // |a1 ∩ a2| / n = (|a1| / n)(|a2| / n)  <=>  |a1 ∩ a2| n = |a1| |a2|
    Ok(product_identity(a1.count_and(a2), space.len(), &[a1.count(), a2.count()]))
}

/// `P(a1 ∩ a2 | b) = P(a1 | b) P(a2 | b)`; `b` must be non-empty.
pub fn is_conditionally_independent(
    space: &SampleSpace,
    a1: &Event,
    a2: &Event,
    b: &Event,
) -> Result<bool> {
    space.check(a1)?;
    space.check(a2)?;
    space.check(b)?;
    let given = b.count();
    if given == 0 {
        return Err(FiniteError::ZeroCondition);
    }
    let a1b = a1.intersection(b)?;
    Ok(product_identity(
        a1b.count_and(a2),
        given,
        &[a1b.count(), a2.count_and(b)],
    ))
}

/// Conditional independence of a family of `2..=20` events given `b`.
///
/// [`CiMode::Pairwise`] checks every pair; [`CiMode::Mutual`] checks every
/// index subset of size at least two (`2^n - n - 1` identities).
pub fn is_conditionally_independent_many(
    space: &SampleSpace,
    events: &[Event],
    b: &Event,
    mode: CiMode,
) -> Result<bool> {
    let n = events.len();
    if !(2..=MAX_FAMILY_SIZE).contains(&n) {
        return Err(FiniteError::Arity { got: n, max: MAX_FAMILY_SIZE });
    }
    space.check(b)?;
    for e in events {
        space.check(e)?;
    }
    let given = b.count();
    if given == 0 {
        return Err(FiniteError::ZeroCondition);
    }
    let restricted: Vec<Event> = events
        .iter()
        .map(|e| e.intersection(b))
        .collect::<Result<_>>()?;
    let marginals: Vec<usize> = restricted.iter().map(Event::count).collect();

    match mode {
        CiMode::Pairwise => {
            for i in 0..n {
                for j in i + 1..n {
                    let joint = restricted[i].count_and(&restricted[j]);
                    if !product_identity(joint, given, &[marginals[i], marginals[j]]) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        CiMode::Mutual => {
            let mut picked = Vec::with_capacity(n);
            for subset in 1u32..(1 << n) {
                if subset.count_ones() < 2 {
                    continue;
                }
                picked.clear();
                let mut joint = b.clone();
                for (i, event) in restricted.iter().enumerate() {
                    if subset & (1 << i) != 0 {
                        joint = joint.intersection(event)?;
                        picked.push(marginals[i]);
                    }
                }
                if !product_identity(joint.count(), given, &picked) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Independence, CI given `b`, and CI given `b'` in one call.
///
/// Both `b` and its complement must be non-empty.
pub fn classify_pair(
    space: &SampleSpace,
    a1: &Event,
    a2: &Event,
    b: &Event,
) -> Result<PairClassification> {
    space.check(b)?;
    let b_complement = b.complement();
    if b_complement.is_empty() {
        return Err(FiniteError::ZeroComplementCondition);
    }
    Ok(PairClassification {
        independent: is_independent(space, a1, a2)?,
        ci_given_b: is_conditionally_independent(space, a1, a2, b)?,
        ci_given_b_complement: is_conditionally_independent(space, a1, a2, &b_complement)?,
    })
}

/// True when `a1` is independent of both `b` and `a2 ∩ b`.
///
/// These premises are sufficient for `a1` and `a2` to be conditionally
/// independent given `b`.
pub fn ci_premises_hold(space: &SampleSpace, a1: &Event, a2: &Event, b: &Event) -> Result<bool> {
    space.check(a2)?;
    space.check(b)?;
    if b.is_empty() {
        return Err(FiniteError::ZeroCondition);
    }
    Ok(is_independent(space, a1, b)? && is_independent(space, a1, &a2.intersection(b)?)?)
}

/// Checks `joint * base^(k-1) == Π factors` where `k = factors.len()`.
///
/// This is `joint / base == Π (factor / base)` with denominators cleared.
fn product_identity(joint: usize, base: usize, factors: &[usize]) -> bool {
    let k = factors.len() as u32;
    let fast = (|| {
        let lhs = (base as u128)
            .checked_pow(k - 1)?
            .checked_mul(joint as u128)?;
        let rhs = factors
            .iter()
            .try_fold(1u128, |acc, &f| acc.checked_mul(f as u128))?;
        Some(lhs == rhs)
    })();
    fast.unwrap_or_else(|| {
        let lhs = BigUint::from(base).pow(k - 1) * BigUint::from(joint);
        let rhs: BigUint = factors.iter().map(|&f| BigUint::from(f)).product();
        lhs == rhs
    })
}
