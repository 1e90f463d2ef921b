//! Shared domain types: privacy budgets, priors, beliefs and decision problems.
//!
//! States are zero-indexed by the count `ω ∈ {0, …, N}`. Databases are
//! indexed by the integer whose binary representation is `θ`, with the first
//! respondent in the most significant position, so for `N = 2` the order is
//! `(0,0), (0,1), (1,0), (1,1)`.

use crate::error::{invalid, Error, Result};

/// L1 tolerance for "sums to one".
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Absolute tolerance on log-ratio comparisons.
pub const LOG_RATIO_TOL: f64 = 1e-9;
/// L∞ distance under which two beliefs are treated as the same point.
pub const DEDUP_TOL: f64 = 1e-7;

/// Largest number of respondents for which a database index fits the
/// in-memory tables used here.
pub const MAX_RESPONDENTS: usize = 30;

/// Privacy loss `ε` in natural-log units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EpsilonBudget(f64);

impl EpsilonBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
        }
        Ok(Self(epsilon))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_probability_vector(probs: &[f64], strictly_positive: bool, what: &str) -> Result<()> {
    if probs.is_empty() {
        return invalid(format!("{what} is empty"));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return invalid(format!("{what} entry {i} is not finite"));
        }
        if strictly_positive && p <= 0.0 {
            return invalid(format!("{what} entry {i} = {p} must be strictly positive (full support)"));
        }
        if p < 0.0 {
            return invalid(format!("{what} entry {i} = {p} is negative"));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return invalid(format!("{what} sums to {total}, not 1"));
    }
    Ok(())
}

/// Full-support prior over states `{0, …, N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrior {
    probs: Vec<f64>,
}

impl StatePrior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, true, "state prior")?;
        if probs.len() < 2 {
            return invalid("state prior needs at least two states (N >= 1)");
        }
        Ok(Self { probs })
    }

    /// Uniform prior over `N + 1` states.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / (n + 1) as f64; n + 1])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of respondents `N`.
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn as_belief(&self) -> StateBelief {
        StateBelief { probs: self.probs.clone() }
    }
}

impl AsRef<[f64]> for StatePrior {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// Full-support prior over the `2^N` databases.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabasePrior {
    n: usize,
    probs: Vec<f64>,
}

impl DatabasePrior {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_RESPONDENTS {
            return invalid(format!("number of respondents must be in 1..={MAX_RESPONDENTS}, got {n}"));
        }
        if probs.len() != 1 << n {
            return Err(Error::Dimension { what: "database prior", expected: 1 << n, got: probs.len() });
        }
        check_probability_vector(&probs, true, "database prior")?;
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// True iff databases that are permutations of each other (equivalently,
    /// share a state) carry the same prior probability.
    pub fn is_symmetric(&self) -> bool {
        let mut by_state: Vec<Option<f64>> = vec![None; self.n + 1];
        for (index, &p) in self.probs.iter().enumerate() {
            let w = state_of_index(index);
            match by_state[w] {
                None => by_state[w] = Some(p),
                Some(q) if (p / q).ln().abs() > LOG_RATIO_TOL => return false,
                Some(_) => {}
            }
        }
        true
    }

    /// The induced prior over states.
    pub fn state_prior(&self) -> StatePrior {
        StatePrior { probs: project(self.n, &self.probs) }
    }

    pub fn as_belief(&self) -> DatabaseBelief {
        DatabaseBelief { probs: self.probs.clone() }
    }
}

impl AsRef<[f64]> for DatabasePrior {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// Posterior over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBelief {
    probs: Vec<f64>,
}

/// Posterior over databases.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseBelief {
    probs: Vec<f64>,
}

/// Common surface of state and database beliefs.
pub trait Belief: AsRef<[f64]> + Clone {
    fn new(probs: Vec<f64>) -> Result<Self>;

    /// Builds a belief without validation. Callers guarantee the invariants.
    fn from_raw(probs: Vec<f64>) -> Self;

    fn probs(&self) -> &[f64] {
        self.as_ref()
    }

    fn len(&self) -> usize {
        self.as_ref().len()
    }

    fn is_empty(&self) -> bool {
        self.as_ref().is_empty()
    }

    /// L∞ distance to another belief of the same dimension.
    fn distance(&self, other: &Self) -> f64 {
        self.as_ref()
            .iter()
            .zip(other.as_ref())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

macro_rules! belief_impl {
    ($ty:ident, $what:literal) => {
        impl AsRef<[f64]> for $ty {
            fn as_ref(&self) -> &[f64] {
                &self.probs
            }
        }

        impl Belief for $ty {
            fn new(probs: Vec<f64>) -> Result<Self> {
                check_probability_vector(&probs, false, $what)?;
                Ok(Self { probs })
            }

            fn from_raw(probs: Vec<f64>) -> Self {
                Self { probs }
            }
        }

        impl $ty {
            /// Point mass on a single index.
            pub fn point_mass(len: usize, at: usize) -> Self {
                let mut probs = vec![0.0; len];
                probs[at] = 1.0;
                Self { probs }
            }

            /// Rescales a nonnegative vector to sum to one.
            pub fn normalized(weights: Vec<f64>) -> Result<Self> {
                let total: f64 = weights.iter().sum();
                if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
                    return invalid(concat!("cannot normalize ", $what));
                }
                Ok(Self { probs: weights.into_iter().map(|w| w / total).collect() })
            }
        }
    };
}

belief_impl!(StateBelief, "state belief");
belief_impl!(DatabaseBelief, "database belief");

impl StateBelief {
    /// Number of respondents `N` implied by the dimension.
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Finite action set with a payoff table `u(a, ω)`; rows are actions.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    actions: Vec<f64>,
    payoffs: Vec<Vec<f64>>,
}

impl DecisionProblem {
    pub fn new(actions: Vec<f64>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() {
            return invalid("decision problem needs at least one action");
        }
        if actions.iter().any(|a| !a.is_finite()) {
            return invalid("action labels must be finite");
        }
        if actions.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("action labels must be strictly increasing");
        }
        if payoffs.len() != actions.len() {
            return Err(Error::Dimension { what: "payoff rows", expected: actions.len(), got: payoffs.len() });
        }
        let states = payoffs[0].len();
        if states < 2 {
            return invalid("payoff rows need at least two states");
        }
        for (i, row) in payoffs.iter().enumerate() {
            if row.len() != states {
                return invalid(format!("payoff row {i} has {} entries, expected {states}", row.len()));
            }
            if let Some(j) = row.iter().position(|u| !u.is_finite()) {
                return invalid(format!("payoff u({i},{j}) is not finite"));
            }
        }
        Ok(Self { actions, payoffs })
    }

    /// Actions labelled `0, 1, …` in row order.
    pub fn with_indexed_actions(payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let actions = (0..payoffs.len()).map(|i| i as f64).collect();
        Self::new(actions, payoffs)
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn payoff(&self, action: usize, state: usize) -> f64 {
        self.payoffs[action][state]
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_states(&self) -> usize {
        self.payoffs[0].len()
    }

    pub(crate) fn check_states(&self, states: usize) -> Result<()> {
        if self.num_states() != states {
            return Err(Error::Dimension { what: "payoff columns", expected: states, got: self.num_states() });
        }
        Ok(())
    }
}

/// Number of type-1 respondents in a database given as bits.
pub fn state_of_database(theta: &[u8]) -> usize {
    theta.iter().filter(|&&b| b != 0).count()
}

/// Number of type-1 respondents in the database with the given index.
#[inline]
pub fn state_of_index(index: usize) -> usize {
    index.count_ones() as usize
}

/// Index of a database given as bits, first respondent most significant.
pub fn database_index(theta: &[u8]) -> usize {
    theta.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b != 0))
}

/// Bits of the database with the given index.
pub fn database_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((index >> (n - 1 - k)) & 1) as u8).collect()
}

fn project(n: usize, probs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (index, &p) in probs.iter().enumerate() {
        out[state_of_index(index)] += p;
    }
    out
}

/// Collapses a belief over databases to the induced belief over states.
pub fn project_belief(pi: &DatabaseBelief) -> StateBelief {
    let n = pi.len().trailing_zeros() as usize;
    StateBelief { probs: project(n, pi.probs()) }
}

/// The unique symmetric prior over databases whose projection is `mu0`.
pub fn symmetric_prior_from_state_prior(mu0: &StatePrior) -> Result<DatabasePrior> {
    let n = mu0.n();
    if n > MAX_RESPONDENTS {
        return Err(Error::CapExceeded { what: "respondents", requested: n, cap: MAX_RESPONDENTS });
    }
    let binom = binomial_row(n);
    let probs = (0..1usize << n)
        .map(|index| {
            let w = state_of_index(index);
            mu0.probs()[w] / binom[w]
        })
        .collect();
    Ok(DatabasePrior { n, probs })
}

/// `C(n, k)` for `k = 0..=n` as floats.
pub(crate) fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..=n {
        row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    row
}
