//! Reference mechanisms, privacy verification and ex-ante values.

use crate::decision::interim_value;
use crate::design::SignalMatrix;
use crate::distribution::BeliefDistribution;
use crate::error::{Error, Result};
use crate::model::{
    database_bits, Belief, DecisionProblem, EpsilonBudget, StateBelief, StatePrior, DEDUP_TOL, LOG_RATIO_TOL,
};

/// A mechanism whose output depends on the database only through the count.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousMechanism {
    signal: SignalMatrix,
    label: String,
}

impl ObliviousMechanism {
    pub fn new(label: impl Into<String>, signal: SignalMatrix) -> Result<Self> {
        if signal.num_inputs() < 2 {
            return Err(Error::Invalid("an oblivious mechanism needs at least two states".into()));
        }
        Ok(Self { signal, label: label.into() })
    }

    pub fn signal(&self) -> &SignalMatrix {
        &self.signal
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of respondents.
    pub fn n(&self) -> usize {
        self.signal.num_inputs() - 1
    }

    /// Constant output.
    pub fn uninformative(n: usize) -> Result<Self> {
        Self::new("uninformative", SignalMatrix::new(vec!["0".into()], vec![vec![1.0]; n + 1])?)
    }

    /// Publishes the count exactly.
    pub fn identity(n: usize) -> Result<Self> {
        let rows = (0..=n).map(|w| (0..=n).map(|s| if s == w { 1.0 } else { 0.0 }).collect()).collect();
        Self::new("identity", SignalMatrix::from_rows(rows)?)
    }

    /// Truncated two-sided geometric noise on outputs `0..=n`.
    pub fn geometric(eps: EpsilonBudget, n: usize) -> Result<Self> {
        Self::new("geometric", SignalMatrix::from_rows(geometric_rows(eps.value(), n))?)
    }

    /// Post-processes outputs through the row-stochastic `map` (rows are this
    /// mechanism's outputs).
    pub fn garble(&self, map: &[Vec<f64>]) -> Result<Self> {
        let garbling = SignalMatrix::from_rows(map.to_vec())?;
        if garbling.num_inputs() != self.signal.num_outputs() {
            return Err(Error::Dimension {
                what: "garbling rows",
                expected: self.signal.num_outputs(),
                got: garbling.num_inputs(),
            });
        }
        let rows = self
            .signal
            .rows()
            .iter()
            .map(|row| {
                (0..garbling.num_outputs())
                    .map(|t| row.iter().enumerate().map(|(s, p)| p * garbling.prob(s, t)).sum())
                    .collect()
            })
            .collect();
        Self::new(format!("{}+garbled", self.label), SignalMatrix::from_rows(rows)?)
    }
}

fn geometric_rows(eps: f64, n: usize) -> Vec<Vec<f64>> {
    let q = (-eps).exp();
    let interior = (1.0 - q) / (1.0 + q);
    let boundary = 1.0 / (1.0 + q);
    (0..=n)
        .map(|w| {
            (0..=n)
                .map(|s| {
                    let c = if n > 0 && (s == 0 || s == n) { boundary } else { interior };
                    c * (-eps * (s as f64 - w as f64).abs()).exp()
                })
                .collect()
        })
        .collect()
}

/// Posteriors and output probabilities induced by `mech` under `mu0`.
pub fn induced_distribution(mech: &ObliviousMechanism, mu0: &StatePrior) -> Result<BeliefDistribution<StateBelief>> {
    induced_with_outputs(mech, mu0).map(|(d, _)| d)
}

/// Like [`induced_distribution`], also returning the outputs merged into each
/// support point.
pub fn induced_with_outputs(
    mech: &ObliviousMechanism,
    mu0: &StatePrior,
) -> Result<(BeliefDistribution<StateBelief>, Vec<Vec<usize>>)> {
    let prior = mu0.probs();
    if prior.len() != mech.signal.num_inputs() {
        return Err(Error::Dimension { what: "prior", expected: mech.signal.num_inputs(), got: prior.len() });
    }
    let mut points = Vec::new();
    let mut outputs = Vec::new();
    for s in 0..mech.signal.num_outputs() {
        let joint: Vec<f64> = prior.iter().enumerate().map(|(w, p)| mech.signal.prob(w, s) * p).collect();
        let marginal: f64 = joint.iter().sum();
        if marginal <= 0.0 {
            continue;
        }
        points.push((StateBelief::normalized(joint)?, marginal));
        outputs.push(s);
    }
    let total: f64 = points.iter().map(|(_, m)| m).sum();
    for (_, m) in &mut points {
        *m /= total;
    }
    let dist = BeliefDistribution::merged(points.iter().cloned())?;
    let groups = dist
        .support()
        .iter()
        .map(|b| {
            points
                .iter()
                .zip(&outputs)
                .filter(|((p, _), _)| p.distance(b) <= DEDUP_TOL)
                .map(|(_, &s)| s)
                .collect()
        })
        .collect();
    Ok((dist, groups))
}

/// Outcome of a privacy check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpVerdict {
    pub private: bool,
    /// Largest `|log ratio|` over adjacent inputs, infinite for `x / 0`.
    pub worst_log_ratio: f64,
    /// `(output, lower input, higher input)` attaining the worst ratio.
    pub worst_at: Option<(usize, usize, usize)>,
}

pub fn verify_dp(mech: &ObliviousMechanism, eps: EpsilonBudget) -> DpVerdict {
    verify_dp_with_tolerance(mech, eps, LOG_RATIO_TOL)
}

pub fn verify_dp_with_tolerance(mech: &ObliviousMechanism, eps: EpsilonBudget, tol: f64) -> DpVerdict {
    let pairs = (1..mech.signal.num_inputs()).map(|w| (w - 1, w));
    check_pairs(&mech.signal, pairs, eps.value(), tol)
}

/// Privacy check for a mechanism with one row per database of `n` bits,
/// comparing every pair of databases differing in one entry.
pub fn verify_database_dp(signal: &SignalMatrix, n: usize, eps: EpsilonBudget) -> Result<DpVerdict> {
    verify_database_dp_with_tolerance(signal, n, eps, LOG_RATIO_TOL)
}

pub fn verify_database_dp_with_tolerance(
    signal: &SignalMatrix,
    n: usize,
    eps: EpsilonBudget,
    tol: f64,
) -> Result<DpVerdict> {
    if signal.num_inputs() != 1 << n {
        return Err(Error::Dimension { what: "database rows", expected: 1 << n, got: signal.num_inputs() });
    }
    let pairs = (0..1usize << n).flat_map(|lo| {
        (0..n).filter(move |b| lo & (1 << b) == 0).map(move |b| (lo, lo | (1 << b)))
    });
    Ok(check_pairs(signal, pairs, eps.value(), tol))
}

fn check_pairs(signal: &SignalMatrix, pairs: impl Iterator<Item = (usize, usize)>, eps: f64, tol: f64) -> DpVerdict {
    let mut worst = 0.0f64;
    let mut worst_at = None;
    for (a, b) in pairs {
        for s in 0..signal.num_outputs() {
            let (p, q) = (signal.prob(a, s), signal.prob(b, s));
            let r = match (p > 0.0, q > 0.0) {
                (false, false) => continue,
                (true, true) => (q / p).ln().abs(),
                _ => f64::INFINITY,
            };
            if worst_at.is_none() || r > worst {
                worst = r;
                worst_at = Some((s, a, b));
            }
        }
    }
    DpVerdict { private: worst <= eps + tol, worst_log_ratio: worst, worst_at }
}

/// Ex-ante value `Σ_s P(s) v̂(μ_s)`.
pub fn mechanism_value(mech: &ObliviousMechanism, mu0: &StatePrior, dp: &DecisionProblem) -> Result<f64> {
    dp.check_states(mu0.probs().len())?;
    let dist = induced_distribution(mech, mu0)?;
    let mut total = 0.0;
    for (b, w) in dist.iter() {
        total += w * interim_value(b.as_ref(), dp)?.value;
    }
    Ok(total)
}

/// Bits of database `index`, most significant first, as a label.
pub fn database_label(index: usize, n: usize) -> String {
    database_bits(index, n).iter().map(|b| char::from(b'0' + b)).collect()
}
