//! Interim values and payoff structure of decision problems.

use crate::error::Result;
use crate::model::{Belief, DecisionProblem, StatePrior};

/// Tolerance on increasing differences.
pub const SUPERMODULARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEvaluation {
    pub value: f64,
    /// Lowest-index maximizer.
    pub optimal_action_index: usize,
}

/// `max_a Σ_ω μ(ω) u(a, ω)`, ties going to the lowest action index.
pub fn interim_value(mu: &[f64], dp: &DecisionProblem) -> Result<ValueEvaluation> {
    dp.check_states(mu.len())?;
    Ok(interim_value_unchecked(mu, dp))
}

pub(crate) fn interim_value_unchecked(mu: &[f64], dp: &DecisionProblem) -> ValueEvaluation {
    let mut best = ValueEvaluation { value: f64::NEG_INFINITY, optimal_action_index: 0 };
    for (a, row) in dp.payoffs().iter().enumerate() {
        let value: f64 = row.iter().zip(mu).map(|(u, p)| u * p).sum();
        if value > best.value {
            best = ValueEvaluation { value, optimal_action_index: a };
        }
    }
    best
}

/// First adjacent quadruple `(a, a′, ω, ω′)` violating increasing differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupermodularityViolation {
    pub lower_action: usize,
    pub higher_action: usize,
    pub lower_state: usize,
    pub higher_state: usize,
    /// `[u(a′,ω′) − u(a,ω′)] − [u(a′,ω) − u(a,ω)]`, negative.
    pub shortfall: f64,
}

/// Checks increasing differences on adjacent actions and states, which is
/// equivalent to the full condition by telescoping.
pub fn is_supermodular(dp: &DecisionProblem) -> (bool, Option<SupermodularityViolation>) {
    let u = dp.payoffs();
    for a in 1..dp.num_actions() {
        for w in 1..dp.num_states() {
            let shortfall = (u[a][w] - u[a - 1][w]) - (u[a][w - 1] - u[a - 1][w - 1]);
            if shortfall < -SUPERMODULARITY_TOL {
                return (
                    false,
                    Some(SupermodularityViolation {
                        lower_action: a - 1,
                        higher_action: a,
                        lower_state: w - 1,
                        higher_state: w,
                        shortfall,
                    }),
                );
            }
        }
    }
    (true, None)
}

/// `Σ_ω μ0(ω) max_a u(a, ω)`.
pub fn full_information_value(mu0: &StatePrior, dp: &DecisionProblem) -> Result<f64> {
    dp.check_states(mu0.probs().len())?;
    Ok(mu0
        .probs()
        .iter()
        .enumerate()
        .map(|(w, p)| p * dp.payoffs().iter().map(|row| row[w]).fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

/// Value of acting on the prior alone.
pub fn no_information_value(mu0: &StatePrior, dp: &DecisionProblem) -> Result<f64> {
    Ok(interim_value(mu0.probs(), dp)?.value)
}

/// `v̂` evaluated on a belief type.
pub fn belief_value<B: Belief>(belief: &B, dp: &DecisionProblem) -> Result<f64> {
    Ok(interim_value(belief.probs(), dp)?.value)
}
