//! Optimal publication mechanisms under a privacy budget.
//!
//! The designer's problem is a linear program over distributions of
//! posteriors supported on the extreme points of the private-posterior
//! polytope: maximize `Σ_j τ_j v̂(μ_j)` subject to `Σ_j τ_j μ_j = μ0`,
//! `τ ≥ 0`. A basic optimal solution has linearly independent support of
//! size at most `N + 1`, and the mechanism that produces it follows from
//! Bayes' rule as `σ(j | ω) = τ_j μ_j(ω) / μ0(ω)`.

use nalgebra::{DMatrix, DVector};

use crate::decision::interim_value_unchecked;
use crate::distribution::BeliefDistribution;
use crate::error::{invalid, Error, Result};
use crate::model::{
    project_belief, state_of_index, Belief, DatabaseBelief, DatabasePrior, DecisionProblem, EpsilonBudget,
    StateBelief, StatePrior, DEDUP_TOL, NORMALIZATION_TOL,
};
use crate::polytope::{
    DatabasePolytope, ObliviousPolytope, UpperBoundSignature, DEFAULT_DATABASE_CAP, DEFAULT_OBLIVIOUS_CAP,
};
use crate::simplex::{LinearProgram, LpError, Relation};

/// LP weights at or below this are dropped from reported supports.
pub const SUPPORT_PRUNE_TOL: f64 = 1e-12;
/// Relative singular-value cutoff for linear independence.
pub const RANK_TOL: f64 = 1e-10;

/// Row-stochastic table `σ(s | x)`; rows are inputs (states or databases).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SignalMatrix {
    pub fn new(outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || outputs.is_empty() {
            return invalid("signal matrix needs at least one row and one output");
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outputs.len() {
                return invalid(format!("signal row {i} has {} entries, expected {}", row.len(), outputs.len()));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return invalid(format!("signal row {i} has a negative or non-finite entry"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return invalid(format!("signal row {i} sums to {total}, not 1"));
            }
        }
        Ok(Self { outputs, rows })
    }

    /// Outputs labelled `0, 1, …`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        Self::new((0..width).map(|j| j.to_string()).collect(), rows)
    }

    pub fn with_outputs(mut self, outputs: Vec<String>) -> Result<Self> {
        if outputs.len() != self.outputs.len() {
            return Err(Error::Dimension { what: "output labels", expected: self.outputs.len(), got: outputs.len() });
        }
        self.outputs = outputs;
        Ok(self)
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }

    pub fn column(&self, output: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[output]).collect()
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Optimal oblivious design.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    /// Concavified value at the prior.
    pub optimum: f64,
    pub distribution: BeliefDistribution<StateBelief>,
    /// Signature of each support point, aligned with the support.
    pub signatures: Vec<UpperBoundSignature>,
    pub signal: SignalMatrix,
}

/// Solves the oblivious design problem with the default vertex cap.
pub fn solve_oblivious(mu0: &StatePrior, dp: &DecisionProblem, eps: EpsilonBudget) -> Result<DesignSolution> {
    solve_oblivious_with_cap(mu0, dp, eps, DEFAULT_OBLIVIOUS_CAP)
}

pub fn solve_oblivious_with_cap(
    mu0: &StatePrior,
    dp: &DecisionProblem,
    eps: EpsilonBudget,
    cap: usize,
) -> Result<DesignSolution> {
    dp.check_states(mu0.probs().len())?;
    let poly = ObliviousPolytope::new(eps, mu0.clone());
    let vertices = poly.vertices(cap)?;
    let values: Vec<f64> = vertices.iter().map(|(_, v)| interim_value_unchecked(v.probs(), dp).value).collect();
    let beliefs: Vec<&[f64]> = vertices.iter().map(|(_, v)| v.probs()).collect();
    let (optimum, picked) = solve_bayes_plausible_lp(&beliefs, &values, mu0.probs())?;

    let mut support = Vec::with_capacity(picked.len());
    let mut signatures = Vec::with_capacity(picked.len());
    let mut weights = Vec::with_capacity(picked.len());
    for (j, w) in picked {
        signatures.push(vertices[j].0);
        support.push(vertices[j].1.clone());
        weights.push(w);
    }
    let distribution = BeliefDistribution::new(support, weights)?;
    let labels = signatures.iter().map(|s| s.to_string()).collect();
    let signal = build_signal_matrix(&distribution, mu0.probs())?.with_outputs(labels)?;
    Ok(DesignSolution { optimum, distribution, signatures, signal })
}

/// `max Σ_j τ_j values_j` over Bayes-plausible `τ` on `columns`. Returns the
/// optimum and the positive entries of the basic solution in column order.
fn solve_bayes_plausible_lp(columns: &[&[f64]], values: &[f64], prior: &[f64]) -> Result<(f64, Vec<(usize, f64)>)> {
    let mut lp = LinearProgram::maximize(values.to_vec());
    for (x, &p) in prior.iter().enumerate() {
        lp.constrain(columns.iter().map(|c| c[x]).collect(), Relation::Eq, p);
    }
    let solution = match lp.solve() {
        Ok(s) => s,
        Err(LpError::Infeasible(r)) => {
            return Err(Error::Internal(format!("design LP infeasible although the prior is interior (residual {r:e})")))
        }
        Err(e) => return Err(e.into()),
    };
    let mut picked: Vec<(usize, f64)> =
        solution.x.iter().copied().enumerate().filter(|&(_, w)| w > SUPPORT_PRUNE_TOL).collect();
    picked.sort_by_key(|&(j, _)| j);
    Ok((solution.objective, picked))
}

/// Result of solving for the weights on a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportWeights {
    /// Nonnegative weights averaging the support to the prior.
    Plausible(Vec<f64>),
    /// The least-squares weights either go negative or miss the prior.
    NotPlausible { weights: Vec<f64>, residual: f64 },
}

impl SupportWeights {
    pub fn plausible(&self) -> Option<&[f64]> {
        match self {
            SupportWeights::Plausible(w) => Some(w),
            SupportWeights::NotPlausible { .. } => None,
        }
    }
}

/// Number of linearly independent columns.
pub fn rank_of<B: Belief>(support: &[B]) -> usize {
    if support.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(support[0].len(), support.len(), |i, j| support[j].probs()[i]);
    let svd = m.svd(false, false);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.singular_values.iter().filter(|&&s| s > RANK_TOL * top.max(f64::MIN_POSITIVE)).count()
}

/// The unique weights `(M′M)⁻¹M′μ0` for a linearly independent support `M`.
pub fn weights_for_support<B: Belief>(support: &[B], prior: &[f64]) -> Result<SupportWeights> {
    if support.is_empty() {
        return invalid("support is empty");
    }
    let dim = prior.len();
    if let Some(b) = support.iter().find(|b| b.len() != dim) {
        return Err(Error::Dimension { what: "support belief", expected: dim, got: b.len() });
    }
    let rank = rank_of(support);
    if rank < support.len() {
        return Err(Error::RankDeficient { rank, count: support.len() });
    }
    let m = DMatrix::from_fn(dim, support.len(), |i, j| support[j].probs()[i]);
    let target = DVector::from_column_slice(prior);
    let gram = m.transpose() * &m;
    let rhs = m.transpose() * &target;
    let weights = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::RankDeficient { rank: support.len() - 1, count: support.len() })?;
    let residual = (&m * &weights - &target).iter().map(|v| v.abs()).sum::<f64>();
    let mut weights: Vec<f64> = weights.iter().copied().collect();
    if residual > NORMALIZATION_TOL || weights.iter().any(|&w| w < -SUPPORT_PRUNE_TOL) {
        return Ok(SupportWeights::NotPlausible { weights, residual });
    }
    for w in &mut weights {
        *w = w.max(0.0);
    }
    Ok(SupportWeights::Plausible(weights))
}

/// Mechanism producing a Bayes-plausible distribution:
/// `σ(j | x) = τ_j π_j(x) / π0(x)`, one output per support point.
pub fn build_signal_matrix<B: Belief>(distribution: &BeliefDistribution<B>, prior: &[f64]) -> Result<SignalMatrix> {
    if distribution.support()[0].len() != prior.len() {
        return Err(Error::Dimension { what: "prior", expected: distribution.support()[0].len(), got: prior.len() });
    }
    if !distribution.bayes_plausible(prior) {
        return invalid("distribution is not Bayes-plausible for the prior");
    }
    let rows = prior
        .iter()
        .enumerate()
        .map(|(x, &p)| {
            let raw: Vec<f64> = distribution.iter().map(|(b, w)| w * b.probs()[x] / p).collect();
            // Plausibility makes each row sum to one up to rounding.
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    SignalMatrix::from_rows(rows)
}

/// `Ψ diag((Ψ′Ψ)⁻¹Ψ′1)`, the mechanism for signature vertices built from the
/// signatures alone.
pub fn signal_from_signatures(signatures: &[UpperBoundSignature], eps: EpsilonBudget) -> Result<SignalMatrix> {
    let (psi, scale) = psi_scaling(signatures, eps)?;
    let rows = (0..psi.nrows()).map(|w| (0..psi.ncols()).map(|j| psi[(w, j)] * scale[j]).collect()).collect();
    SignalMatrix::new(signatures.iter().map(|s| s.to_string()).collect(), rows)
}

/// `Ψ` and `(Ψ′Ψ)⁻¹Ψ′1`.
fn psi_scaling(signatures: &[UpperBoundSignature], eps: EpsilonBudget) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let Some(first) = signatures.first() else {
        return invalid("no signatures");
    };
    let n = first.n();
    if signatures.iter().any(|s| s.n() != n) {
        return invalid("signatures have different dimensions");
    }
    let columns: Vec<Vec<f64>> = signatures.iter().map(|s| s.psi(eps)).collect();
    let psi = DMatrix::from_fn(n + 1, signatures.len(), |w, j| columns[j][w]);
    let gram = psi.transpose() * &psi;
    let ones = DVector::from_element(n + 1, 1.0);
    let scale = gram
        .lu()
        .solve(&(psi.transpose() * ones))
        .ok_or(Error::RankDeficient { rank: signatures.len() - 1, count: signatures.len() })?;
    Ok((psi, scale.iter().copied().collect()))
}

/// Query table and base measure of the generalized exponential mechanism
/// `E(j | θ) ∝ exp(ε q(θ, j)) ξ(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialParameterization {
    pub n: usize,
    pub epsilon: EpsilonBudget,
    /// `q(θ, j)`, one row per database index.
    pub query: Vec<Vec<f64>>,
    /// `ξ(j)`, a probability vector over outputs.
    pub base_measure: Vec<f64>,
}

impl ExponentialParameterization {
    /// `E(· | θ)`.
    pub fn probabilities(&self, database: usize) -> Vec<f64> {
        let eps = self.epsilon.value();
        let scores = &self.query[database];
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> =
            scores.iter().zip(&self.base_measure).map(|(q, xi)| (eps * (q - top)).exp() * xi).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// The mechanism as a table over all databases.
    pub fn database_table(&self) -> Vec<Vec<f64>> {
        (0..self.query.len()).map(|t| self.probabilities(t)).collect()
    }
}

pub fn exponential_parameterization(
    solution: &DesignSolution,
    eps: EpsilonBudget,
) -> Result<ExponentialParameterization> {
    let support = solution.distribution.support();
    let n = support[0].n();
    let mu0 = StatePrior::new(solution.distribution.mean())
        .map_err(|_| Error::Unsupported("solution mean is not a full-support prior".into()))?;
    let poly = ObliviousPolytope::new(eps, mu0);
    for (belief, sig) in support.iter().zip(&solution.signatures) {
        let vertex = poly.vertex(*sig)?;
        if vertex.distance(belief) > DEDUP_TOL {
            return Err(Error::Unsupported(format!("support point is not the vertex with signature {sig}")));
        }
    }
    let exponents: Vec<Vec<i64>> = solution.signatures.iter().map(|s| s.exponents()).collect();
    let query = (0..1usize << n)
        .map(|t| {
            let w = state_of_index(t);
            exponents.iter().map(|e| e[w] as f64).collect()
        })
        .collect();
    let (_, scale) = psi_scaling(&solution.signatures, eps)?;
    let total: f64 = scale.iter().sum();
    let base_measure = scale.iter().map(|c| c / total).collect();
    Ok(ExponentialParameterization { n, epsilon: eps, query, base_measure })
}

/// Optimal (possibly non-oblivious) design over database posteriors.
#[derive(Debug, Clone)]
pub struct DatabaseDesign {
    pub optimum: f64,
    pub distribution: BeliefDistribution<DatabaseBelief>,
    /// Binding adjacency constraints of each support point.
    pub binding_counts: Vec<usize>,
    /// Rows indexed by database.
    pub signal: SignalMatrix,
}

pub fn solve_database(pi0: &DatabasePrior, dp: &DecisionProblem, eps: EpsilonBudget) -> Result<DatabaseDesign> {
    solve_database_with_cap(pi0, dp, eps, DEFAULT_DATABASE_CAP)
}

pub fn solve_database_with_cap(
    pi0: &DatabasePrior,
    dp: &DecisionProblem,
    eps: EpsilonBudget,
    cap: usize,
) -> Result<DatabaseDesign> {
    dp.check_states(pi0.n() + 1)?;
    let poly = DatabasePolytope::new(eps, pi0.clone());
    let vertices = poly.vertices(cap)?;
    let values: Vec<f64> =
        vertices.iter().map(|v| interim_value_unchecked(project_belief(v).probs(), dp).value).collect();
    let columns: Vec<&[f64]> = vertices.iter().map(|v| v.probs()).collect();
    let (optimum, picked) = solve_bayes_plausible_lp(&columns, &values, pi0.probs())?;

    let mut support = Vec::with_capacity(picked.len());
    let mut weights = Vec::with_capacity(picked.len());
    let mut binding_counts = Vec::with_capacity(picked.len());
    for (j, w) in picked {
        binding_counts.push(poly.membership(&vertices[j])?.binding);
        support.push(vertices[j].clone());
        weights.push(w);
    }
    let distribution = BeliefDistribution::new(support, weights)?;
    let signal = build_signal_matrix(&distribution, pi0.probs())?;
    Ok(DatabaseDesign { optimum, distribution, binding_counts, signal })
}
