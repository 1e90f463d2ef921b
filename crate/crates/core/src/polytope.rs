//! Sets of ε-differentially private posteriors.
//!
//! [`ObliviousPolytope`] is the set of state beliefs whose log likelihood
//! ratio between adjacent states moves at most `ε` away from the prior's.
//! [`DatabasePolytope`] is the analogous set over databases, with one
//! constraint pair per pair of databases that differ in a single respondent.
//!
//! All constraints are evaluated in the log domain: the deviation
//! `log μ(ω) − log μ(ω−1) − log μ0(ω) + log μ0(ω−1)` is compared with `±ε`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    project_belief, Belief, DatabaseBelief, DatabasePrior, EpsilonBudget, StateBelief, StatePrior, DEDUP_TOL,
    LOG_RATIO_TOL, NORMALIZATION_TOL,
};
use crate::simplex::{LinearProgram, LpError, Relation};

/// Default cap on `N` for oblivious vertex enumeration (`2^N` vertices).
pub const DEFAULT_OBLIVIOUS_CAP: usize = 20;
/// Default cap on the number of databases `2^N` for database vertex enumeration.
pub const DEFAULT_DATABASE_CAP: usize = 16;
/// Largest `2^N` accepted by the exhaustive binding-subset enumerator.
pub const EXHAUSTIVE_DATABASE_CAP: usize = 8;

/// Set of states `ω ∈ {1, …, N}` at which an extreme point attains the upper
/// privacy bound. Bit `ω − 1` of the mask stands for state `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpperBoundSignature {
    mask: u64,
    n: usize,
}

impl UpperBoundSignature {
    pub fn new(n: usize, states: &[usize]) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Invalid(format!("signature dimension {n} out of range 1..=63")));
        }
        let mut mask = 0u64;
        for &w in states {
            if w == 0 || w > n {
                return Err(Error::Invalid(format!("signature state {w} not in 1..={n}")));
            }
            mask |= 1 << (w - 1);
        }
        Ok(Self { mask, n })
    }

    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 63 && mask >> n == 0);
        Self { mask, n }
    }

    pub fn empty(n: usize) -> Self {
        Self { mask: 0, n }
    }

    pub fn full(n: usize) -> Self {
        Self { mask: (1u64 << n) - 1, n }
    }

    /// `{1, …, x}`: the shape induced by geometric-mechanism outputs.
    pub fn lower_set(n: usize, x: usize) -> Self {
        let x = x.min(n);
        Self { mask: (1u64 << x) - 1, n }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, state: usize) -> bool {
        state >= 1 && state <= self.n && self.mask & (1 << (state - 1)) != 0
    }

    pub fn states(&self) -> Vec<usize> {
        (1..=self.n).filter(|&w| self.contains(w)).collect()
    }

    /// Largest state in the signature, or 0 when empty.
    pub fn largest(&self) -> usize {
        (1..=self.n).rev().find(|&w| self.contains(w)).unwrap_or(0)
    }

    /// `Σ_{i=1}^{ω} (1{i∈Φ} − 1{i∉Φ})` for every `ω`: the exponent of `ψ(Φ, ε)` in units of `ε`.
    pub fn exponents(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut acc = 0i64;
        out.push(0);
        for w in 1..=self.n {
            acc += if self.contains(w) { 1 } else { -1 };
            out.push(acc);
        }
        out
    }

    /// `ψ(Φ, ε)`.
    pub fn psi(&self, epsilon: EpsilonBudget) -> Vec<f64> {
        self.exponents().into_iter().map(|k| (epsilon.value() * k as f64).exp()).collect()
    }
}

impl fmt::Display for UpperBoundSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<String> = self.states().iter().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", states.join(","))
    }
}

/// Normalizes `prior ∘ exp(ε·k)` in the log domain.
pub(crate) fn exponential_tilt(prior: &[f64], exponents: &[i64], epsilon: f64) -> Vec<f64> {
    let logs: Vec<f64> = prior.iter().zip(exponents).map(|(p, &k)| p.ln() + epsilon * k as f64).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Slack of one adjacent-state constraint pair. Both are `ε ∓ deviation`;
/// a member has both nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSlack {
    pub state: usize,
    pub deviation: f64,
    pub upper: f64,
    pub lower: f64,
}

impl ConstraintSlack {
    fn new(state: usize, deviation: f64, epsilon: f64) -> Self {
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        Self { state, deviation, upper: epsilon - deviation, lower: epsilon + deviation }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.upper >= -tol && self.lower >= -tol
    }

    pub fn upper_binding(&self, tol: f64) -> bool {
        self.upper.abs() <= tol
    }

    pub fn lower_binding(&self, tol: f64) -> bool {
        self.lower.abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub member: bool,
    pub slacks: Vec<ConstraintSlack>,
    /// Tolerance the verdicts were computed with.
    pub tolerance: f64,
}

impl MembershipReport {
    pub fn binding_count(&self) -> usize {
        self.slacks
            .iter()
            .filter(|s| s.upper_binding(self.tolerance) || s.lower_binding(self.tolerance))
            .count()
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintSlack> + '_ {
        self.slacks.iter().filter(|s| !s.holds(self.tolerance))
    }

    /// States at which the upper bound binds.
    pub fn upper_binding_states(&self) -> Vec<usize> {
        self.slacks.iter().filter(|s| s.upper_binding(self.tolerance)).map(|s| s.state).collect()
    }
}

/// `K_Ω(ε, μ0)`.
#[derive(Debug, Clone)]
pub struct ObliviousPolytope {
    epsilon: EpsilonBudget,
    mu0: StatePrior,
    tolerance: f64,
}

impl ObliviousPolytope {
    pub fn new(epsilon: EpsilonBudget, mu0: StatePrior) -> Self {
        Self { epsilon, mu0, tolerance: LOG_RATIO_TOL }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn epsilon(&self) -> EpsilonBudget {
        self.epsilon
    }

    pub fn prior(&self) -> &StatePrior {
        &self.mu0
    }

    pub fn n(&self) -> usize {
        self.mu0.n()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Log-ratio deviations from the prior for `ω = 1..=N`.
    pub fn deviations(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.mu0.probs().len() {
            return Err(Error::Dimension { what: "state belief", expected: self.mu0.probs().len(), got: mu.len() });
        }
        let prior = self.mu0.probs();
        Ok((1..mu.len())
            .map(|w| (mu[w].ln() - mu[w - 1].ln()) - (prior[w].ln() - prior[w - 1].ln()))
            .collect())
    }

    pub fn membership(&self, mu: &StateBelief) -> Result<MembershipReport> {
        let eps = self.epsilon.value();
        let slacks: Vec<ConstraintSlack> = self
            .deviations(mu.probs())?
            .into_iter()
            .enumerate()
            .map(|(i, d)| ConstraintSlack::new(i + 1, d, eps))
            .collect();
        let interior = mu.probs().iter().all(|&p| p > 0.0);
        let member = interior && slacks.iter().all(|s| s.holds(self.tolerance));
        Ok(MembershipReport { member, slacks, tolerance: self.tolerance })
    }

    pub fn contains(&self, mu: &StateBelief) -> bool {
        self.membership(mu).map(|r| r.member).unwrap_or(false)
    }

    /// Signature of `mu` if it is an extreme point, i.e. a member at which
    /// every adjacent-state constraint binds.
    pub fn signature_of(&self, mu: &StateBelief) -> Option<UpperBoundSignature> {
        let report = self.membership(mu).ok()?;
        if !report.member || report.binding_count() != self.n() {
            return None;
        }
        let upper = report.upper_binding_states();
        UpperBoundSignature::new(self.n(), &upper).ok()
    }

    /// The extreme point `μ0 ∘ ψ(Φ, ε) / (μ0 · ψ(Φ, ε))`.
    pub fn vertex(&self, signature: UpperBoundSignature) -> Result<StateBelief> {
        if signature.n() != self.n() {
            return Err(Error::Dimension { what: "signature", expected: self.n(), got: signature.n() });
        }
        Ok(StateBelief::from_raw(exponential_tilt(
            self.mu0.probs(),
            &signature.exponents(),
            self.epsilon.value(),
        )))
    }

    /// All `2^N` extreme points, sorted by signature mask.
    pub fn vertices(&self, cap: usize) -> Result<Vec<(UpperBoundSignature, StateBelief)>> {
        let n = self.n();
        if n > cap || n > 63 {
            return Err(Error::CapExceeded { what: "oblivious vertex enumeration (N)", requested: n, cap });
        }
        (0..1u64 << n)
            .map(|mask| {
                let sig = UpperBoundSignature::from_mask(n, mask);
                self.vertex(sig).map(|v| (sig, v))
            })
            .collect()
    }
}

/// Free-function form of [`ObliviousPolytope::membership`].
pub fn oblivious_membership(mu: &StateBelief, poly: &ObliviousPolytope) -> Result<MembershipReport> {
    poly.membership(mu)
}

pub fn oblivious_vertex(signature: UpperBoundSignature, poly: &ObliviousPolytope) -> Result<StateBelief> {
    poly.vertex(signature)
}

pub fn enumerate_oblivious_vertices(
    poly: &ObliviousPolytope,
    cap: usize,
) -> Result<Vec<(UpperBoundSignature, StateBelief)>> {
    poly.vertices(cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseMembership {
    pub member: bool,
    /// Constraints with `|slack| ≤ tolerance` (upper and lower counted separately).
    pub binding: usize,
    /// Smallest slack over all constraints; negative when violated.
    pub worst_slack: f64,
}

/// `K(ε, π0)`.
#[derive(Debug, Clone)]
pub struct DatabasePolytope {
    epsilon: EpsilonBudget,
    pi0: DatabasePrior,
    adjacency: Vec<(usize, usize)>,
    tolerance: f64,
}

impl DatabasePolytope {
    pub fn new(epsilon: EpsilonBudget, pi0: DatabasePrior) -> Self {
        let n = pi0.n();
        let mut adjacency = Vec::with_capacity(n << n.saturating_sub(1));
        for theta in 0..1usize << n {
            for bit in (0..n).rev() {
                if theta & (1 << bit) == 0 {
                    adjacency.push((theta, theta | (1 << bit)));
                }
            }
        }
        Self { epsilon, pi0, adjacency, tolerance: LOG_RATIO_TOL }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn epsilon(&self) -> EpsilonBudget {
        self.epsilon
    }

    pub fn prior(&self) -> &DatabasePrior {
        &self.pi0
    }

    pub fn n(&self) -> usize {
        self.pi0.n()
    }

    /// Ordered pairs `(θ, θ′)` with `θ′ = θ` plus one extra type-1 respondent.
    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn deviation(&self, pi: &[f64], (lo, hi): (usize, usize)) -> f64 {
        let prior = self.pi0.probs();
        let d = (pi[hi].ln() - pi[lo].ln()) - (prior[hi].ln() - prior[lo].ln());
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    }

    pub fn membership(&self, pi: &DatabaseBelief) -> Result<DatabaseMembership> {
        let dim = self.pi0.probs().len();
        if pi.len() != dim {
            return Err(Error::Dimension { what: "database belief", expected: dim, got: pi.len() });
        }
        let eps = self.epsilon.value();
        let mut binding = 0;
        let mut worst = f64::INFINITY;
        for &pair in &self.adjacency {
            let d = self.deviation(pi.probs(), pair);
            for slack in [eps - d, eps + d] {
                if slack.abs() <= self.tolerance {
                    binding += 1;
                }
                worst = worst.min(slack);
            }
        }
        let interior = pi.probs().iter().all(|&p| p > 0.0);
        Ok(DatabaseMembership { member: interior && worst >= -self.tolerance, binding, worst_slack: worst })
    }

    pub fn contains(&self, pi: &DatabaseBelief) -> bool {
        self.membership(pi).map(|m| m.member).unwrap_or(false)
    }

    /// Every extreme point of `K(ε, π0)`.
    ///
    /// Writing `π = π0 ∘ exp(ε·k) / Z`, a point is extreme iff its binding
    /// adjacency constraints connect all databases; since the adjacency graph
    /// is bipartite with parity given by the state, `k` then steps by exactly
    /// `±1` along every edge. The search walks databases in index order
    /// (all lower neighbours of `θ` precede `θ`) and enumerates those height
    /// functions with `k(0) = 0`. Output is sorted lexicographically by `k`.
    pub fn vertices(&self, cap: usize) -> Result<Vec<DatabaseBelief>> {
        let dim = self.pi0.probs().len();
        if dim > cap {
            return Err(Error::CapExceeded { what: "database vertex enumeration (2^N)", requested: dim, cap });
        }
        Ok(self
            .height_functions()
            .into_iter()
            .map(|k| DatabaseBelief::from_raw(exponential_tilt(self.pi0.probs(), &k, self.epsilon.value())))
            .collect())
    }

    /// Height functions `k` with `k(0) = 0` and `|k(θ) − k(θ′)| = 1` on every edge.
    pub fn height_functions(&self) -> Vec<Vec<i64>> {
        let n = self.n();
        let dim = 1usize << n;
        let mut out = Vec::new();
        let mut heights = vec![0i64; dim];
        fn walk(n: usize, theta: usize, heights: &mut [i64], out: &mut Vec<Vec<i64>>) {
            if theta == heights.len() {
                out.push(heights.to_vec());
                return;
            }
            let below: Vec<usize> = (0..n).filter(|b| theta & (1 << b) != 0).map(|b| theta ^ (1 << b)).collect();
            let anchor = heights[below[0]];
            for candidate in [anchor - 1, anchor + 1] {
                if below.iter().all(|&t| (heights[t] - candidate).abs() == 1) {
                    heights[theta] = candidate;
                    walk(n, theta + 1, heights, out);
                }
            }
        }
        walk(n, 1, &mut heights, &mut out);
        out.sort();
        out
    }

    /// Vertex enumeration by exhaustive search over binding constraint sets.
    ///
    /// Every choice of `2^N − 1` adjacency pairs, each binding at its upper or
    /// lower bound, is solved together with the simplex equality; full-rank
    /// systems with positive feasible solutions are kept and deduplicated.
    /// Upper and lower bounds of one pair never bind together, so each pair
    /// contributes at most one row. Binding pairs that close a cycle give
    /// either a singular system or one forced to zero on the cycle, so only
    /// spanning trees of the adjacency graph are solved.
    pub fn vertices_exhaustive(&self) -> Result<Vec<DatabaseBelief>> {
        let dim = self.pi0.probs().len();
        if dim > EXHAUSTIVE_DATABASE_CAP {
            return Err(Error::CapExceeded {
                what: "exhaustive database vertex enumeration (2^N)",
                requested: dim,
                cap: EXHAUSTIVE_DATABASE_CAP,
            });
        }
        let eps = self.epsilon.value();
        let prior = self.pi0.probs();
        let pairs = self.adjacency.len();
        let need = dim - 1;
        let mut found: Vec<DatabaseBelief> = Vec::new();

        let mut chosen: Vec<usize> = (0..need).collect();
        loop {
            if !spans_tree(&chosen, &self.adjacency, dim) {
                if !next_combination(&mut chosen, pairs) {
                    break;
                }
                continue;
            }
            for signs in 0u32..1 << need {
                let mut system = DMatrix::<f64>::zeros(dim, dim);
                for (row, &p) in chosen.iter().enumerate() {
                    let (lo, hi) = self.adjacency[p];
                    let factor = if signs & (1 << row) != 0 { eps.exp() } else { (-eps).exp() };
                    // π(hi)·π0(lo) − factor·π0(hi)·π(lo) = 0
                    system[(row, hi)] = prior[lo];
                    system[(row, lo)] = -factor * prior[hi];
                }
                for c in 0..dim {
                    system[(need, c)] = 1.0;
                }
                let mut rhs = DVector::<f64>::zeros(dim);
                rhs[need] = 1.0;
                let Some(solution) = system.full_piv_lu().solve(&rhs) else { continue };
                if solution.iter().any(|&v| v <= 0.0) {
                    continue;
                }
                let candidate = DatabaseBelief::from_raw(solution.iter().copied().collect());
                if !self.contains(&candidate) {
                    continue;
                }
                if !found.iter().any(|v| v.distance(&candidate) <= DEDUP_TOL) {
                    found.push(candidate);
                }
            }
            if !next_combination(&mut chosen, pairs) {
                break;
            }
        }
        Ok(found)
    }
}

/// True if the chosen edges connect all `nodes` without a cycle.
fn spans_tree(chosen: &[usize], edges: &[(usize, usize)], nodes: usize) -> bool {
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &e in chosen {
        let (a, b) = edges[e];
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    chosen.len() + 1 == nodes
}

fn next_combination(chosen: &mut [usize], n: usize) -> bool {
    let k = chosen.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if chosen[i] < n - k + i {
            chosen[i] += 1;
            for j in i + 1..k {
                chosen[j] = chosen[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn database_membership(pi: &DatabaseBelief, poly: &DatabasePolytope) -> Result<DatabaseMembership> {
    poly.membership(pi)
}

pub fn enumerate_database_vertices(poly: &DatabasePolytope, cap: usize) -> Result<Vec<DatabaseBelief>> {
    poly.vertices(cap)
}

/// A database vertex whose projection leaves `K_Ω`.
#[derive(Debug, Clone)]
pub struct ProjectionWitness {
    pub vertex: DatabaseBelief,
    pub projection: StateBelief,
    pub violations: Vec<ConstraintSlack>,
}

#[derive(Debug, Clone)]
pub struct ProjectionGapReport {
    pub database_vertices: usize,
    /// Projections of database vertices that fall outside `K_Ω`.
    pub outside: Vec<ProjectionWitness>,
    /// `K_Ω` vertices that are not the projection of any member of `K`.
    pub unattained: Vec<UpperBoundSignature>,
}

impl ProjectionGapReport {
    /// `P K(ε, π0) = K_Ω(ε, μ0)` is certified.
    pub fn equal(&self) -> bool {
        self.outside.is_empty() && self.unattained.is_empty()
    }
}

/// Compares the projection of `K(ε, π0)` with `K_Ω(ε, μ0)`.
///
/// `P K ⊆ K_Ω` is checked on the projected database vertices; `K_Ω ⊆ P K`
/// by finding, for each `K_Ω` vertex, a member of `K` that projects onto it.
pub fn projection_gap(
    poly_db: &DatabasePolytope,
    poly_ob: &ObliviousPolytope,
    cap: usize,
) -> Result<ProjectionGapReport> {
    let induced = poly_db.prior().state_prior();
    let mismatch: f64 = induced.probs().iter().zip(poly_ob.prior().probs()).map(|(a, b)| (a - b).abs()).sum();
    if induced.probs().len() != poly_ob.prior().probs().len() || mismatch > NORMALIZATION_TOL {
        return Err(Error::Invalid("database prior does not project onto the state prior".into()));
    }
    if (poly_db.epsilon().value() - poly_ob.epsilon().value()).abs() > 0.0 {
        return Err(Error::Invalid("polytopes use different privacy budgets".into()));
    }

    let vertices = poly_db.vertices(cap)?;
    let mut outside = Vec::new();
    for vertex in &vertices {
        let projection = project_belief(vertex);
        let report = poly_ob.membership(&projection)?;
        if !report.member {
            let violations = report.violations().copied().collect();
            outside.push(ProjectionWitness { vertex: vertex.clone(), projection, violations });
        }
    }

    let mut unattained = Vec::new();
    for (signature, target) in poly_ob.vertices(DEFAULT_OBLIVIOUS_CAP)? {
        if lift_into(poly_db, &target)?.is_none() {
            unattained.push(signature);
        }
    }
    Ok(ProjectionGapReport { database_vertices: vertices.len(), outside, unattained })
}

/// Some `π ∈ K(ε, π0)` with `Pπ = target`, if one exists.
pub fn lift_into(poly: &DatabasePolytope, target: &StateBelief) -> Result<Option<DatabaseBelief>> {
    let n = poly.n();
    let dim = 1usize << n;
    if target.len() != n + 1 {
        return Err(Error::Dimension { what: "state belief", expected: n + 1, got: target.len() });
    }
    let prior = poly.prior().probs();
    let (up, down) = (poly.epsilon().value().exp(), (-poly.epsilon().value()).exp());
    let mut lp = LinearProgram::feasibility(dim);
    for w in 0..=n {
        let row = (0..dim).map(|t| if t.count_ones() as usize == w { 1.0 } else { 0.0 }).collect();
        lp.constrain(row, Relation::Eq, target.probs()[w]);
    }
    for &(lo, hi) in poly.adjacency() {
        // π(hi)π0(lo) ≤ e^ε π0(hi)π(lo) and ≥ e^{−ε} π0(hi)π(lo), scaled by 1/(π0(lo)π0(hi))
        let mut upper = vec![0.0; dim];
        upper[hi] = 1.0 / prior[hi];
        upper[lo] = -up / prior[lo];
        lp.constrain(upper, Relation::Le, 0.0);
        let mut lower = vec![0.0; dim];
        lower[hi] = 1.0 / prior[hi];
        lower[lo] = -down / prior[lo];
        lp.constrain(lower, Relation::Ge, 0.0);
    }
    match lp.solve() {
        Ok(sol) => {
            let total: f64 = sol.x.iter().sum();
            Ok(Some(DatabaseBelief::from_raw(sol.x.iter().map(|v| v / total).collect())))
        }
        Err(LpError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::symmetric_prior_from_state_prior;

    const E: f64 = std::f64::consts::E;

    fn eps(x: f64) -> EpsilonBudget {
        EpsilonBudget::new(x).unwrap()
    }

    fn uniform(n: usize) -> ObliviousPolytope {
        ObliviousPolytope::new(eps(1.0), StatePrior::uniform(n).unwrap())
    }

    #[test]
    fn prior_is_strict_member() {
        let poly = uniform(3);
        let report = poly.membership(&poly.prior().as_belief()).unwrap();
        assert!(report.member);
        for s in &report.slacks {
            assert!((s.upper - 1.0).abs() < 1e-15 && (s.lower - 1.0).abs() < 1e-15);
        }
        assert_eq!(report.binding_count(), 0);
    }

    #[test]
    fn single_upper_vertex_binds_expected_pattern() {
        let poly = uniform(2);
        let mu = poly.vertex(UpperBoundSignature::new(2, &[1]).unwrap()).unwrap();
        let z = 2.0 + E;
        let expected = [1.0 / z, E / z, 1.0 / z];
        for (a, b) in mu.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let report = poly.membership(&mu).unwrap();
        assert!(report.member);
        assert!(report.slacks[0].upper_binding(1e-12));
        assert!(report.slacks[1].lower_binding(1e-12));
    }

    #[test]
    fn closed_form_vertices() {
        let poly = uniform(2);
        let full = poly.vertex(UpperBoundSignature::full(2)).unwrap();
        let z = 1.0 + E + E * E;
        for (a, b) in full.probs().iter().zip([1.0 / z, E / z, E * E / z]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((full.probs()[0] - 0.0900306).abs() < 5e-7);
        assert!((full.probs()[2] - 0.6652410).abs() < 5e-7);

        let empty = poly.vertex(UpperBoundSignature::empty(2)).unwrap();
        let z = 1.0 + 1.0 / E + 1.0 / (E * E);
        for (a, b) in empty.probs().iter().zip([1.0 / z, 1.0 / (E * z), 1.0 / (E * E * z)]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(poly.signature_of(&empty), Some(UpperBoundSignature::empty(2)));
    }

    #[test]
    fn empty_signature_is_mlrp_dominated_by_prior() {
        let mu0 = StatePrior::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let poly = ObliviousPolytope::new(eps(0.7), mu0.clone());
        let v = poly.vertex(UpperBoundSignature::empty(3)).unwrap();
        for w in 1..4 {
            assert!(v.probs()[w] / v.probs()[w - 1] < mu0.probs()[w] / mu0.probs()[w - 1]);
        }
    }

    #[test]
    fn counterexample_state_belief_violates_middle_upper_bound() {
        let poly = uniform(3);
        let psi = [(-2.0f64).exp(), (-3.0f64).exp(), 1.0, (-1.0f64).exp()];
        let mu = StateBelief::normalized(psi.to_vec()).unwrap();
        let report = poly.membership(&mu).unwrap();
        assert!(!report.member);
        let bad: Vec<usize> = report.violations().map(|s| s.state).collect();
        assert_eq!(bad, vec![2]);
        assert!(report.slacks[1].upper < 0.0);
    }

    #[test]
    fn zero_entry_is_not_a_member() {
        let poly = uniform(2);
        let mu = StateBelief::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(!poly.contains(&mu));
        let db = DatabasePolytope::new(eps(1.0), symmetric_prior_from_state_prior(poly.prior()).unwrap());
        let pi = DatabaseBelief::new(vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert!(!db.contains(&pi));
    }

    #[test]
    fn vertex_counts_and_membership() {
        assert_eq!(uniform(1).vertices(20).unwrap().len(), 2);
        assert_eq!(uniform(2).vertices(20).unwrap().len(), 4);
        let poly = uniform(3);
        let vertices = poly.vertices(20).unwrap();
        assert_eq!(vertices.len(), 8);
        for (i, (sig, v)) in vertices.iter().enumerate() {
            let report = poly.membership(v).unwrap();
            assert!(report.member);
            assert_eq!(report.binding_count(), 3);
            assert_eq!(report.upper_binding_states(), sig.states());
            for (_, w) in &vertices[..i] {
                assert!(v.distance(w) > DEDUP_TOL);
            }
        }
        assert!(matches!(uniform(3).vertices(2), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn adjacency_size() {
        for n in 1..=4 {
            let mu0 = StatePrior::uniform(n).unwrap();
            let db = DatabasePolytope::new(eps(1.0), symmetric_prior_from_state_prior(&mu0).unwrap());
            assert_eq!(db.adjacency().len(), n << (n - 1));
            for &(lo, hi) in db.adjacency() {
                assert_eq!((lo ^ hi).count_ones(), 1);
                assert!(lo < hi);
            }
        }
    }

    fn example_one_db() -> DatabasePolytope {
        let pi0 = DatabasePrior::new(2, vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]).unwrap();
        DatabasePolytope::new(eps(1.0), pi0)
    }

    #[test]
    fn one_respondent_database_vertices_match_oblivious() {
        let mu0 = StatePrior::new(vec![0.3, 0.7]).unwrap();
        let db = DatabasePolytope::new(eps(0.8), DatabasePrior::new(1, vec![0.3, 0.7]).unwrap());
        let ob = ObliviousPolytope::new(eps(0.8), mu0);
        let dbv = db.vertices(16).unwrap();
        let obv = ob.vertices(20).unwrap();
        assert_eq!(dbv.len(), 2);
        for v in &dbv {
            let p = project_belief(v);
            assert!(obv.iter().any(|(_, w)| w.distance(&p) < 1e-12));
        }
    }

    #[test]
    fn example_one_database_vertices() {
        let db = example_one_db();
        let vertices = db.vertices(16).unwrap();
        assert_eq!(vertices.len(), 6);
        let ob = uniform(2);
        for v in &vertices {
            let m = db.membership(v).unwrap();
            assert!(m.member);
            assert!(m.binding >= 3);
            assert!(ob.contains(&project_belief(v)));
        }
    }

    #[test]
    fn exhaustive_search_agrees_with_height_functions() {
        let db = example_one_db();
        let fast = db.vertices(16).unwrap();
        let slow = db.vertices_exhaustive().unwrap();
        assert_eq!(fast.len(), slow.len());
        for v in &fast {
            assert!(slow.iter().any(|w| w.distance(v) < 1e-9));
        }
        let asym = DatabasePolytope::new(eps(0.6), DatabasePrior::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        let fast = asym.vertices(16).unwrap();
        let slow = asym.vertices_exhaustive().unwrap();
        assert_eq!(fast.len(), slow.len());
        for v in &fast {
            assert!(slow.iter().any(|w| w.distance(v) < 1e-9));
        }
    }

    #[test]
    fn database_cap() {
        let mu0 = StatePrior::uniform(5).unwrap();
        let db = DatabasePolytope::new(eps(1.0), symmetric_prior_from_state_prior(&mu0).unwrap());
        assert!(matches!(db.vertices(16), Err(Error::CapExceeded { .. })));
        assert!(matches!(db.vertices_exhaustive(), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn example_one_projection_gap_is_empty() {
        let db = example_one_db();
        let report = projection_gap(&db, &uniform(2), 16).unwrap();
        assert!(report.equal());
    }

    #[test]
    fn inconsistent_priors_rejected() {
        let db = DatabasePolytope::new(eps(1.0), DatabasePrior::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        assert!(matches!(projection_gap(&db, &uniform(2), 16), Err(Error::Invalid(_))));
    }

    #[test]
    fn lift_of_prior_exists() {
        let db = example_one_db();
        let lifted = lift_into(&db, &StateBelief::new(vec![1.0 / 3.0; 3]).unwrap()).unwrap().unwrap();
        assert!(db.contains(&lifted) || db.membership(&lifted).unwrap().worst_slack > -1e-7);
        let p = project_belief(&lifted);
        assert!(p.probs().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-9));
    }
}
