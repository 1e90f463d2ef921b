//! Random instances and independent oracles shared by the test targets.
#![allow(dead_code)]

use dpdesign::design::{weights_for_support, SupportWeights};
use dpdesign::polytope::ObliviousPolytope;
use dpdesign::simplex::{LinearProgram, Relation};
use dpdesign::{
    build_signal_matrix, interim_value, Belief, BeliefDistribution, DecisionProblem, EpsilonBudget, ObliviousMechanism,
    StateBelief, StatePrior,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn eps(x: f64) -> EpsilonBudget {
    EpsilonBudget::new(x).unwrap()
}

/// Full-support prior with entries bounded away from zero.
pub fn random_prior(rng: &mut impl Rng, states: usize) -> StatePrior {
    let raw: Vec<f64> = (0..states).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    StatePrior::new(raw.into_iter().map(|x| x / total).collect()).unwrap()
}

pub fn random_probs(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `u(a, ω) = c(ω) + g(a) + Σ_{b ≤ a} Σ_{i ≤ ω} x(b, i)` with `x ≥ 0`.
pub fn random_supermodular(rng: &mut impl Rng, actions: usize, states: usize) -> DecisionProblem {
    let c: Vec<f64> = (0..states).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let g: Vec<f64> = (0..actions).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut payoffs = vec![vec![0.0; states]; actions];
    let mut cross = vec![vec![0.0; states]; actions];
    for a in 0..actions {
        for w in 0..states {
            let x = if a > 0 && w > 0 { rng.gen_range(0.0..1.0) } else { 0.0 };
            let above = if a > 0 { cross[a - 1][w] } else { 0.0 };
            let left = if w > 0 { cross[a][w - 1] } else { 0.0 };
            let diag = if a > 0 && w > 0 { cross[a - 1][w - 1] } else { 0.0 };
            cross[a][w] = x + above + left - diag;
            payoffs[a][w] = c[w] + g[a] + cross[a][w];
        }
    }
    DecisionProblem::with_indexed_actions(payoffs).unwrap()
}

pub fn random_payoffs(rng: &mut impl Rng, actions: usize, states: usize) -> DecisionProblem {
    let payoffs = (0..actions).map(|_| (0..states).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    DecisionProblem::with_indexed_actions(payoffs).unwrap()
}

/// Brute force over every linearly independent vertex subset of size at most
/// `N + 1`, weighted by the closed-form Bayes-plausible weights.
pub fn brute_force_optimum(vertices: &[StateBelief], prior: &[f64], dp: &DecisionProblem) -> f64 {
    let m = vertices.len();
    let max_size = prior.len().min(m);
    let values: Vec<f64> = vertices.iter().map(|v| interim_value(v.probs(), dp).unwrap().value).collect();
    let mut best = f64::NEG_INFINITY;
    for mask in 1u64..1 << m {
        if mask.count_ones() as usize > max_size {
            continue;
        }
        let idx: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let subset: Vec<StateBelief> = idx.iter().map(|&j| vertices[j].clone()).collect();
        if let Ok(SupportWeights::Plausible(w)) = weights_for_support(&subset, prior) {
            let v: f64 = w.iter().zip(&idx).map(|(w, &j)| w * values[j]).sum();
            best = best.max(v);
        }
    }
    best
}

/// Basic Bayes-plausible distribution on a random vertex subset, found by an
/// LP with a random objective. Retries with larger subsets until feasible.
pub fn random_vertex_distribution(
    rng: &mut impl Rng,
    poly: &ObliviousPolytope,
) -> BeliefDistribution<StateBelief> {
    let vertices: Vec<StateBelief> = poly.vertices(20).unwrap().into_iter().map(|(_, v)| v).collect();
    let prior = poly.prior().probs().to_vec();
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    let mut size = rng.gen_range(prior.len().min(vertices.len())..=vertices.len());
    loop {
        order.shuffle(rng);
        let chosen: Vec<usize> = order[..size].to_vec();
        let mut lp = LinearProgram::maximize(chosen.iter().map(|_| rng.gen_range(-1.0..1.0)).collect());
        for (x, &p) in prior.iter().enumerate() {
            lp.constrain(chosen.iter().map(|&j| vertices[j].probs()[x]).collect(), Relation::Eq, p);
        }
        if let Ok(sol) = lp.solve() {
            let points = chosen
                .iter()
                .zip(&sol.x)
                .filter(|(_, &w)| w > 1e-12)
                .map(|(&j, &w)| (vertices[j].clone(), w));
            let total: f64 = sol.x.iter().filter(|&&w| w > 1e-12).sum();
            let points: Vec<_> = points.map(|(b, w)| (b, w / total)).collect();
            return BeliefDistribution::merged(points).unwrap();
        }
        size = (size + 1).min(vertices.len());
    }
}

/// A random ε-DP oblivious mechanism: a basic distribution, optionally mixed
/// with a second one, realized through its signal matrix.
pub fn random_private_mechanism(rng: &mut impl Rng, poly: &ObliviousPolytope) -> ObliviousMechanism {
    let first = random_vertex_distribution(rng, poly);
    let dist = if rng.gen_bool(0.5) {
        let second = random_vertex_distribution(rng, poly);
        let lambda = rng.gen_range(0.1..0.9);
        let points = first
            .iter()
            .map(|(b, w)| (b.clone(), lambda * w))
            .chain(second.iter().map(|(b, w)| (b.clone(), (1.0 - lambda) * w)));
        BeliefDistribution::merged(points.collect::<Vec<_>>()).unwrap()
    } else {
        first
    };
    let signal = build_signal_matrix(&dist, poly.prior().probs()).unwrap();
    ObliviousMechanism::new("random", signal).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
