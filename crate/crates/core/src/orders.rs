//! Peaked relative-risk comparisons, Fréchet representations of posterior
//! distributions and the supermodular order between them.

use crate::decision::{interim_value_unchecked, is_supermodular};
use crate::distribution::BeliefDistribution;
use crate::error::{Error, Result};
use crate::model::{Belief, DecisionProblem, StateBelief, LOG_RATIO_TOL, NORMALIZATION_TOL};
use crate::polytope::ObliviousPolytope;

/// Tolerance on CDF comparisons.
pub const SPM_TOL: f64 = 1e-9;

/// Peaks for each support point of the dominant distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakAssignment {
    /// Canonical (smallest) valid peak per support index.
    pub peaks: Vec<usize>,
    /// Every valid peak per support index, ascending.
    pub feasible_sets: Vec<Vec<usize>>,
}

fn require_positive(b: &StateBelief) -> Result<()> {
    match b.probs().iter().position(|&p| p <= 0.0) {
        Some(w) => Err(Error::ZeroEntry(w)),
        None => Ok(()),
    }
}

/// States `ω*` at which `μ / μ′` is unimodal: nondecreasing up to `ω*` and
/// nonincreasing after, with steps compared in logs.
pub fn unimodal_peaks(mu: &StateBelief, mu_prime: &StateBelief) -> Result<Vec<usize>> {
    require_positive(mu)?;
    require_positive(mu_prime)?;
    if mu.len() != mu_prime.len() {
        return Err(Error::Dimension { what: "belief", expected: mu.len(), got: mu_prime.len() });
    }
    let log_ratio: Vec<f64> = mu.probs().iter().zip(mu_prime.probs()).map(|(a, b)| a.ln() - b.ln()).collect();
    let steps: Vec<f64> = log_ratio.windows(2).map(|w| w[1] - w[0]).collect();
    // rising[k]: steps before k are all ≥ −tol; falling[k]: steps from k on are all ≤ tol.
    let m = log_ratio.len();
    let mut rising = vec![true; m];
    for k in 1..m {
        rising[k] = rising[k - 1] && steps[k - 1] >= -LOG_RATIO_TOL;
    }
    let mut falling = vec![true; m];
    for k in (0..m - 1).rev() {
        falling[k] = falling[k + 1] && steps[k] <= LOG_RATIO_TOL;
    }
    Ok((0..m).filter(|&k| rising[k] && falling[k]).collect())
}

/// Whether `tau` dominates `tau_prime` in the uniform-peaked relative-risk
/// order, with the peaks that witness it.
pub fn uprr_compare(
    tau: &BeliefDistribution<StateBelief>,
    tau_prime: &BeliefDistribution<StateBelief>,
) -> Result<Option<PeakAssignment>> {
    let mut feasible_sets = Vec::with_capacity(tau.len());
    for mu in tau.support() {
        let mut set: Vec<usize> = (0..mu.len()).collect();
        for mu_prime in tau_prime.support() {
            let ok = unimodal_peaks(mu, mu_prime)?;
            set.retain(|w| ok.contains(w));
        }
        if set.is_empty() {
            return Ok(None);
        }
        feasible_sets.push(set);
    }
    let peaks = feasible_sets.iter().map(|s| s[0]).collect();
    Ok(Some(PeakAssignment { peaks, feasible_sets }))
}

/// Largest state attaining its upper privacy bound, or 0 when none does.
pub fn largest_upper_bound_state(mu: &StateBelief, poly: &ObliviousPolytope) -> Result<usize> {
    let report = poly.membership(mu)?;
    Ok(report.upper_binding_states().into_iter().max().unwrap_or(0))
}

/// Joint law of `(ω, x)` on `Ω × [0, 1]` that pools support points by label
/// and lays them out along `x` in increasing label order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetRepresentation {
    breakpoints: Vec<f64>,
    segment_beliefs: Vec<StateBelief>,
    labels: Vec<f64>,
}

impl FrechetRepresentation {
    /// `0 = x_0 < … < x_K = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segment_beliefs(&self) -> &[StateBelief] {
        &self.segment_beliefs
    }

    /// Distinct labels, ascending, one per segment.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn num_segments(&self) -> usize {
        self.segment_beliefs.len()
    }

    pub fn segment_length(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    pub fn num_states(&self) -> usize {
        self.segment_beliefs[0].len()
    }

    /// `Σ_k |segment_k| f_k`.
    pub fn state_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_states()];
        for (k, f) in self.segment_beliefs.iter().enumerate() {
            let len = self.segment_length(k);
            for (o, p) in out.iter_mut().zip(f.probs()) {
                *o += len * p;
            }
        }
        out
    }

    /// `P(W ≤ w, X ≤ x)`.
    pub fn cdf(&self, w: usize, x: f64) -> f64 {
        let mut total = 0.0;
        for (k, f) in self.segment_beliefs.iter().enumerate() {
            let start = self.breakpoints[k];
            let overlap = (x - start).clamp(0.0, self.segment_length(k));
            if overlap > 0.0 {
                total += overlap * f.probs()[..=w.min(f.len() - 1)].iter().sum::<f64>();
            }
        }
        total
    }

    /// `E[h(W, label(X))]`.
    pub fn expectation(&self, h: impl Fn(usize, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (k, f) in self.segment_beliefs.iter().enumerate() {
            let len = self.segment_length(k);
            for (w, p) in f.probs().iter().enumerate() {
                total += len * p * h(w, self.labels[k]);
            }
        }
        total
    }
}

/// Neumaier-compensated running sums.
fn compensated_prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
        out.push(sum + carry);
    }
    out
}

pub fn frechet_representation(
    tau: &BeliefDistribution<StateBelief>,
    labels: &[f64],
) -> Result<FrechetRepresentation> {
    if labels.len() != tau.len() {
        return Err(Error::Dimension { what: "labels", expected: tau.len(), got: labels.len() });
    }
    if labels.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("labels must be finite".into()));
    }
    let mut distinct: Vec<f64> = labels.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let dim = tau.support()[0].len();
    let mut masses = Vec::with_capacity(distinct.len());
    let mut segment_beliefs = Vec::with_capacity(distinct.len());
    for &t in &distinct {
        let mut mass = 0.0;
        let mut joint = vec![0.0; dim];
        for ((b, w), &l) in tau.iter().zip(labels) {
            if l == t {
                mass += w;
                for (j, p) in joint.iter_mut().zip(b.probs()) {
                    *j += w * p;
                }
            }
        }
        masses.push(mass);
        segment_beliefs.push(StateBelief::normalized(joint)?);
    }
    let mut breakpoints = vec![0.0];
    breakpoints.extend(compensated_prefix_sums(&masses));
    *breakpoints.last_mut().expect("at least one segment") = 1.0;
    Ok(FrechetRepresentation { breakpoints, segment_beliefs, labels: distinct })
}

/// Outcome of a supermodular-order comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpmVerdict {
    pub dominates: bool,
    /// `max (G − F)` over the grid, positive when dominance fails.
    pub worst_violation: f64,
}

/// Whether `f` dominates `g` in the supermodular order: the bivariate CDF of
/// `f` lies weakly above that of `g` everywhere.
pub fn spm_dominates(f: &FrechetRepresentation, g: &FrechetRepresentation) -> Result<SpmVerdict> {
    if f.num_states() != g.num_states() {
        return Err(Error::Dimension { what: "states", expected: f.num_states(), got: g.num_states() });
    }
    let gap: f64 = f.state_marginal().iter().zip(g.state_marginal()).map(|(a, b)| (a - b).abs()).sum();
    if gap > NORMALIZATION_TOL {
        return Err(Error::FrechetClass(gap));
    }
    let mut grid: Vec<f64> = f.breakpoints().iter().chain(g.breakpoints()).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut worst = f64::NEG_INFINITY;
    for w in 0..f.num_states() {
        for &x in &grid {
            worst = worst.max(g.cdf(w, x) - f.cdf(w, x));
        }
    }
    Ok(SpmVerdict { dominates: worst <= SPM_TOL, worst_violation: worst })
}

/// Ex-ante values of a supermodular decision problem under two distributions.
pub fn supermodular_value_dominance(
    tau: &BeliefDistribution<StateBelief>,
    tau_prime: &BeliefDistribution<StateBelief>,
    dp: &DecisionProblem,
) -> Result<(f64, f64)> {
    if let (false, Some(v)) = is_supermodular(dp) {
        return Err(Error::NotSupermodular(format!(
            "actions {} and {} at states {} and {} fall short by {}",
            v.lower_action, v.higher_action, v.lower_state, v.higher_state, v.shortfall
        )));
    }
    dp.check_states(tau.support()[0].len())?;
    dp.check_states(tau_prime.support()[0].len())?;
    let value = |d: &BeliefDistribution<StateBelief>| d.expectation(|b| interim_value_unchecked(b.probs(), dp).value);
    Ok((value(tau), value(tau_prime)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::fixtures::{example_one, example_two};
    use crate::design::solve_oblivious;
    use crate::mechanisms::{induced_distribution, ObliviousMechanism};
    use crate::model::{EpsilonBudget, StatePrior};

    fn eps(x: f64) -> EpsilonBudget {
        EpsilonBudget::new(x).unwrap()
    }

    fn geometric_tau() -> BeliefDistribution<StateBelief> {
        let mu0 = StatePrior::uniform(2).unwrap();
        induced_distribution(&ObliviousMechanism::geometric(eps(1.0), 2).unwrap(), &mu0).unwrap()
    }

    fn example_two_tau() -> BeliefDistribution<StateBelief> {
        let mu0 = StatePrior::uniform(2).unwrap();
        solve_oblivious(&mu0, &example_two(), eps(1.0)).unwrap().distribution
    }

    #[test]
    fn geometric_peaks_against_example_two() {
        let a = uprr_compare(&geometric_tau(), &example_two_tau()).unwrap().unwrap();
        assert_eq!(a.peaks, vec![0, 1, 2]);
        assert!(uprr_compare(&example_two_tau(), &geometric_tau()).unwrap().is_none());
    }

    #[test]
    fn constant_ratio_allows_every_peak() {
        let mu0 = StatePrior::new(vec![0.2, 0.3, 0.1, 0.4]).unwrap();
        let d = BeliefDistribution::point_mass(mu0.as_belief());
        let a = uprr_compare(&d, &d).unwrap().unwrap();
        assert_eq!(a.feasible_sets, vec![vec![0, 1, 2, 3]]);
        assert_eq!(a.peaks, vec![0]);
    }

    #[test]
    fn zero_entries_are_rejected() {
        let z = BeliefDistribution::point_mass(StateBelief::new(vec![0.0, 1.0]).unwrap());
        let p = BeliefDistribution::point_mass(StateBelief::new(vec![0.5, 0.5]).unwrap());
        assert!(matches!(uprr_compare(&z, &p), Err(Error::ZeroEntry(0))));
        assert!(matches!(uprr_compare(&p, &z), Err(Error::ZeroEntry(0))));
    }

    #[test]
    fn lemma_peaks_for_geometric() {
        let mu0 = StatePrior::uniform(2).unwrap();
        let poly = ObliviousPolytope::new(eps(1.0), mu0);
        let tau = geometric_tau();
        let peaks: Vec<usize> =
            tau.support().iter().map(|b| largest_upper_bound_state(b, &poly).unwrap()).collect();
        assert_eq!(peaks, vec![0, 1, 2]);
    }

    #[test]
    fn frechet_of_geometric() {
        let tau = geometric_tau();
        let f = frechet_representation(&tau, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.num_segments(), 3);
        assert_eq!(f.breakpoints()[0], 0.0);
        assert_eq!(*f.breakpoints().last().unwrap(), 1.0);
        for (s, b) in f.segment_beliefs().iter().zip(tau.support()) {
            assert!(s.distance(b) < 1e-15);
        }
        for (m, p) in f.state_marginal().iter().zip([1.0 / 3.0; 3]) {
            assert!((m - p).abs() < 1e-12);
        }

        let pooled = frechet_representation(&tau, &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(pooled.num_segments(), 2);
        let w = tau.weights();
        let expected: Vec<f64> = (0..3)
            .map(|i| (w[1] * tau.support()[1].probs()[i] + w[2] * tau.support()[2].probs()[i]) / (w[1] + w[2]))
            .collect();
        for (a, b) in pooled.segment_beliefs()[1].probs().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }

        let flat = frechet_representation(&tau, &[5.0; 3]).unwrap();
        assert_eq!(flat.num_segments(), 1);
        for p in flat.segment_beliefs()[0].probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn supermodular_order_between_geometric_and_example_two() {
        let g = frechet_representation(&geometric_tau(), &[0.0, 1.0, 2.0]).unwrap();
        let t = example_two_tau();
        let f2 = frechet_representation(&t, &[0.0, 1.0]).unwrap();
        assert!(spm_dominates(&g, &g).unwrap().dominates);
        assert!(spm_dominates(&g, &f2).unwrap().dominates);
        let back = spm_dominates(&f2, &g).unwrap();
        assert!(!back.dominates);
        assert!(back.worst_violation > 0.0);
    }

    #[test]
    fn class_mismatch_is_an_error() {
        let g = frechet_representation(&geometric_tau(), &[0.0, 1.0, 2.0]).unwrap();
        let other = BeliefDistribution::point_mass(StateBelief::new(vec![0.5, 0.25, 0.25]).unwrap());
        let h = frechet_representation(&other, &[0.0]).unwrap();
        assert!(matches!(spm_dominates(&g, &h), Err(Error::FrechetClass(_))));
    }

    #[test]
    fn value_dominance() {
        let g = geometric_tau();
        let t = example_two_tau();
        let (a, b) = supermodular_value_dominance(&g, &t, &example_one()).unwrap();
        assert!(a >= b - 1e-12);
        let (c, d) = supermodular_value_dominance(&g, &g, &example_one()).unwrap();
        assert_eq!(c, d);
        assert!(matches!(supermodular_value_dominance(&g, &t, &example_two()), Err(Error::NotSupermodular(_))));
    }

    #[test]
    fn compensated_sums_are_exact_for_thirds() {
        let s = compensated_prefix_sums(&[1.0 / 3.0; 3]);
        assert!((s[2] - 1.0).abs() <= f64::EPSILON);
    }
}
