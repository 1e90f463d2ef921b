use crate::error::{invalid, Error, Result};
use crate::model::{Belief, DEDUP_TOL, NORMALIZATION_TOL};

/// Finitely supported distribution of posteriors.
///
/// Support points are pairwise more than [`DEDUP_TOL`] apart in L∞ and the
/// weights form a probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefDistribution<B> {
    support: Vec<B>,
    weights: Vec<f64>,
}

impl<B: Belief> BeliefDistribution<B> {
    pub fn new(support: Vec<B>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return invalid("distribution of posteriors has empty support");
        }
        if support.len() != weights.len() {
            return Err(Error::Dimension { what: "weights", expected: support.len(), got: weights.len() });
        }
        let dim = support[0].len();
        if let Some(b) = support.iter().find(|b| b.len() != dim) {
            return Err(Error::Dimension { what: "support belief", expected: dim, got: b.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i].distance(&support[j]) <= DEDUP_TOL {
                    return invalid(format!("support points {j} and {i} coincide"));
                }
            }
        }
        Ok(Self { support, weights })
    }

    /// Builds a distribution from weighted points, merging points closer than
    /// [`DEDUP_TOL`] (the first occurrence is kept) and dropping zero weights.
    pub fn merged(points: impl IntoIterator<Item = (B, f64)>) -> Result<Self> {
        let mut support: Vec<B> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (belief, weight) in points {
            if weight == 0.0 {
                continue;
            }
            match support.iter().position(|b| b.distance(&belief) <= DEDUP_TOL) {
                Some(k) => weights[k] += weight,
                None => {
                    support.push(belief);
                    weights.push(weight);
                }
            }
        }
        Self::new(support, weights)
    }

    pub fn point_mass(belief: B) -> Self {
        Self { support: vec![belief], weights: vec![1.0] }
    }

    pub fn support(&self) -> &[B] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&B, f64)> + '_ {
        self.support.iter().zip(self.weights.iter().copied())
    }

    /// Weighted average of the support.
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.support[0].len()];
        for (belief, w) in self.iter() {
            for (o, p) in out.iter_mut().zip(belief.probs()) {
                *o += w * p;
            }
        }
        out
    }

    /// Whether the support averages back to `prior` within the L1 tolerance.
    pub fn bayes_plausible(&self, prior: &[f64]) -> bool {
        let mean = self.mean();
        mean.len() == prior.len()
            && mean.iter().zip(prior).map(|(a, b)| (a - b).abs()).sum::<f64>() <= NORMALIZATION_TOL
    }

    pub fn expectation(&self, f: impl Fn(&B) -> f64) -> f64 {
        self.iter().map(|(b, w)| w * f(b)).sum()
    }
}
