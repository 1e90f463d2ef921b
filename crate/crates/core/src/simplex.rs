//! Dense two-phase primal simplex with Bland's rule.
//!
//! Sized for the design problems in this crate: tens of rows and up to a few
//! thousand columns. Returns basic solutions, so the columns carrying positive
//! weight are always linearly independent.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const PIVOT_TOL: f64 = 1e-11;
const REDUCED_COST_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const REINVERSIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("problem is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("objective is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// `max c'x` subject to linear constraints and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Structural variables in the final basis, in row order.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    /// Zero objective; any feasible point is optimal.
    pub fn feasibility(num_vars: usize) -> Self {
        Self::maximize(vec![0.0; num_vars])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.rows.push(Row { coeffs, relation, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.num_vars();
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Malformed(format!("row {i} has {} coefficients, expected {n}", row.coeffs.len())));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::Malformed(format!("row {i} has non-finite entries")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("objective has non-finite entries".into()));
        }
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    /// Row-major, `width = cols + 1`, last entry of each row is the rhs.
    cells: Vec<f64>,
    rows: usize,
    cols: usize,
    structural: usize,
    artificial_start: usize,
    basis: Vec<usize>,
    iterations: usize,
    /// Initial tableau, kept to recompute basic values at the end.
    original: Vec<f64>,
    /// Initial row index of each current row.
    origin: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let normalized: Vec<Row> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let relation = match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    Row { coeffs: r.coeffs.iter().map(|c| -c).collect(), relation, rhs: -r.rhs }
                } else {
                    r.clone()
                }
            })
            .collect();

        let slacks = normalized.iter().filter(|r| r.relation != Relation::Eq).count();
        let artificials = normalized.iter().filter(|r| r.relation != Relation::Le).count();
        let cols = n + slacks + artificials;
        let width = cols + 1;
        let artificial_start = n + slacks;

        let mut cells = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, artificial_start);
        for (i, row) in normalized.iter().enumerate() {
            let line = &mut cells[i * width..(i + 1) * width];
            line[..n].copy_from_slice(&row.coeffs);
            line[cols] = row.rhs;
            match row.relation {
                Relation::Le => {
                    line[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    line[next_slack] = -1.0;
                    next_slack += 1;
                    line[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    line[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let original = cells.clone();
        Self { cells, rows: m, cols, structural: n, artificial_start, basis, iterations: 0, original, origin: (0..m).collect() }
    }

    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(p, q);
        for v in &mut self.cells[p * w..(p + 1) * w] {
            *v *= inv;
        }
        self.cells[p * w + q] = 1.0;
        let pivot_row: Vec<f64> = self.cells[p * w..(p + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == p {
                continue;
            }
            let factor = self.cells[i * w + q];
            if factor == 0.0 {
                continue;
            }
            let line = &mut self.cells[i * w..(i + 1) * w];
            for (v, pv) in line.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            line[q] = 0.0;
        }
        self.basis[p] = q;
        self.iterations += 1;
    }

    /// Optimizes `costs` over the current basis; columns at or beyond
    /// `column_limit` never enter.
    fn optimize(&mut self, costs: &[f64], column_limit: usize) -> Result<(), LpError> {
        let max_iterations = 100_000 + 50 * (self.rows + self.cols);
        loop {
            if self.iterations > max_iterations {
                return Err(LpError::IterationLimit(max_iterations));
            }
            let duals: Vec<f64> = self.basis.iter().map(|&b| costs[b]).collect();
            // Bland: lowest-index improving column enters.
            let entering = (0..column_limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = costs[j] - (0..self.rows).map(|i| duals[i] * self.at(i, j)).sum::<f64>();
                reduced > REDUCED_COST_TOL
            });
            let Some(q) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((p, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.pivot(p, q);
        }
    }

    fn run(mut self, objective: &[f64]) -> Result<LpSolution, LpError> {
        let scale = 1.0 + (0..self.rows).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);

        if self.artificial_start < self.cols {
            let mut phase_one = vec![0.0; self.cols];
            for c in &mut phase_one[self.artificial_start..] {
                *c = -1.0;
            }
            self.optimize(&phase_one, self.cols)?;
            let residual: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.rhs(i))
                .sum();
            if residual > FEASIBILITY_TOL * scale {
                return Err(LpError::Infeasible(residual));
            }
            self.expel_artificials();
        }

        let mut costs = vec![0.0; self.cols];
        costs[..self.structural].copy_from_slice(objective);
        self.optimize(&costs, self.artificial_start)?;
        // Long pivot sequences on badly scaled rows can stop at a basis whose
        // tableau-computed reduced costs are stale; rebuild and resume.
        for _ in 0..REINVERSIONS {
            let before = self.iterations;
            if !self.reinvert() {
                break;
            }
            self.optimize(&costs, self.artificial_start)?;
            if self.iterations == before {
                break;
            }
        }

        let levels = self.refined_levels();
        let mut x = vec![0.0; self.structural];
        let mut basis = Vec::new();
        for (i, level) in levels.into_iter().enumerate() {
            let b = self.basis[i];
            if b < self.structural {
                x[b] = level.max(0.0);
                basis.push(b);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective: value, basis, iterations: self.iterations })
    }

    /// Pivots zero-level artificials out of the basis, dropping rows that are
    /// linear combinations of the others.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows {
            if self.basis[i] < self.artificial_start {
                i += 1;
                continue;
            }
            let replacement = (0..self.artificial_start)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.at(i, j).abs() > 1e-9);
            match replacement {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => self.drop_row(i),
            }
        }
    }

    fn drop_row(&mut self, i: usize) {
        let w = self.width();
        self.cells.drain(i * w..(i + 1) * w);
        self.basis.remove(i);
        self.origin.remove(i);
        self.rows -= 1;
    }

    /// Recomputes the tableau as `B⁻¹ A` from the initial rows. Returns false
    /// (leaving the tableau alone) if the basis matrix is singular.
    fn reinvert(&mut self) -> bool {
        let w = self.width();
        let m = self.rows;
        let b = DMatrix::from_fn(m, m, |r, c| self.original[self.origin[r] * w + self.basis[c]]);
        let a = DMatrix::from_fn(m, w, |r, c| self.original[self.origin[r] * w + c]);
        let Some(t) = b.lu().solve(&a) else {
            return false;
        };
        if t.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..w {
                self.cells[i * w + j] = t[(i, j)];
            }
            self.cells[i * w + self.basis[i]] = 1.0;
        }
        true
    }

    /// Basic variable levels from a fresh solve of `B x_B = b` on the initial
    /// rows, which removes error accumulated over many pivots. Falls back to
    /// the tableau values if the basis matrix is singular.
    fn refined_levels(&self) -> Vec<f64> {
        let w = self.width();
        let m = self.rows;
        let b = DMatrix::from_fn(m, m, |r, c| self.original[self.origin[r] * w + self.basis[c]]);
        let rhs = DVector::from_fn(m, |r, _| self.original[self.origin[r] * w + self.cols]);
        match b.lu().solve(&rhs) {
            Some(levels) if levels.iter().all(|v| v.is_finite()) => levels.iter().copied().collect(),
            _ => (0..m).map(|i| self.rhs(i)).collect(),
        }
    }
}
