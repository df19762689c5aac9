//! Dense two-phase primal simplex over any [`Scalar`].
//!
//! Minimizes `c·x` subject to linear rows and `x ≥ 0`. Dantzig pricing is used
//! until a run of degenerate pivots, after which Bland's rule takes over.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    pub num_vars: usize,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, objective: vec![S::zero(); num_vars], constraints: Vec::new() }
    }

    pub fn add_var(&mut self, cost: S) -> usize {
        self.objective.push(cost);
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add(&mut self, coeffs: Vec<(usize, S)>, relation: Relation, rhs: S) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptimum<S> {
    pub x: Vec<S>,
    pub objective: S,
    /// One multiplier per constraint: `c_j − Σ_i duals_i·a_ij ≥ 0` at optimality.
    pub duals: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal(LpOptimum<S>),
    /// Phase-one multipliers: a column `a_j` with `farkas·a_j > 0` would
    /// reduce the infeasibility.
    Infeasible {
        farkas: Vec<S>,
    },
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_pivots: 50_000, stall_limit: 40 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Original,
    Slack,
    Artificial,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    reduced: Vec<S>,
    neg_value: S,
    basis: Vec<usize>,
    kinds: Vec<Kind>,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            self.rows[r][j] = self.rows[r][j].div_ref(&p);
        }
        self.rhs[r] = self.rhs[r].div_ref(&p);
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &nz {
                let delta = f.mul_ref(&self.rows[r][j]);
                self.rows[i][j] = self.rows[i][j].sub_ref(&delta);
                if !S::EXACT && self.rows[i][j].abs() < S::from_float(1e-13) {
                    self.rows[i][j] = S::zero();
                }
            }
            self.rows[i][c] = S::zero();
            let delta = f.mul_ref(&self.rhs[r]);
            self.rhs[i] = self.rhs[i].sub_ref(&delta);
            if !S::EXACT && self.rhs[i].abs() < S::from_float(1e-13) {
                self.rhs[i] = S::zero();
            }
        }
        let f = self.reduced[c].clone();
        if !f.is_zero() {
            for &j in &nz {
                let delta = f.mul_ref(&self.rows[r][j]);
                self.reduced[j] = self.reduced[j].sub_ref(&delta);
            }
            self.reduced[c] = S::zero();
            let delta = f.mul_ref(&self.rhs[r]);
            self.neg_value = self.neg_value.sub_ref(&delta);
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn set_objective(&mut self, cost: &[S]) {
        self.reduced = cost.to_vec();
        self.neg_value = S::zero();
        for r in 0..self.rows.len() {
            let cb = cost[self.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.reduced.len() {
                if !self.rows[r][j].is_zero() {
                    let delta = cb.mul_ref(&self.rows[r][j]);
                    self.reduced[j] = self.reduced[j].sub_ref(&delta);
                }
            }
            let delta = cb.mul_ref(&self.rhs[r]);
            self.neg_value = self.neg_value.sub_ref(&delta);
        }
    }

    /// Runs pivots until optimal; `Ok(false)` means unbounded.
    fn optimize(&mut self, allow: &dyn Fn(usize) -> bool, opts: &SimplexOptions) -> Result<bool> {
        let tol = S::tolerance();
        let neg_tol = tol.clone().neg();
        let mut stalled = 0usize;
        loop {
            if self.pivots > opts.max_pivots {
                return Err(Error::CapExceeded(format!("simplex exceeded {} pivots", opts.max_pivots)));
            }
            let bland = stalled >= opts.stall_limit;
            let mut enter: Option<usize> = None;
            for j in 0..self.reduced.len() {
                if !allow(j) || self.reduced[j] >= neg_tol {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && self.reduced[j] < self.reduced[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = enter else { return Ok(true) };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][c] <= tol {
                    continue;
                }
                let ratio = self.rhs[r].div_ref(&self.rows[r][c]);
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return Ok(false) };
            if ratio.is_zero_tol() {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(r, c);
        }
    }

    /// Multipliers read off the identity columns: `y_i = c_j − d_j`.
    fn multipliers(&self, identity: &[usize], cost: &[S], negated: &[bool]) -> Vec<S> {
        identity
            .iter()
            .zip(negated)
            .map(|(&j, &neg)| {
                let y = cost[j].sub_ref(&self.reduced[j]);
                if neg {
                    y.neg()
                } else {
                    y
                }
            })
            .collect()
    }
}

pub fn solve<S: Scalar>(lp: &LinearProgram<S>, opts: &SimplexOptions) -> Result<LpOutcome<S>> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    if lp.objective.len() != n {
        return Err(Error::Invalid("objective length differs from variable count".into()));
    }
    let mut negated = vec![false; m];
    let mut relations = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.iter().any(|(j, _)| *j >= n) {
            return Err(Error::Invalid(format!("constraint {i} references a missing variable")));
        }
        let mut rel = c.relation;
        if c.rhs < S::zero() {
            negated[i] = true;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        relations.push(rel);
    }
    let slacks = relations.iter().filter(|r| **r != Relation::Eq).count();
    let artificials = relations.iter().filter(|r| **r != Relation::Le).count();
    let width = n + slacks + artificials;
    let mut kinds = vec![Kind::Original; n];
    kinds.extend(std::iter::repeat_n(Kind::Slack, slacks));
    kinds.extend(std::iter::repeat_n(Kind::Artificial, artificials));
    let mut rows = vec![vec![S::zero(); width]; m];
    let mut rhs = Vec::with_capacity(m);
    let mut basis = vec![0; m];
    let mut identity = vec![0; m];
    let (mut next_slack, mut next_art) = (n, n + slacks);
    for (i, c) in lp.constraints.iter().enumerate() {
        let sgn = if negated[i] { S::one().neg() } else { S::one() };
        for (j, a) in &c.coeffs {
            rows[i][*j] = rows[i][*j].add_ref(&a.mul_ref(&sgn));
        }
        rhs.push(c.rhs.mul_ref(&sgn));
        match relations[i] {
            Relation::Le => {
                rows[i][next_slack] = S::one();
                basis[i] = next_slack;
                identity[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                rows[i][next_slack] = S::one().neg();
                next_slack += 1;
                rows[i][next_art] = S::one();
                basis[i] = next_art;
                identity[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                rows[i][next_art] = S::one();
                basis[i] = next_art;
                identity[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut t = Tableau { rows, rhs, reduced: Vec::new(), neg_value: S::zero(), basis, kinds, pivots: 0 };

    if artificials > 0 {
        let phase1: Vec<S> = t.kinds.iter().map(|k| if *k == Kind::Artificial { S::one() } else { S::zero() }).collect();
        t.set_objective(&phase1);
        t.optimize(&|_| true, opts)?;
        let infeasibility = t.neg_value.clone().neg();
        let scale = t.rhs.iter().fold(S::one(), |acc, b| acc.add_ref(&b.abs()));
        if infeasibility > S::tolerance().mul_ref(&scale) {
            return Ok(LpOutcome::Infeasible { farkas: t.multipliers(&identity, &phase1, &negated) });
        }
        for r in 0..m {
            if t.kinds[t.basis[r]] != Kind::Artificial {
                continue;
            }
            let tol = S::tolerance();
            if let Some(c) = (0..width).find(|&j| t.kinds[j] != Kind::Artificial && t.rows[r][j].abs() > tol) {
                t.pivot(r, c);
            }
        }
    }

    let mut cost = lp.objective.clone();
    cost.resize(width, S::zero());
    t.set_objective(&cost);
    let kinds = t.kinds.clone();
    if !t.optimize(&|j| kinds[j] != Kind::Artificial, opts)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![S::zero(); n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs[r].clone();
        }
    }
    let duals = t.multipliers(&identity, &cost, &negated);
    Ok(LpOutcome::Optimal(LpOptimum { x, objective: t.neg_value.clone().neg(), duals }))
}
