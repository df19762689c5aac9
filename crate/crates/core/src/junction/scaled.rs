use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::{lattice_step, Scalar};

/// Edge lengths rounded up to integer multiples of Δ.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledGraph<S> {
    pub theta: S,
    pub delta: S,
    /// d_e with (d_e − 1)·Δ < ℓ_e ≤ d_e·Δ.
    pub mult: Vec<i64>,
    /// Smallest and largest valid layer labels.
    pub t_minus: i64,
    pub t_plus: i64,
}

fn to_i64(x: Option<i64>, what: &str) -> Result<i64> {
    x.ok_or_else(|| Error::CapExceeded(format!("{what} does not fit in 64 bits")))
}

fn base_delta<S: Scalar>(inst: &Instance<S>, theta: &S) -> Result<S> {
    if *theta <= S::zero() {
        return Err(Error::Invalid("θ must be positive".into()));
    }
    if inst.demands.is_empty() {
        return Err(Error::Invalid("scaling needs at least one demand".into()));
    }
    let l_min = inst
        .demands
        .iter()
        .map(|d| d.dist_budget.abs())
        .filter(|b| !b.is_zero())
        .reduce(|a, b| if b < a { b } else { a })
        .ok_or_else(|| Error::Invalid("every distance budget is zero".into()))?;
    let denom = S::int((inst.n.max(2) - 1) as i64);
    Ok(theta.mul_ref(&l_min).div_ref(&denom))
}

/// Δ = θ·ℓ_min/(n−1), with ℓ_min taken over the non-zero budgets.
pub fn scale_graph<S: Scalar>(inst: &Instance<S>, theta: &S) -> Result<ScaledGraph<S>> {
    let delta = base_delta(inst, theta)?;
    with_delta(inst, theta, delta)
}

/// Like [`scale_graph`], but when every length and budget is a multiple of a
/// common step g ≥ Δ, scales by g instead so rounding is the identity.
pub fn scale_graph_coarse<S: Scalar>(inst: &Instance<S>, theta: &S) -> Result<ScaledGraph<S>> {
    let delta = base_delta(inst, theta)?;
    let mut values = inst.lengths();
    values.extend(inst.demands.iter().map(|d| d.dist_budget.clone()));
    let delta = match lattice_step(&values) {
        Some(g) if g >= delta => g,
        _ => delta,
    };
    with_delta(inst, theta, delta)
}

fn with_delta<S: Scalar>(inst: &Instance<S>, theta: &S, delta: S) -> Result<ScaledGraph<S>> {
    let mult = inst.edges.iter().map(|e| to_i64(e.length.div_ref(&delta).ceil_i64(), "scaled length")).collect::<Result<Vec<_>>>()?;
    let l_max = inst.demands.iter().map(|d| d.dist_budget.abs()).fold(S::zero(), |a, b| if b > a { b } else { a });
    let reach = inst.min_length().mul_ref(&S::int((inst.n.max(2) - 1) as i64)).div_ref(&delta);
    let t_minus = to_i64(reach.floor_i64(), "layer range")?.min(0);
    let top = l_max.mul_ref(&(S::one() + theta.clone())).div_ref(&delta);
    let t_plus = to_i64(top.ceil_i64(), "layer range")? + t_minus.abs();
    Ok(ScaledGraph { theta: theta.clone(), delta, mult, t_minus, t_plus })
}

impl<S: Scalar> ScaledGraph<S> {
    pub fn scaled_length(&self, e: usize) -> S {
        S::int(self.mult[e]).mul_ref(&self.delta)
    }

    /// Scaled length of a path in units of Δ.
    pub fn units(&self, path: &[usize]) -> i64 {
        path.iter().map(|&e| self.mult[e]).sum()
    }

    /// Largest label sum I + J with (I+J)·Δ within the pair's relaxed bound.
    pub fn label_cap(&self, inst: &Instance<S>, pair: usize) -> Result<i64> {
        to_i64(inst.relaxed_bound(pair, &self.theta).div_ref(&self.delta).floor_i64(), "label cap")
    }

    pub fn is_valid_label(&self, label: i64) -> bool {
        (self.t_minus..=self.t_plus).contains(&label)
    }

    pub fn layer_count(&self) -> i64 {
        self.t_plus - self.t_minus + 1
    }
}
