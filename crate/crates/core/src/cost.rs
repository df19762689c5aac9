//! Compact cost representations for inner loops.
//!
//! Costs with a small common denominator are scaled to exact integers;
//! anything else falls back to `f64` compared with a relative slack.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::scalar::{common_denominator, Scalar};

pub const FLOAT_SLACK: f64 = 1e-9;

pub trait DpCost: Copy + PartialOrd + std::fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn plus(self, other: Self) -> Self;
    /// Strict improvement over `current`; ties keep the incumbent.
    fn improves(self, current: Self) -> bool;
}

impl DpCost for i64 {
    fn zero() -> Self {
        0
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn improves(self, current: Self) -> bool {
        self < current
    }
}

impl DpCost for f64 {
    fn zero() -> Self {
        0.0
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn improves(self, current: Self) -> bool {
        self < current - FLOAT_SLACK * current.abs().max(1.0)
    }
}

pub enum Encoded {
    Exact { values: Vec<i64>, scale: BigInt },
    Float(Vec<f64>),
}

/// Encodes non-negative costs so that sums of up to `terms` values stay exact
/// when possible.
pub fn encode<S: Scalar>(costs: &[S], terms: usize) -> Encoded {
    if let Some(scale) = common_denominator(costs) {
        if scale.bits() <= 32 {
            let limit = i64::MAX / 4 / (terms.max(1) as i64 + 1);
            let mut values = Vec::with_capacity(costs.len());
            let mut ok = true;
            for c in costs {
                let r = c.to_rational().expect("finite");
                let v = (r.numer() * (&scale / r.denom())).to_i64();
                match v {
                    Some(v) if v.abs() <= limit => values.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Encoded::Exact { values, scale };
            }
        }
    }
    Encoded::Float(costs.iter().map(|c| c.approx()).collect())
}

pub fn decode_exact<S: Scalar>(v: i64, scale: &BigInt) -> S {
    if scale.is_zero() {
        return S::zero();
    }
    let r = num_rational::BigRational::new(BigInt::from(v), scale.clone());
    S::from_rational(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn small_denominators_stay_exact() {
        let costs = vec![Rational::ratio(1, 2), Rational::ratio(1, 3), Rational::int(2)];
        match encode(&costs, 10) {
            Encoded::Exact { values, scale } => {
                assert_eq!(values, vec![3, 2, 12]);
                assert_eq!(decode_exact::<Rational>(5, &scale), Rational::ratio(5, 6));
            }
            Encoded::Float(_) => panic!("expected exact encoding"),
        }
    }

    #[test]
    fn float_ties_keep_incumbent() {
        assert!(!(1.0 + 1e-12).improves(1.0));
        assert!(!1.0f64.improves(1.0));
        assert!(0.5f64.improves(1.0));
    }
}
