use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Number type the algorithms are generic over.
///
/// Exact types report a zero tolerance; floating types compare with a
/// small slack so that sums of input data do not flip boundary decisions.
pub trait Scalar: Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    const EXACT: bool;

    fn tolerance() -> Self;

    fn floor_i64(&self) -> Option<i64>;

    fn ceil_i64(&self) -> Option<i64>;

    /// Exact rational value, if the number is finite.
    fn to_rational(&self) -> Option<BigRational>;

    fn from_rational(r: &BigRational) -> Self;

    fn int(v: i64) -> Self {
        Self::from_i64(v).expect("integer fits scalar")
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        Self::int(numer) / Self::int(denom)
    }

    /// Converts an f64 approximation (used for irrational thresholds such as n^{4/5}).
    fn from_float(x: f64) -> Self;

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_integral(&self) -> bool;

    fn add_ref(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self.clone() - other.clone()
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }

    fn div_ref(&self, other: &Self) -> Self {
        self.clone() / other.clone()
    }

    /// `a <= b` up to the type's tolerance.
    fn le_tol(&self, other: &Self) -> bool {
        *self <= other.add_ref(&Self::tolerance())
    }

    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::tolerance()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-9
    }

    fn floor_i64(&self) -> Option<i64> {
        let f = self.floor();
        (f.is_finite() && f.abs() < 9.0e18).then_some(f as i64)
    }

    fn ceil_i64(&self) -> Option<i64> {
        let c = self.ceil();
        (c.is_finite() && c.abs() < 9.0e18).then_some(c as i64)
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }

    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn from_float(x: f64) -> Self {
        x
    }

    fn is_integral(&self) -> bool {
        self.is_finite() && self.fract() == 0.0
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn floor_i64(&self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }

    fn ceil_i64(&self) -> Option<i64> {
        self.ceil().to_integer().to_i64()
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_float(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }

    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }
}

/// Sign function with the three cases −1, 0, 1.
pub fn sign<S: Scalar>(x: &S) -> i8 {
    if *x > S::zero() {
        1
    } else if *x < S::zero() {
        -1
    } else {
        0
    }
}

pub fn min_of<S: Scalar>(a: &S, b: &S) -> S {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max_of<S: Scalar>(a: &S, b: &S) -> S {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn sum<'a, S: Scalar>(items: impl IntoIterator<Item = &'a S>) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc.add_ref(x))
}

/// Least common multiple of the denominators, or `None` if some value is not finite.
pub fn common_denominator<S: Scalar>(values: &[S]) -> Option<BigInt> {
    let mut l = BigInt::one();
    for v in values {
        let r = v.to_rational()?;
        l = l.lcm(r.denom());
    }
    Some(l)
}

/// Largest step `g` such that every value is an integer multiple of `g`.
/// Returns `None` for an all-zero list or non-finite input.
pub fn lattice_step<S: Scalar>(values: &[S]) -> Option<S> {
    let l = common_denominator(values)?;
    let mut g = BigInt::zero();
    for v in values {
        let r = v.to_rational()?;
        let scaled = r.numer() * (&l / r.denom());
        g = g.gcd(&scaled);
    }
    if g.is_zero() {
        return None;
    }
    Some(S::from_rational(&BigRational::new(g, l)))
}

/// `"numerator/denominator"` form of an exact value.
pub fn format_exact<S: Scalar>(x: &S) -> String {
    match x.to_rational() {
        Some(r) => format!("{}/{}", r.numer(), r.denom()),
        None => format!("{x}"),
    }
}

pub fn parse_exact<S: Scalar>(text: &str) -> Option<S> {
    let t = text.trim();
    let r = match t.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().ok()?;
            let b: BigInt = b.trim().parse().ok()?;
            if b.is_zero() {
                return None;
            }
            BigRational::new(a, b)
        }
        None => BigRational::from_integer(t.parse().ok()?),
    };
    Some(S::from_rational(&r))
}

/// n^p for a positive integer n as a scalar approximation.
pub fn power<S: Scalar>(n: usize, p: f64) -> S {
    S::from_float((n as f64).powf(p))
}

pub fn ln<S: Scalar>(n: usize) -> S {
    S::from_float((n as f64).ln())
}
