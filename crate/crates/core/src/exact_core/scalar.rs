//! Exact rational scalars.

use num::{BigInt, BigRational, One, Signed, Zero};

/// Arbitrary-precision rational number in lowest terms with positive denominator.
pub type Scalar = BigRational;

pub fn q(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_one(s: &Scalar) -> bool {
    s.is_one()
}

pub fn is_zero(s: &Scalar) -> bool {
    s.is_zero()
}

/// `(-1)^k` as a scalar.
pub fn sign(k: i64) -> Scalar {
    if k.rem_euclid(2) == 0 {
        q(1)
    } else {
        q(-1)
    }
}

/// Renders `a` as `n` or `n/d`.
pub fn fmt_scalar(s: &Scalar) -> String {
    if s.denom().is_one() {
        s.numer().to_string()
    } else {
        format!("{}/{}", s.numer(), s.denom())
    }
}

pub fn abs(s: &Scalar) -> Scalar {
    s.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_positive_denominator() {
        let s = qf(6, -4);
        assert_eq!(s.numer(), &BigInt::from(-3));
        assert_eq!(s.denom(), &BigInt::from(2));
        assert_eq!(fmt_scalar(&s), "-3/2");
        assert_eq!(fmt_scalar(&q(5)), "5");
    }
}
