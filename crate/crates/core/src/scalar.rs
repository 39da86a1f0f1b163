//! Exact ordered-field scalars used by elimination and search.
//!
//! Elimination multiplies rows by ratios of coefficients, so every scalar in
//! this crate is an exact rational. Any `num_rational::Ratio<T>` over a signed
//! primitive or big integer qualifies; floating point does not.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// An exact ordered field with integer rounding.
pub trait Scalar:
    Clone + Ord + Hash + Debug + Display + Signed + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;

    /// The value as an `i64`, if it is integral and in range.
    fn to_int(&self) -> Option<i64>;

    fn floor_int(&self) -> Option<i64>;

    fn ceil_int(&self) -> Option<i64>;

    /// Positive factor that turns `coeffs` into coprime integers.
    ///
    /// Returns one for an all-zero slice.
    fn primitive_scale(coeffs: &[&Self]) -> Self;

    /// Parses `"p"` or `"p/q"`.
    fn parse_ratio(s: &str) -> Option<Self>;
}

impl<T> Scalar for Ratio<T>
where
    T: Clone
        + Integer
        + Signed
        + Hash
        + Debug
        + Display
        + FromPrimitive
        + ToPrimitive
        + std::str::FromStr
        + Send
        + Sync
        + 'static,
{
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(T::from_i64(v).expect("i64 fits the integer type"))
    }

    fn to_int(&self) -> Option<i64> {
        if self.is_integer() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }

    fn floor_int(&self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }

    fn ceil_int(&self) -> Option<i64> {
        self.ceil().to_integer().to_i64()
    }

    fn primitive_scale(coeffs: &[&Self]) -> Self {
        let mut den_lcm = T::one();
        let mut num_gcd = T::zero();
        for c in coeffs.iter().filter(|c| !c.is_zero()) {
            den_lcm = den_lcm.lcm(c.denom());
            num_gcd = num_gcd.gcd(c.numer());
        }
        if num_gcd.is_zero() {
            return Ratio::from_integer(T::one());
        }
        // Coefficients are in lowest terms, so no prime of the denominator lcm
        // divides the numerator gcd.
        Ratio::new(den_lcm, num_gcd)
    }

    fn parse_ratio(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: T = n.trim().parse().ok()?;
                let d: T = d.trim().parse().ok()?;
                if d.is_zero() {
                    None
                } else {
                    Some(Ratio::new(n, d))
                }
            }
            None => s.parse::<T>().ok().map(Ratio::from_integer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    type Q = Ratio<BigInt>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn primitive_scale_clears_denominators_and_common_factors() {
        let row = [q(1, 2), q(-3, 4), q(0, 1)];
        let refs: Vec<&Q> = row.iter().collect();
        let s = Q::primitive_scale(&refs);
        let scaled: Vec<Q> = row.iter().map(|c| c * &s).collect();
        assert_eq!(scaled, vec![q(2, 1), q(-3, 1), q(0, 1)]);

        let row = [q(4, 1), q(6, 1)];
        let refs: Vec<&Q> = row.iter().collect();
        assert_eq!(Q::primitive_scale(&refs), q(1, 2));
    }

    #[test]
    fn rounding_and_parsing() {
        assert_eq!(q(-3, 2).floor_int(), Some(-2));
        assert_eq!(q(-3, 2).ceil_int(), Some(-1));
        assert_eq!(q(6, 3).to_int(), Some(2));
        assert_eq!(q(1, 3).to_int(), None);
        assert_eq!(Q::parse_ratio("-2/6"), Some(q(-1, 3)));
        assert_eq!(Q::parse_ratio("7"), Some(q(7, 1)));
        assert_eq!(Q::parse_ratio("1/0"), None);
        assert_eq!(Ratio::<i64>::parse_ratio("3/9"), Some(Ratio::new(1, 3)));
    }
}
