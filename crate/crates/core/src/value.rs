//! Exact rational values bound to placeholders.
//!
//! Values are always kept in reduced form with a positive denominator.
//! Rendering follows one fixed rule so that reified text and evaluation
//! agree: integers print bare, terminating fractions print as the shortest
//! decimal, anything else prints as `p/q`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(BigRational);

impl Value {
    pub fn zero() -> Self {
        Value(BigRational::zero())
    }

    pub fn from_integer(n: i64) -> Self {
        Value(BigRational::from_integer(BigInt::from(n)))
    }

    /// Panics if `den` is zero.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Value(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(r: BigRational) -> Self {
        Value(r)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn checked_div(&self, rhs: &Value) -> Option<Value> {
        if rhs.is_zero() {
            None
        } else {
            Some(Value(&self.0 / &rhs.0))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses an unsigned numeric literal: `12`, `0.75`, `1.5`. No sign,
    /// no grouping, no exponent.
    pub fn parse_literal(s: &str) -> Option<Value> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if s.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())) {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let numer = BigInt::from_str(&digits).ok()?;
        let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
        Some(Value(BigRational::new(numer, denom)))
    }

    /// Parses a number as it appears in free text: optional sign, optional
    /// leading currency symbol, comma-grouped digits, optional decimals.
    /// A trailing `p/q` form is also accepted.
    pub fn parse_number(s: &str) -> Option<Value> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = Value::parse_number(p)?;
            let q = Value::parse_number(q)?;
            return p.checked_div(&q);
        }
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let rest = rest.trim_start_matches(['$', '€', '£']);
        let (negative, rest) = match rest.strip_prefix('-') {
            Some(r) if !negative => (true, r),
            _ => (negative, rest),
        };
        let cleaned: String = rest.chars().filter(|&c| c != ',').collect();
        let v = Value::parse_literal(&cleaned)?;
        Some(if negative { -v } else { v })
    }

    fn terminating_scale(&self) -> Option<usize> {
        let mut den = self.0.denom().clone();
        let two = BigInt::from(2u32);
        let five = BigInt::from(5u32);
        let (mut twos, mut fives) = (0usize, 0usize);
        while den.is_even() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        den.is_one().then_some(twos.max(fives))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            return write!(f, "{}", self.0.numer());
        }
        match self.terminating_scale() {
            Some(scale) => {
                let factor = num_traits::pow(BigInt::from(10u32), scale);
                let scaled = (self.0.numer() * &factor) / self.0.denom();
                let sign = if scaled.is_negative() { "-" } else { "" };
                let digits = scaled.abs().to_string();
                let digits = format!("{digits:0>width$}", width = scale + 1);
                let (int_part, frac_part) = digits.split_at(digits.len() - scale);
                write!(f, "{sign}{int_part}.{frac_part}")
            }
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Value({self})")
    }
}

impl FromStr for Value {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Value::parse_number(s).ok_or_else(|| format!("not a number: {s:?}"))
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::from_integer(n)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Value> for &Value {
            type Output = Value;
            fn $method(self, rhs: &Value) -> Value {
                Value($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait for Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                Value($trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        Value(-self.0)
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        Value(-&self.0)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_integers_decimals_and_fractions() {
        assert_eq!(Value::from_integer(55).to_string(), "55");
        assert_eq!(Value::from_ratio(3, 2).to_string(), "1.5");
        assert_eq!(Value::from_ratio(-3, 8).to_string(), "-0.375");
        assert_eq!(Value::from_ratio(1, 3).to_string(), "1/3");
        assert_eq!(Value::from_ratio(-2, 6).to_string(), "-1/3");
        assert_eq!(Value::from_ratio(1, 20).to_string(), "0.05");
        assert_eq!(Value::from_ratio(108, 2).to_string(), "54");
    }

    #[test]
    fn parses_literals_exactly() {
        assert_eq!(Value::parse_literal("1.5"), Some(Value::from_ratio(3, 2)));
        assert_eq!(Value::parse_literal("10.50"), Some(Value::from_ratio(21, 2)));
        assert_eq!(Value::parse_literal("007"), Some(Value::from_integer(7)));
        assert_eq!(Value::parse_literal("1."), None);
        assert_eq!(Value::parse_literal(".5"), None);
        assert_eq!(Value::parse_literal("-1"), None);
    }

    #[test]
    fn parses_text_numbers() {
        assert_eq!(Value::parse_number("$1,234.50"), Some(Value::from_ratio(2469, 2)));
        assert_eq!(Value::parse_number("-$5"), Some(Value::from_integer(-5)));
        assert_eq!(Value::parse_number("$-5"), Some(Value::from_integer(-5)));
        assert_eq!(Value::parse_number("16.0"), Some(Value::from_integer(16)));
        assert_eq!(Value::parse_number("2/6"), Some(Value::from_ratio(1, 3)));
        assert_eq!(Value::parse_number("abc"), None);
    }

    #[test]
    fn rendering_parses_back() {
        for (n, d) in [(1, 3), (7, 8), (-22, 7), (5, 1), (0, 4), (-1, 1024)] {
            let v = Value::from_ratio(n, d);
            assert_eq!(Value::parse_number(&v.to_string()), Some(v));
        }
    }

    #[test]
    fn division_by_zero_is_checked() {
        assert!(Value::from_integer(3).checked_div(&Value::zero()).is_none());
    }
}
