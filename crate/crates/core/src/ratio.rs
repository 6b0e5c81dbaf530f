//! Exact rational helpers: parsing, formatting, and square-root bounds.
//!
//! Rationals travel through JSON as strings, either `"p/q"`, an integer
//! `"3"`, or a plain decimal `"0.25"`.

use num_bigint::{BigInt, BigUint};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RatioParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, `"-3"`, or `"1.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, RatioParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RatioParseError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| RatioParseError::Invalid(text.to_owned()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| RatioParseError::Invalid(text.to_owned()))?;
        if d.is_zero() {
            return Err(RatioParseError::ZeroDenominator(text.to_owned()));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let sign = if int_part.trim_start().starts_with('-') {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        let int_digits = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            BigInt::zero()
        } else {
            int_part
                .parse()
                .map_err(|_| RatioParseError::Invalid(text.to_owned()))?
        };
        if frac_part.is_empty() {
            return Ok(BigRational::from_integer(int_digits));
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RatioParseError::Invalid(text.to_owned()));
        }
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| RatioParseError::Invalid(text.to_owned()))?;
        let scale = BigInt::from(10u8).pow(frac_part.len() as u32);
        return Ok(BigRational::from_integer(int_digits)
            + BigRational::new(sign * frac, scale));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| RatioParseError::Invalid(text.to_owned()))?;
    Ok(BigRational::from_integer(n))
}

/// Renders a rational as `"p"` or `"p/q"` (always reduced).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational `u` with `u >= sqrt(x)`, tight to roughly `2^-bits`.
///
/// Requires `x >= 0`. Uses `sqrt(p/q) = sqrt(p*q)/q <= (isqrt(p*q*4^b)+1)/(q*2^b)`.
pub fn sqrt_upper_bound(x: &BigRational, bits: u32) -> BigRational {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return BigRational::zero();
    }
    let p = x.numer().magnitude().clone();
    let q = x.denom().magnitude().clone();
    let scale = BigUint::one() << bits;
    let scaled = &p * &q * &scale * &scale;
    let root = scaled.sqrt(); // floor square root
    BigRational::new(
        BigInt::from(root + BigUint::one()),
        BigInt::from(q * scale),
    )
}

/// Serde adapters serializing rationals as strings.
pub mod serde_rational {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(de::Error::custom)
    }
}

/// Serde adapters for vectors of rationals.
pub mod serde_rational_vec {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(rat("3/4"), BigRational::new(3.into(), 4.into()));
        assert_eq!(rat("-7"), BigRational::from_integer((-7).into()));
        assert_eq!(rat("0.25"), BigRational::new(1.into(), 4.into()));
        assert_eq!(rat("-0.5"), BigRational::new((-1).into(), 2.into()));
        assert_eq!(rat(" 2 / 6 "), BigRational::new(1.into(), 3.into()));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a.b").is_err());
        assert!(parse_rational("1/2/3").is_err());
    }

    #[test]
    fn format_round_trips() {
        for s in ["3/4", "-7", "22/7", "0"] {
            let r = rat(s);
            assert_eq!(rat(&format_rational(&r)), r);
        }
    }

    #[test]
    fn sqrt_bound_is_an_upper_bound() {
        for (num, den) in [(2i64, 1i64), (1, 2), (9, 4), (7, 5), (123456, 789)] {
            let x = BigRational::new(num.into(), den.into());
            let u = sqrt_upper_bound(&x, 16);
            assert!(&u * &u >= x, "bound below sqrt for {num}/{den}");
            // tightness: u^2 <= x * (1 + ~2^-14)
            let slack = BigRational::new(1.into(), 8192.into());
            assert!(&u * &u <= &x * (BigRational::one() + slack));
        }
        assert!(sqrt_upper_bound(&BigRational::zero(), 8).is_zero());
    }
}
