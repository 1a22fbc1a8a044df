//! Fixed-point money.
//!
//! Fiat is carried with 4 decimal places and cryptocurrency with 8, both as
//! signed 64-bit minor units, so ledger audits are exact integer sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("malformed decimal {0:?}")]
    Malformed(String),
    #[error("{0:?} has more than {1} decimal places")]
    TooPrecise(String, u32),
    #[error("amount out of range")]
    Overflow,
    #[error("conversion rate must be strictly positive")]
    NonPositiveRate,
}

/// A signed decimal with `DIGITS` fractional digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed<const DIGITS: u32>(i64);

pub type Fiat = Fixed<4>;
pub type Crypto = Fixed<8>;

impl<const DIGITS: u32> Fixed<DIGITS> {
    pub const ZERO: Self = Fixed(0);
    pub const SCALE: i64 = 10i64.pow(DIGITS);

    pub const fn from_minor(minor: i64) -> Self {
        Fixed(minor)
    }

    pub const fn minor(self) -> i64 {
        self.0
    }

    pub fn from_units(units: i64) -> Self {
        Fixed(units * Self::SCALE)
    }

    /// Rounds half-to-even onto the fixed grid.
    pub fn from_f64(v: f64) -> Result<Self, AmountError> {
        let scaled = (v * Self::SCALE as f64).round_ties_even();
        if !scaled.is_finite() || scaled.abs() >= i64::MAX as f64 {
            return Err(AmountError::Overflow);
        }
        Ok(Fixed(scaled as i64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        self.0.checked_add(other.0).map(Fixed)
    }

    pub fn checked_sub(self, other: Self) -> Option<Self> {
        self.0.checked_sub(other.0).map(Fixed)
    }

    pub fn checked_mul_int(self, k: u64) -> Option<Self> {
        i64::try_from(k)
            .ok()
            .and_then(|k| self.0.checked_mul(k))
            .map(Fixed)
    }
}

impl<const DIGITS: u32> std::ops::Add for Fixed<DIGITS> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("fixed-point overflow")
    }
}

impl<const DIGITS: u32> std::ops::Sub for Fixed<DIGITS> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("fixed-point overflow")
    }
}

impl<const DIGITS: u32> std::ops::AddAssign for Fixed<DIGITS> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const DIGITS: u32> std::ops::SubAssign for Fixed<DIGITS> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const DIGITS: u32> std::iter::Sum for Fixed<DIGITS> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl<const DIGITS: u32> fmt::Display for Fixed<DIGITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = Self::SCALE as u64;
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / scale,
            abs % scale,
            width = DIGITS as usize
        )
    }
}

impl<const DIGITS: u32> fmt::Debug for Fixed<DIGITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<const DIGITS: u32> FromStr for Fixed<DIGITS> {
    type Err = AmountError;

    /// Exact decimal parsing; no rounding is applied.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || AmountError::Malformed(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(malformed());
        }
        if frac_part.len() > DIGITS as usize {
            return Err(AmountError::TooPrecise(s.to_string(), DIGITS));
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| AmountError::Overflow)?
        };
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| malformed())?
        };
        frac *= 10i64.pow(DIGITS - frac_part.len() as u32);
        let minor = int
            .checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or(AmountError::Overflow)?;
        Ok(Fixed(if neg { -minor } else { minor }))
    }
}

impl<const DIGITS: u32> Serialize for Fixed<DIGITS> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, const DIGITS: u32> Deserialize<'de> for Fixed<DIGITS> {
    /// Accepts either a decimal string (exact) or a number (rounded).
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
            Float(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(i) => i
                .checked_mul(Self::SCALE)
                .map(Fixed)
                .ok_or_else(|| serde::de::Error::custom("amount out of range")),
            Raw::Float(f) => Self::from_f64(f).map_err(serde::de::Error::custom),
        }
    }
}

/// Integer division rounding half to even.
fn div_round_half_even(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

/// Fiat currency per cryptocurrency unit.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct ConversionRate(Fiat);

impl ConversionRate {
    pub fn new(fiat_per_crypto: Fiat) -> Result<Self, AmountError> {
        if fiat_per_crypto.minor() <= 0 {
            return Err(AmountError::NonPositiveRate);
        }
        Ok(ConversionRate(fiat_per_crypto))
    }

    pub fn fiat_per_crypto(self) -> Fiat {
        self.0
    }
}

impl<'de> Deserialize<'de> for ConversionRate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ConversionRate::new(Fiat::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Converts a cryptocurrency amount to fiat at `rate`, rounding half-even
/// to the fiat minor unit.
pub fn convert_price(amount: Crypto, rate: ConversionRate) -> Fiat {
    let num = amount.minor() as i128 * rate.0.minor() as i128;
    let fiat = div_round_half_even(num, Crypto::SCALE as i128);
    Fiat::from_minor(i64::try_from(fiat).expect("fiat amount out of range"))
}

/// Inverse of [`convert_price`], rounding half-even to the crypto minor unit.
pub fn convert_to_crypto(amount: Fiat, rate: ConversionRate) -> Crypto {
    let num = amount.minor() as i128 * Crypto::SCALE as i128;
    let crypto = div_round_half_even(num, rate.0.minor() as i128);
    Crypto::from_minor(i64::try_from(crypto).expect("crypto amount out of range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rate(s: &str) -> ConversionRate {
        ConversionRate::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let f: Fiat = "2.5".parse().unwrap();
        assert_eq!(f.minor(), 25_000);
        assert_eq!(f.to_string(), "2.5000");
        assert_eq!("-0.0001".parse::<Fiat>().unwrap().to_string(), "-0.0001");
        assert!("1.00001".parse::<Fiat>().is_err());
        assert!("abc".parse::<Fiat>().is_err());
        assert!(".".parse::<Fiat>().is_err());
    }

    #[test]
    fn zero_crypto_is_zero_fiat() {
        assert_eq!(convert_price(Crypto::ZERO, rate("8")), Fiat::ZERO);
    }

    #[test]
    fn quarter_crypto_at_rate_eight() {
        let fiat = convert_price("0.25".parse().unwrap(), rate("8"));
        assert_eq!(fiat, "2.0".parse().unwrap());
    }

    #[test]
    fn non_positive_rate_rejected() {
        assert!(ConversionRate::new(Fiat::ZERO).is_err());
        assert!(ConversionRate::new("-1".parse().unwrap()).is_err());
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(div_round_half_even(5, 2), 2);
        assert_eq!(div_round_half_even(7, 2), 4);
        assert_eq!(div_round_half_even(-5, 2), -2);
        assert_eq!(div_round_half_even(6, 4), 2);
    }

    proptest! {
        #[test]
        fn fiat_crypto_round_trip_within_one_minor_unit(
            fiat in 0i64..1_000_000_000,
            rate_minor in 1i64..100_000_000,
        ) {
            let r = ConversionRate::new(Fiat::from_minor(rate_minor)).unwrap();
            let back = convert_price(convert_to_crypto(Fiat::from_minor(fiat), r), r);
            prop_assert!((back.minor() - fiat).abs() <= 1);
        }

        #[test]
        fn display_parse_round_trip(minor in any::<i64>().prop_filter("no MIN", |m| *m != i64::MIN)) {
            let f = Crypto::from_minor(minor);
            prop_assert_eq!(f.to_string().parse::<Crypto>().unwrap(), f);
        }
    }
}
