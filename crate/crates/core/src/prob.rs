//! Exact probabilities as lowest-terms big rationals.

use std::fmt;

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::Integer;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{0} lies outside [0, 1]")]
    OutOfRange(String),
}

/// A probability in `[0, 1]`, held exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbExact(BigRational);

impl ProbExact {
    pub fn zero() -> Self {
        ProbExact(BigRational::zero())
    }

    pub fn one() -> Self {
        ProbExact(BigRational::one())
    }

    /// `numer / denom`, reduced. Fails unless the quotient lies in `[0, 1]`.
    pub fn from_counts(numer: BigUint, denom: BigUint) -> Result<Self, ProbError> {
        if denom.is_zero() {
            return Err(ProbError::ZeroDenominator);
        }
        if numer > denom {
            return Err(ProbError::OutOfRange(format!("{numer}/{denom}")));
        }
        Ok(ProbExact(BigRational::new(
            BigInt::from_biguint(Sign::Plus, numer),
            BigInt::from_biguint(Sign::Plus, denom),
        )))
    }

    pub fn from_ratio(value: BigRational) -> Result<Self, ProbError> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(ProbError::OutOfRange(value.to_string()));
        }
        Ok(ProbExact(value))
    }

    /// Like [`ProbExact::from_counts`] for values known to be valid by construction.
    pub(crate) fn ratio_of(numer: BigUint, denom: BigUint) -> Self {
        Self::from_counts(numer, denom).expect("probability derived from counts lies in [0, 1]")
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
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

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn complement(&self) -> Self {
        ProbExact(BigRational::one() - &self.0)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }

    /// Decimal rendering with `digits` significant digits, rounded half-to-even.
    ///
    /// Layout follows C's `%.{digits}g`: plain notation when the decimal
    /// exponent lies in `[-4, digits)`, scientific (`1.25e-7`) otherwise, and
    /// trailing zeros removed.
    pub fn to_decimal(&self, digits: usize) -> String {
        format_significant(&self.0, digits.max(1))
    }
}

impl fmt::Display for ProbExact {
    /// `num/den` in lowest terms (`1/1` and `0/1` included).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Renders a float with the same significant-digit layout as [`ProbExact::to_decimal`].
pub fn format_float(v: f64, digits: usize) -> String {
    match BigRational::from_float(v) {
        Some(r) => format_significant(&r, digits.max(1)),
        None => v.to_string(),
    }
}

fn pow10(e: u32) -> BigInt {
    num::pow(BigInt::from(10u32), e as usize)
}

fn format_significant(value: &BigRational, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value < &BigRational::zero();
    let value = value.abs();
    let (num, den) = (value.numer().clone(), value.denom().clone());

    // exponent e with 10^e <= value < 10^(e+1)
    let mut e = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ge_pow = |e: i64| -> bool {
        if e >= 0 {
            num >= &den * pow10(e as u32)
        } else {
            &num * pow10((-e) as u32) >= den
        }
    };
    while !ge_pow(e) {
        e -= 1;
    }
    while ge_pow(e + 1) {
        e += 1;
    }

    // scaled = value * 10^(digits - 1 - e), rounded half-to-even
    let shift = digits as i64 - 1 - e;
    let (sn, sd) = if shift >= 0 {
        (&num * pow10(shift as u32), den.clone())
    } else {
        (num.clone(), &den * pow10((-shift) as u32))
    };
    let (mut int, rem) = sn.div_rem(&sd);
    let twice = rem * 2u32;
    if twice > sd || (twice == sd && int.is_odd()) {
        int += 1u32;
    }
    if int == pow10(digits as u32) {
        int = pow10(digits as u32 - 1);
        e += 1;
    }

    let mantissa = int.to_string();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if e < -4 || e >= digits as i64 {
        let (head, tail) = mantissa.split_at(1);
        out.push_str(head);
        let tail = tail.trim_end_matches('0');
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        out.push_str(&format!("e{e}"));
    } else if e < 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-e - 1) as usize));
        out.push_str(mantissa.trim_end_matches('0'));
    } else {
        let (int_part, frac) = mantissa.split_at(e as usize + 1);
        out.push_str(int_part);
        let frac = frac.trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
    }
    out
}
