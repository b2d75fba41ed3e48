//! Recovery probabilities behind a Bernoulli packet-erasure channel.
//!
//! Each of `n_t` transmitted packets is lost independently with probability
//! `eps`; the received count is binomial and the recovery probability is the
//! binomial mixture of the conditional (given `N = n`) probabilities.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::partial::{Mode, PartialError, RecoveryTables};
use crate::prob::ProbExact;
use crate::qcombin::{binomial, pow};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("invalid erasure probability {0:?}: expected a decimal or fraction in [0, 1]")]
    InvalidEpsilon(String),
    #[error(transparent)]
    Scenario(#[from] PartialError),
}

/// Erasure probability, kept as an exact rational in `[0, 1]`.
///
/// Parses decimals (`0.2` becomes `1/5`) and fractions (`1/5`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epsilon(BigRational);

impl Epsilon {
    pub fn new(value: BigRational) -> Result<Self, ChannelError> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(ChannelError::InvalidEpsilon(value.to_string()));
        }
        Ok(Epsilon(value))
    }

    pub fn from_fraction(numer: u64, denom: u64) -> Result<Self, ChannelError> {
        if denom == 0 {
            return Err(ChannelError::InvalidEpsilon(format!("{numer}/0")));
        }
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn zero() -> Self {
        Epsilon(BigRational::zero())
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> BigUint {
        self.0.numer().to_biguint().expect("non-negative")
    }

    pub fn denom(&self) -> BigUint {
        self.0.denom().to_biguint().expect("positive")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Epsilon {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChannelError::InvalidEpsilon(s.to_string());
        let s = s.trim();
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        let value = if let Some((num, den)) = s.split_once('/') {
            if !digits(num) || !digits(den) {
                return Err(bad());
            }
            let den: BigInt = den.parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            BigRational::new(num.parse().map_err(|_| bad())?, den)
        } else {
            let (int, frac) = s.split_once('.').unwrap_or((s, ""));
            if !(digits(int) || (int.is_empty() && digits(frac))) || !(frac.is_empty() || digits(frac)) {
                return Err(bad());
            }
            let mantissa: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
            BigRational::new(mantissa, num::pow(BigInt::from(10u32), frac.len()))
        };
        Epsilon::new(value).map_err(|_| bad())
    }
}

/// One erasure-channel question: at least `x` of `k` recovered after `n_t` transmissions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasureScenario {
    pub q: u64,
    pub k: u32,
    pub n_t: u32,
    pub eps: Epsilon,
    pub x: u32,
    pub mode: Mode,
}

impl ErasureScenario {
    pub fn new(q: u64, k: u32, n_t: u32, eps: Epsilon, x: u32, mode: Mode) -> Result<Self, ChannelError> {
        if q < 2 {
            return Err(PartialError::InvalidOrder(q).into());
        }
        if k == 0 {
            return Err(PartialError::NoSourcePackets.into());
        }
        if x > k {
            return Err(PartialError::ThresholdTooLarge { x, k }.into());
        }
        if mode == Mode::Systematic && n_t == 0 {
            return Err(PartialError::NoTransmissions.into());
        }
        Ok(ErasureScenario { q, k, n_t, eps, x, mode })
    }
}

/// Numerators of `P(|X| >= x)` over the common denominator `b^n_t * q^(n_t k)`,
/// where `eps = a / b`.
fn erasure_counts(
    tables: &RecoveryTables,
    k: u32,
    mode: Mode,
    n_t: u32,
    eps: &Epsilon,
    thresholds: &[u32],
) -> (Vec<BigUint>, BigUint) {
    let q = tables.q();
    let (a, b) = (eps.numer(), eps.denom());
    let keep = &b - &a;
    let mut out = vec![BigUint::zero(); thresholds.len()];
    for n in 0..=n_t {
        // C(n_t, n) (b-a)^n a^(n_t-n) / b^n_t, with C(n_t, n) folded into the conditional
        let weight = num::pow(keep.clone(), n as usize)
            * num::pow(a.clone(), (n_t - n) as usize)
            * pow(q, (n_t - n) as u64 * k as u64);
        if weight.is_zero() {
            continue;
        }
        // conditional numerators over C(n_t, n) q^(n k)
        let conditional: Vec<BigUint> = match mode {
            Mode::NonSystematic => {
                let counts = tables.ns_counts(k, n);
                let choose = binomial(n_t, n as i64);
                thresholds
                    .iter()
                    .map(|&x| counts.get(x as usize).map_or_else(BigUint::zero, |c| c * &choose))
                    .collect()
            }
            Mode::Systematic => tables.sys_counts(k, n_t, n, thresholds),
        };
        for (slot, c) in out.iter_mut().zip(conditional) {
            if !c.is_zero() {
                *slot += &weight * c;
            }
        }
    }
    let denom = num::pow(b, n_t as usize) * pow(q, n_t as u64 * k as u64);
    (out, denom)
}

/// `P(|X| >= x)` after `n_t` transmissions over the erasure channel.
pub fn p_erasure_atleast(s: &ErasureScenario) -> ProbExact {
    let tables = RecoveryTables::new(s.q);
    let (mut numer, denom) = erasure_counts(&tables, s.k, s.mode, s.n_t, &s.eps, &[s.x]);
    ProbExact::ratio_of(numer.pop().unwrap(), denom)
}

pub(crate) fn erasure_profile_values(
    tables: &RecoveryTables,
    k: u32,
    mode: Mode,
    n_t: u32,
    eps: &Epsilon,
) -> Vec<ProbExact> {
    let thresholds: Vec<u32> = (0..=k).collect();
    let (numer, denom) = erasure_counts(tables, k, mode, n_t, eps, &thresholds);
    numer
        .into_iter()
        .map(|c| ProbExact::ratio_of(c, denom.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePoint {
    pub n_t: u32,
    pub x: u32,
    pub prob: ProbExact,
}

/// `p_erasure_atleast` over a grid, ordered by `n_t` then by the order of `xs`.
///
/// Grid rows are evaluated in parallel on the current rayon pool.
pub fn erasure_curve(
    q: u64,
    k: u32,
    eps: &Epsilon,
    mode: Mode,
    xs: &[u32],
    n_ts: RangeInclusive<u32>,
) -> Result<Vec<CurvePoint>, ChannelError> {
    for &x in xs {
        ErasureScenario::new(q, k, *n_ts.start(), eps.clone(), x, mode)?;
    }
    let tables = RecoveryTables::new(q);
    let rows: Vec<Vec<CurvePoint>> = n_ts
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n_t| {
            let (numer, denom) = erasure_counts(&tables, k, mode, n_t, eps, xs);
            numer
                .into_iter()
                .zip(xs)
                .map(|(c, &x)| CurvePoint { n_t, x, prob: ProbExact::ratio_of(c, denom.clone()) })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Exact binomial probability that `n` of `n_t` packets survive.
pub fn survival_pmf(n_t: u32, eps: &Epsilon) -> Vec<ProbExact> {
    let (a, b) = (eps.numer(), eps.denom());
    let keep = &b - &a;
    let denom = num::pow(b, n_t as usize);
    (0..=n_t)
        .map(|n| {
            let w = binomial(n_t, n as i64)
                * num::pow(keep.clone(), n as usize)
                * num::pow(a.clone(), (n_t - n) as usize);
            ProbExact::ratio_of(w, denom.clone())
        })
        .collect()
}

impl From<&Epsilon> for BigRational {
    fn from(e: &Epsilon) -> Self {
        e.0.clone()
    }
}
