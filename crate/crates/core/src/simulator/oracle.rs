//! Exact decode profiles by listing every possible received matrix.
//!
//! These are deliberately naive: no subspace counting, no Gaussian binomials,
//! just RREF on each matrix. They are the ground truth the closed forms are
//! tested against.

use itertools::Itertools;
use num::bigint::BigUint;
use rayon::prelude::*;

use crate::gf::{FieldElement, FieldSpec};
use crate::partial::{DecodeProfile, Provenance, Scenario};
use crate::prob::ProbExact;

use super::matrix::{count_unit_rows, rref_in_place};
use super::SimError;

/// Largest number of matrices the non-systematic oracle will list.
pub const NS_LIMIT: u64 = 1 << 24;
/// Largest `C(n_t, n) * q^(n k)` the systematic oracle will accept.
pub const SYS_LIMIT: u64 = 1 << 26;

/// Every `n x k` matrix over `F_q`, tallied by rank and recovered packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleNs {
    pub profile: DecodeProfile,
    /// `joint[r][x]`: matrices of rank `r` with exactly `x` recovered packets.
    pub joint: Vec<Vec<u64>>,
    pub total: u64,
}

impl OracleNs {
    /// Matrices of each rank `0..=min(n, k)`.
    pub fn rank_counts(&self) -> Vec<u64> {
        self.joint.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn rank_probs(&self) -> Vec<ProbExact> {
        self.rank_counts()
            .into_iter()
            .map(|c| ratio(c, self.total))
            .collect()
    }

    /// `P(|X| = x | R = r)`, or `None` when no matrix has rank `r`.
    pub fn p_exact_given_rank(&self, r: u32, x: u32) -> Option<ProbExact> {
        let row = self.joint.get(r as usize)?;
        let of_rank: u64 = row.iter().sum();
        (of_rank > 0).then(|| ratio(row.get(x as usize).copied().unwrap_or(0), of_rank))
    }

    /// `P(|X| >= x | R = r)`, or `None` when no matrix has rank `r`.
    pub fn p_atleast_given_rank(&self, r: u32, x: u32) -> Option<ProbExact> {
        let row = self.joint.get(r as usize)?;
        let of_rank: u64 = row.iter().sum();
        (of_rank > 0).then(|| ratio(row.iter().skip(x as usize).sum(), of_rank))
    }
}

fn ratio(a: u64, b: u64) -> ProbExact {
    ProbExact::ratio_of(BigUint::from(a), BigUint::from(b))
}

fn checked_power(q: u64, e: u64, what: &'static str, limit: u64) -> Result<u64, SimError> {
    let too_large = || SimError::TooLarge { what, size: format!("{q}^{e}"), limit };
    let e = u32::try_from(e).map_err(|_| too_large())?;
    let v = q.checked_pow(e).ok_or_else(too_large)?;
    if v > limit {
        return Err(too_large());
    }
    Ok(v)
}

/// Writes the base-`q` digits of `idx` into `out`, least significant first.
fn fill_digits(field: &FieldSpec, mut idx: u64, out: &mut [FieldElement]) {
    let q = field.order() as u64;
    for slot in out {
        *slot = field.element((idx % q) as u32).expect("digit below q");
        idx /= q;
    }
}

/// Exact profile of a uniformly random `n x k` matrix, by listing all `q^(n k)`.
pub fn exhaustive_oracle_ns(field: &FieldSpec, k: u32, n: u32) -> Result<OracleNs, SimError> {
    let q = field.order() as u64;
    let scenario = Scenario::non_systematic(q, k, n);
    scenario.validate()?;
    let total = checked_power(q, n as u64 * k as u64, "non-systematic enumeration", NS_LIMIT)?;
    let (rows, cols) = (n as usize, k as usize);
    let ranks = n.min(k) as usize + 1;
    let empty = || vec![vec![0u64; cols + 1]; ranks];

    let joint = (0..total)
        .into_par_iter()
        .map_init(
            || vec![FieldElement::ZERO; rows * cols],
            |buf, idx| {
                fill_digits(field, idx, buf);
                let rank = rref_in_place(field, buf, rows, cols);
                (rank, count_unit_rows(buf, cols))
            },
        )
        .fold(empty, |mut acc, (r, x)| {
            acc[r][x] += 1;
            acc
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (ca, cb) in ra.iter_mut().zip(rb) {
                    *ca += cb;
                }
            }
            a
        });

    let mut atleast = vec![0u64; cols + 2];
    for row in &joint {
        for (x, c) in row.iter().enumerate() {
            atleast[x] += c;
        }
    }
    for x in (0..=cols).rev() {
        atleast[x] += atleast[x + 1];
    }
    let values = atleast[..=cols].iter().map(|&c| ratio(c, total)).collect();
    Ok(OracleNs {
        profile: DecodeProfile::new(scenario, Provenance::Exhaustive, values),
        joint,
        total,
    })
}

/// Exact systematic profile: every `n`-subset of the `n_t` sent positions,
/// and for each, every assignment of the coded rows it contains.
///
/// Subsets with fewer coded rows stand for proportionally more equally likely
/// outcomes, so each one is weighted by `q^(k * sources received)`.
pub fn exhaustive_oracle_sys(field: &FieldSpec, k: u32, n_t: u32, n: u32) -> Result<DecodeProfile, SimError> {
    if n > n_t {
        return Err(SimError::ReceivedExceedsTransmitted { n, n_t });
    }
    let q = field.order() as u64;
    let scenario = Scenario::systematic(q, k, n_t, n);
    scenario.validate()?;
    let per_subset = checked_power(q, n as u64 * k as u64, "systematic enumeration", SYS_LIMIT)?;
    let subsets = crate::qcombin::binomial(n_t, n as i64);
    let size = &subsets * per_subset;
    if size > BigUint::from(SYS_LIMIT) {
        return Err(SimError::TooLarge {
            what: "systematic enumeration",
            size: size.to_string(),
            limit: SYS_LIMIT,
        });
    }

    let cols = k as usize;
    let choices: Vec<Vec<u32>> = (0..n_t).combinations(n as usize).collect();
    let exact = choices
        .par_iter()
        .map(|chosen| {
            let sources: Vec<u32> = chosen.iter().copied().filter(|&p| p < k).collect();
            let coded = chosen.len() - sources.len();
            let weight = q.pow((sources.len() * cols) as u32);
            let mut tally = vec![0u64; cols + 1];
            let mut buf = vec![FieldElement::ZERO; chosen.len() * cols];
            for idx in 0..q.pow((coded * cols) as u32) {
                buf.fill(FieldElement::ZERO);
                for (i, &p) in sources.iter().enumerate() {
                    buf[i * cols + p as usize] = FieldElement::ONE;
                }
                fill_digits(field, idx, &mut buf[sources.len() * cols..]);
                rref_in_place(field, &mut buf, chosen.len(), cols);
                tally[count_unit_rows(&buf, cols)] += weight;
            }
            tally
        })
        .reduce(
            || vec![0u64; cols + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let total = choices.len() as u64 * per_subset;
    let values = (0..=cols)
        .map(|x| ratio(exact[x..].iter().sum(), total))
        .collect();
    Ok(DecodeProfile::new(scenario, Provenance::Exhaustive, values))
}
