//! Exact integer combinatorics: binomials, Gaussian binomials and q-ladder products.
//!
//! Out-of-range lower indices yield 0 throughout, which lets inclusion-exclusion
//! sums run over their natural index ranges without special cases.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num::bigint::BigUint;
use num::traits::{One, Zero};

pub use crate::prob::ProbExact;

/// An exact non-negative count.
pub type BigCount = BigUint;

pub fn pow(q: u64, e: u64) -> BigUint {
    num::pow(BigUint::from(q), e as usize)
}

/// `m choose d`; zero when `d < 0` or `d > m`.
pub fn binomial(m: u32, d: i64) -> BigCount {
    if d < 0 || d > m as i64 {
        return BigUint::zero();
    }
    let d = (d as u32).min(m - d as u32);
    let mut acc = BigUint::one();
    for i in 0..d {
        acc *= m - i;
        acc /= i + 1;
    }
    acc
}

type GaussKey = (u32, u32, u64);

fn gauss_cache() -> &'static RwLock<HashMap<GaussKey, BigUint>> {
    static CACHE: OnceLock<RwLock<HashMap<GaussKey, BigUint>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Number of `d`-dimensional subspaces of `F_q^m`; zero when `d < 0` or `d > m`.
///
/// Evaluated as `prod_{i<d} (q^{m-i} - 1) / prod_{i<d} (q^{i+1} - 1)` with one
/// exact division, and memoized on `(m, d, q)`.
pub fn gaussian_binomial(m: u32, d: i64, q: u64) -> BigCount {
    assert!(q >= 2, "field order must be at least 2");
    if d < 0 || d > m as i64 {
        return BigUint::zero();
    }
    let d = (d as u32).min(m - d as u32);
    if d == 0 {
        return BigUint::one();
    }
    let key = (m, d, q);
    if let Some(v) = gauss_cache().read().unwrap().get(&key) {
        return v.clone();
    }
    let one = BigUint::one();
    let mut numer = BigUint::one();
    let mut denom = BigUint::one();
    for i in 0..d {
        numer *= pow(q, (m - i) as u64) - &one;
        denom *= pow(q, (i + 1) as u64) - &one;
    }
    debug_assert!((&numer % &denom).is_zero());
    let value = numer / denom;
    gauss_cache().write().unwrap().insert(key, value.clone());
    value
}

/// `prod_{l=0}^{r-1} (q^n - q^l)`; the empty product is 1 and `r > n` gives 0.
///
/// This counts the ordered `r`-tuples of linearly independent vectors in `F_q^n`.
pub fn q_ladder(r: u32, n: u32, q: u64) -> BigCount {
    if r > n {
        return BigUint::zero();
    }
    let top = pow(q, n as u64);
    let mut step = BigUint::one();
    let mut acc = BigUint::one();
    for _ in 0..r {
        acc *= &top - &step;
        step *= q;
    }
    acc
}
