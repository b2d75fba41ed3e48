//! Probability of recovering at least (or exactly) `x` of `k` source packets.
//!
//! Every quantity is first assembled as an exact integer count and divided
//! once at the end, so the signed inclusion-exclusion sums never lose
//! precision.
//!
//! Two facts carry the whole module:
//!
//! * The number of `r`-dimensional subspaces of `F_q^k` containing exactly
//!   `i` unit vectors is
//!   `C(k, i) * sum_j (-1)^j C(k-i, j) [k-i-j, r-i-j]_q`
//!   (inclusion-exclusion over the unit vectors that must be absent).
//! * A uniformly random `n x k` matrix of rank `r` has a uniformly random
//!   `r`-dimensional row space, and `[n r]_q / [k r]_q * prod(q^k - q^l)`
//!   equals `prod(q^n - q^l)`, so the number of `n x k` matrices whose row
//!   space contains at least `x` unit vectors is
//!   `sum_r atleast(k, r, x) * prod_{l<r} (q^n - q^l)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num::bigint::{BigInt, BigUint, Sign};
use num::traits::{Signed, Zero};
use thiserror::Error;

use crate::channel::Epsilon;
use crate::prob::ProbExact;
use crate::qcombin::{binomial, gaussian_binomial, pow, q_ladder, BigCount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartialError {
    #[error("field order must be at least 2, got {0}")]
    InvalidOrder(u64),
    #[error("at least one source packet is required")]
    NoSourcePackets,
    #[error("systematic transmission needs at least one transmitted packet")]
    NoTransmissions,
    #[error("invalid range: need x <= r <= k, got x = {x}, r = {r}, k = {k}")]
    InvalidRange { x: u32, r: u32, k: u32 },
    #[error("recovery threshold x = {x} exceeds k = {k}")]
    ThresholdTooLarge { x: u32, k: u32 },
    #[error("received packets n = {n} exceed transmitted packets n_T = {n_t}")]
    ReceivedExceedsTransmitted { n: u32, n_t: u32 },
}

/// Non-systematic: only coded packets. Systematic: the `k` source packets go first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    NonSystematic,
    Systematic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NonSystematic => "ns",
            Mode::Systematic => "sys",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ns" | "non-systematic" => Ok(Mode::NonSystematic),
            "sys" | "systematic" => Ok(Mode::Systematic),
            other => Err(format!("unknown mode {other:?} (expected ns or sys)")),
        }
    }
}

fn check_field(q: u64, k: u32) -> Result<(), PartialError> {
    if q < 2 {
        return Err(PartialError::InvalidOrder(q));
    }
    if k == 0 {
        return Err(PartialError::NoSourcePackets);
    }
    Ok(())
}

/// Non-systematic reception of `n` coded packets, asking for at least `x` recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioNs {
    pub q: u64,
    pub k: u32,
    pub n: u32,
    pub x: u32,
}

impl ScenarioNs {
    pub fn new(q: u64, k: u32, n: u32, x: u32) -> Result<Self, PartialError> {
        check_field(q, k)?;
        if x > k {
            return Err(PartialError::ThresholdTooLarge { x, k });
        }
        Ok(ScenarioNs { q, k, n, x })
    }
}

/// Systematic transmission of `n_t` packets (sources first), `n` of them received.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSys {
    pub q: u64,
    pub k: u32,
    pub n_t: u32,
    pub n: u32,
    pub x: u32,
}

impl ScenarioSys {
    pub fn new(q: u64, k: u32, n_t: u32, n: u32, x: u32) -> Result<Self, PartialError> {
        check_field(q, k)?;
        if n_t == 0 {
            return Err(PartialError::NoTransmissions);
        }
        if n > n_t {
            return Err(PartialError::ReceivedExceedsTransmitted { n, n_t });
        }
        if x > k {
            return Err(PartialError::ThresholdTooLarge { x, k });
        }
        Ok(ScenarioSys { q, k, n_t, n, x })
    }
}

/// How packets reach the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reception {
    NonSystematic { n: u32 },
    Systematic { n_t: u32, n: u32 },
    /// `n_t` packets sent over a Bernoulli erasure channel.
    Erasure { mode: Mode, n_t: u32, eps: Epsilon },
}

/// One experiment: field order, number of source packets, and reception model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub q: u64,
    pub k: u32,
    pub reception: Reception,
}

impl Scenario {
    pub fn non_systematic(q: u64, k: u32, n: u32) -> Self {
        Scenario { q, k, reception: Reception::NonSystematic { n } }
    }

    pub fn systematic(q: u64, k: u32, n_t: u32, n: u32) -> Self {
        Scenario { q, k, reception: Reception::Systematic { n_t, n } }
    }

    pub fn erasure(q: u64, k: u32, mode: Mode, n_t: u32, eps: Epsilon) -> Self {
        Scenario { q, k, reception: Reception::Erasure { mode, n_t, eps } }
    }

    pub fn mode(&self) -> Mode {
        match &self.reception {
            Reception::NonSystematic { .. } => Mode::NonSystematic,
            Reception::Systematic { .. } => Mode::Systematic,
            Reception::Erasure { mode, .. } => *mode,
        }
    }

    /// Transmitted packet count, where the model has one.
    pub fn n_t(&self) -> Option<u32> {
        match &self.reception {
            Reception::NonSystematic { .. } => None,
            Reception::Systematic { n_t, .. } | Reception::Erasure { n_t, .. } => Some(*n_t),
        }
    }

    /// Received packet count, unless it is random.
    pub fn n(&self) -> Option<u32> {
        match &self.reception {
            Reception::NonSystematic { n } | Reception::Systematic { n, .. } => Some(*n),
            Reception::Erasure { .. } => None,
        }
    }

    pub fn eps(&self) -> Option<&Epsilon> {
        match &self.reception {
            Reception::Erasure { eps, .. } => Some(eps),
            _ => None,
        }
    }

    /// Largest number of rows the received matrix can have.
    pub fn max_rows(&self) -> u32 {
        match &self.reception {
            Reception::NonSystematic { n } | Reception::Systematic { n, .. } => *n,
            Reception::Erasure { n_t, .. } => *n_t,
        }
    }

    pub fn validate(&self) -> Result<(), PartialError> {
        check_field(self.q, self.k)?;
        match &self.reception {
            Reception::NonSystematic { .. } => Ok(()),
            Reception::Systematic { n_t, n } => {
                ScenarioSys::new(self.q, self.k, *n_t, *n, 0).map(|_| ())
            }
            Reception::Erasure { mode: Mode::Systematic, n_t: 0, .. } => {
                Err(PartialError::NoTransmissions)
            }
            Reception::Erasure { .. } => Ok(()),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} q={} k={}", self.mode(), self.q, self.k)?;
        if let Some(n_t) = self.n_t() {
            write!(f, " n_T={n_t}")?;
        }
        if let Some(n) = self.n() {
            write!(f, " n={n}")?;
        }
        if let Some(eps) = self.eps() {
            write!(f, " eps={eps}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Analytic,
    Simulated,
    Exhaustive,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Simulated => "simulated",
            Provenance::Exhaustive => "exhaustive",
        }
    }
}

/// The curve `x -> P(|X| >= x)` for `x = 0..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeProfile {
    pub scenario: Scenario,
    pub provenance: Provenance,
    values: Vec<ProbExact>,
}

impl DecodeProfile {
    pub fn new(scenario: Scenario, provenance: Provenance, values: Vec<ProbExact>) -> Self {
        assert_eq!(values.len(), scenario.k as usize + 1, "one value per threshold 0..=k");
        DecodeProfile { scenario, provenance, values }
    }

    pub fn values(&self) -> &[ProbExact] {
        &self.values
    }

    /// `P(|X| >= x)`; zero beyond `k`.
    pub fn at_least(&self, x: u32) -> ProbExact {
        self.values
            .get(x as usize)
            .cloned()
            .unwrap_or_else(ProbExact::zero)
    }

    /// `P(|X| = x)` by differencing neighbouring thresholds.
    pub fn exactly(&self, x: u32) -> ProbExact {
        let diff = self.at_least(x).as_ratio() - self.at_least(x + 1).as_ratio();
        ProbExact::from_ratio(diff).expect("profile is non-increasing")
    }

    /// Non-increasing in `x` and equal to 1 at `x = 0`.
    pub fn is_well_formed(&self) -> bool {
        self.values.first().is_some_and(ProbExact::is_one)
            && self.values.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Subspace counts by number of contained unit vectors, for one `(q, k)`.
#[derive(Debug)]
struct UnitCounts {
    // exact[r][i]: r-dim subspaces of F_q^k containing exactly i unit vectors
    exact: Vec<Vec<BigUint>>,
    // atleast[r][x] for x in 0..=r+1 (last entry 0)
    atleast: Vec<Vec<BigUint>>,
}

impl UnitCounts {
    fn build(q: u64, k: u32) -> Self {
        let mut exact = Vec::with_capacity(k as usize + 1);
        let mut atleast = Vec::with_capacity(k as usize + 1);
        for r in 0..=k {
            let row: Vec<BigUint> = (0..=r)
                .map(|i| {
                    let mut sum = BigInt::zero();
                    for j in 0..=(k - i) {
                        let term = BigInt::from_biguint(
                            Sign::Plus,
                            binomial(k - i, j as i64)
                                * gaussian_binomial(k - i - j, r as i64 - i as i64 - j as i64, q),
                        );
                        if j % 2 == 0 {
                            sum += term;
                        } else {
                            sum -= term;
                        }
                    }
                    assert!(!sum.is_negative(), "subspace count must be non-negative");
                    binomial(k, i as i64) * sum.to_biguint().unwrap()
                })
                .collect();
            let mut tail = vec![BigUint::zero(); r as usize + 2];
            for i in (0..=r as usize).rev() {
                tail[i] = &tail[i + 1] + &row[i];
            }
            exact.push(row);
            atleast.push(tail);
        }
        UnitCounts { exact, atleast }
    }

    fn atleast(&self, r: u32, x: u32) -> &BigUint {
        static ZERO: OnceLock<BigUint> = OnceLock::new();
        self.atleast[r as usize]
            .get(x as usize)
            .unwrap_or_else(|| ZERO.get_or_init(BigUint::zero))
    }
}

fn unit_counts(q: u64, k: u32) -> Arc<UnitCounts> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u32), Arc<UnitCounts>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.read().unwrap().get(&(q, k)) {
        return Arc::clone(t);
    }
    let table = Arc::new(UnitCounts::build(q, k));
    cache
        .write()
        .unwrap()
        .entry((q, k))
        .or_insert(table)
        .clone()
}

fn check_rank_range(k: u32, r: u32, x: u32) -> Result<(), PartialError> {
    if x > r || r > k {
        return Err(PartialError::InvalidRange { x, r, k });
    }
    Ok(())
}

/// Number of `r`-dimensional subspaces of `F_q^k` containing exactly `x` unit vectors.
pub fn subspaces_with_exact_units(q: u64, k: u32, r: u32, x: u32) -> Result<BigCount, PartialError> {
    check_rank_range(k, r, x)?;
    Ok(unit_counts(q, k).exact[r as usize][x as usize].clone())
}

/// Number of `r`-dimensional subspaces of `F_q^k` containing at least `x` unit vectors.
pub fn subspaces_with_atleast_units(q: u64, k: u32, r: u32, x: u32) -> Result<BigCount, PartialError> {
    check_rank_range(k, r, x)?;
    Ok(unit_counts(q, k).atleast(r, x).clone())
}

/// Probability that a uniformly random `r`-dimensional subspace of `F_q^k`
/// contains a fixed `s`-dimensional subspace.
pub fn p_contains_subspace(q: u64, k: u32, r: u32, s: u32) -> Result<ProbExact, PartialError> {
    if s > k || r > k {
        return Err(PartialError::InvalidRange { x: s, r, k });
    }
    if s > r {
        return Ok(ProbExact::zero());
    }
    Ok(ProbExact::ratio_of(
        gaussian_binomial(k - s, r as i64 - s as i64, q),
        gaussian_binomial(k, r as i64, q),
    ))
}

/// `P(|X| = x | R = r)`: a rank-`r` row space contains exactly `x` unit vectors.
pub fn p_exact_units_given_rank(q: u64, k: u32, r: u32, x: u32) -> Result<ProbExact, PartialError> {
    let count = subspaces_with_exact_units(q, k, r, x)?;
    Ok(ProbExact::ratio_of(count, gaussian_binomial(k, r as i64, q)))
}

/// `P(|X| >= x | R = r)`.
pub fn p_atleast_units_given_rank(q: u64, k: u32, r: u32, x: u32) -> Result<ProbExact, PartialError> {
    if x == 0 {
        check_rank_range(k, r, x)?;
        return Ok(ProbExact::one());
    }
    let count = subspaces_with_atleast_units(q, k, r, x)?;
    Ok(ProbExact::ratio_of(count, gaussian_binomial(k, r as i64, q)))
}

/// Sum over ranks for a single threshold `x >= 1`.
fn ns_count_at(table: &UnitCounts, q: u64, k: u32, n: u32, x: u32) -> BigUint {
    (x..=n.min(k))
        .map(|r| table.atleast(r, x) * q_ladder(r, n, q))
        .sum()
}

/// Number of `n x k` matrices over `F_q` whose row space contains at least
/// `x` unit vectors, for every `x = 0..=k`. The total is `q^(n k)`.
pub fn ns_recovery_counts(q: u64, k: u32, n: u32) -> Vec<BigCount> {
    let table = unit_counts(q, k);
    let top = n.min(k);
    let ladders: Vec<BigUint> = (0..=top).map(|r| q_ladder(r, n, q)).collect();
    let mut counts = vec![BigUint::zero(); k as usize + 1];
    counts[0] = pow(q, n as u64 * k as u64);
    for x in 1..=top {
        counts[x as usize] = (x..=top)
            .map(|r| table.atleast(r, x) * &ladders[r as usize])
            .sum();
    }
    counts
}

/// `P(|X| >= x | N = n)` for non-systematic coding.
pub fn p_ns_atleast(s: &ScenarioNs) -> ProbExact {
    let ScenarioNs { q, k, n, x } = *s;
    if x == 0 {
        return ProbExact::one();
    }
    if x > n.min(k) {
        return ProbExact::zero();
    }
    let count = ns_count_at(&unit_counts(q, k), q, k, n, x);
    ProbExact::ratio_of(count, pow(q, n as u64 * k as u64))
}

/// `P(|X| >= x | N = n)` for systematic coding.
///
/// With `n_t <= k` every transmitted packet is a source packet and the answer
/// is the step `[x <= n]`. Otherwise the sum runs over the rank `r` of the
/// received matrix and the number `h` of received source packets, with the
/// `h` known packets removed: the coded rows then form an `(n-h) x (k-h)`
/// uniform matrix of rank `r-h` that must hold `max(0, x-h)` more unit vectors.
pub fn p_sys_atleast(s: &ScenarioSys) -> ProbExact {
    let ScenarioSys { q, k, n_t, n, x } = *s;
    if n_t <= k {
        return if x <= n { ProbExact::one() } else { ProbExact::zero() };
    }
    if x == 0 {
        return ProbExact::one();
    }
    if x > n.min(k) {
        return ProbExact::zero();
    }
    let h_min = (n + k).saturating_sub(n_t);
    let nk = n as u64 * k as u64;
    let mut total = BigUint::zero();
    for r in x..=n.min(k) {
        for h in h_min..=r {
            let (n_c, k_c, r_c) = (n - h, k - h, r - h);
            let x_c = x.saturating_sub(h);
            if x_c > r_c {
                continue;
            }
            let hyper = binomial(k, h as i64) * binomial(n_t - k, n_c as i64);
            if hyper.is_zero() {
                continue;
            }
            let table = unit_counts(q, k_c);
            let weight = hyper
                * pow(q, nk - n_c as u64 * k_c as u64)
                * q_ladder(r_c, n_c, q);
            total += weight * table.atleast(r_c, x_c);
        }
    }
    ProbExact::ratio_of(total, binomial(n_t, n as i64) * pow(q, nk))
}

/// Shared cache of non-systematic recovery counts keyed by `(k, n)`, for one field order.
///
/// Systematic probabilities decompose into a hypergeometric mixture over the
/// number of received source packets of non-systematic counts with fewer
/// packets, so a grid of systematic evaluations reuses these heavily.
#[derive(Debug)]
pub struct RecoveryTables {
    q: u64,
    ns: RwLock<HashMap<(u32, u32), Arc<Vec<BigUint>>>>,
}

impl RecoveryTables {
    pub fn new(q: u64) -> Self {
        assert!(q >= 2, "field order must be at least 2");
        RecoveryTables { q, ns: RwLock::new(HashMap::new()) }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// [`ns_recovery_counts`], memoized.
    pub fn ns_counts(&self, k: u32, n: u32) -> Arc<Vec<BigUint>> {
        if let Some(v) = self.ns.read().unwrap().get(&(k, n)) {
            return Arc::clone(v);
        }
        let counts = Arc::new(ns_recovery_counts(self.q, k, n));
        self.ns
            .write()
            .unwrap()
            .entry((k, n))
            .or_insert(counts)
            .clone()
    }

    /// Systematic recovery weights for the requested thresholds.
    ///
    /// Entry `i` is `P(|X| >= thresholds[i] | N = n) * C(n_t, n) * q^(n k)`.
    pub fn sys_counts(&self, k: u32, n_t: u32, n: u32, thresholds: &[u32]) -> Vec<BigUint> {
        assert!(n <= n_t, "received packets exceed transmitted packets");
        let q = self.q;
        let nk = n as u64 * k as u64;
        let scale = binomial(n_t, n as i64) * pow(q, nk);
        if n_t <= k {
            return thresholds
                .iter()
                .map(|&x| if x <= n { scale.clone() } else { BigUint::zero() })
                .collect();
        }
        let mut out = vec![BigUint::zero(); thresholds.len()];
        let h_min = (n + k).saturating_sub(n_t);
        for h in h_min..=n.min(k) {
            let (n_c, k_c) = (n - h, k - h);
            let weight = binomial(k, h as i64)
                * binomial(n_t - k, n_c as i64)
                * pow(q, nk - n_c as u64 * k_c as u64);
            if weight.is_zero() {
                continue;
            }
            let coded = self.ns_counts(k_c, n_c);
            for (slot, &x) in out.iter_mut().zip(thresholds) {
                if let Some(c) = coded.get(x.saturating_sub(h) as usize) {
                    if !c.is_zero() {
                        *slot += &weight * c;
                    }
                }
            }
        }
        out
    }

    /// Whole systematic profile via the hypergeometric mixture.
    pub fn sys_profile_values(&self, k: u32, n_t: u32, n: u32) -> Vec<ProbExact> {
        let thresholds: Vec<u32> = (0..=k).collect();
        let denom = binomial(n_t, n as i64) * pow(self.q, n as u64 * k as u64);
        self.sys_counts(k, n_t, n, &thresholds)
            .into_iter()
            .map(|c| ProbExact::ratio_of(c, denom.clone()))
            .collect()
    }

    pub fn ns_profile_values(&self, k: u32, n: u32) -> Vec<ProbExact> {
        let total = pow(self.q, n as u64 * k as u64);
        self.ns_counts(k, n)
            .iter()
            .map(|c| ProbExact::ratio_of(c.clone(), total.clone()))
            .collect()
    }
}

/// Analytic profile `x -> P(|X| >= x)` for `x = 0..=k`.
pub fn decode_profile(scenario: &Scenario) -> Result<DecodeProfile, PartialError> {
    scenario.validate()?;
    let tables = RecoveryTables::new(scenario.q);
    let values = match &scenario.reception {
        Reception::NonSystematic { n } => tables.ns_profile_values(scenario.k, *n),
        Reception::Systematic { n_t, n } => tables.sys_profile_values(scenario.k, *n_t, *n),
        Reception::Erasure { mode, n_t, eps } => {
            crate::channel::erasure_profile_values(&tables, scenario.k, *mode, *n_t, eps)
        }
    };
    Ok(DecodeProfile::new(scenario.clone(), Provenance::Analytic, values))
}
