//! Monte Carlo estimates of decode profiles, plus exhaustive enumeration for
//! parameters small enough to list every matrix.
//!
//! Every trial builds the received coding matrix explicitly and counts the
//! recovered packets from its RREF. Systematic runs place the unit vectors
//! in the matrix like any other row, so they never lean on the analytic
//! decomposition they are meant to check.

pub mod matrix;
pub mod oracle;
pub mod rng;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::channel::Epsilon;
use crate::gf::{FieldElement, FieldSpec};
use crate::partial::{DecodeProfile, Mode, PartialError, Provenance, Scenario};
use crate::prob::{format_float, ProbExact};
use crate::rankstats::RankPmf;

pub use matrix::{count_recoverable, rref, GfMatrix};
pub use oracle::{exhaustive_oracle_ns, exhaustive_oracle_sys, OracleNs};
pub use rng::{StreamKey, TrialRng, GENERATOR_ID};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("{what} would enumerate {size} cases, above the limit of {limit}")]
    TooLarge { what: &'static str, size: String, limit: u64 },
    #[error("received {n} packets but only {n_t} were transmitted")]
    ReceivedExceedsTransmitted { n: u32, n_t: u32 },
    #[error("erasure probability {0} needs a denominator that fits in 64 bits")]
    EpsilonTooFine(String),
    #[error(transparent)]
    Scenario(#[from] PartialError),
}

/// Outcome counts of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialReport {
    pub scenario: Scenario,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
    // recovered[i]: trials with exactly i packets recovered
    recovered: Vec<u64>,
    // ranks[r]: trials whose received matrix had rank r
    ranks: Vec<u64>,
}

impl TrialReport {
    /// Trials with at least `x` packets recovered.
    pub fn atleast_count(&self, x: u32) -> u64 {
        self.recovered.iter().skip(x as usize).sum()
    }

    pub fn recovered_counts(&self) -> &[u64] {
        &self.recovered
    }

    pub fn rank_counts(&self) -> &[u64] {
        &self.ranks
    }

    /// Exact empirical `P(|X| >= x)`.
    pub fn frequency(&self, x: u32) -> ProbExact {
        ProbExact::ratio_of(BigUint::from(self.atleast_count(x)), BigUint::from(self.trials))
    }

    /// `sqrt(p (1 - p) / trials)` at the empirical frequency.
    pub fn standard_error(&self, x: u32) -> f64 {
        binomial_se(self.frequency(x).to_f64(), self.trials)
    }

    pub fn rank_frequency(&self, r: u32) -> ProbExact {
        let c = self.ranks.get(r as usize).copied().unwrap_or(0);
        ProbExact::ratio_of(BigUint::from(c), BigUint::from(self.trials))
    }

    pub fn profile(&self) -> DecodeProfile {
        let values = (0..=self.scenario.k).map(|x| self.frequency(x)).collect();
        DecodeProfile::new(self.scenario.clone(), Provenance::Simulated, values)
    }

    /// `x,count,trials,frequency,se` for `x = 0..=k`.
    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = String::from("x,count,trials,frequency,se\n");
        for x in 0..=self.scenario.k {
            out.push_str(&format!(
                "{x},{},{},{},{}\n",
                self.atleast_count(x),
                self.trials,
                self.frequency(x).to_decimal(precision),
                format_float(self.standard_error(x), precision)
            ));
        }
        out
    }

    /// One JSON object per line: a header, then one line per threshold and per rank.
    pub fn summary_lines(&self) -> String {
        let s = &self.scenario;
        let mut lines = vec![json!({
            "kind": "run",
            "mode": s.mode().as_str(),
            "q": s.q,
            "k": s.k,
            "n_t": s.n_t(),
            "n": s.n(),
            "eps": s.eps().map(|e| e.to_string()),
            "trials": self.trials,
            "seed": self.seed,
            "generator": self.generator,
        })];
        for x in 0..=s.k {
            lines.push(json!({
                "kind": "atleast",
                "x": x,
                "count": self.atleast_count(x),
                "frequency": self.frequency(x).to_f64(),
                "se": self.standard_error(x),
            }));
        }
        for (r, &c) in self.ranks.iter().enumerate() {
            lines.push(json!({ "kind": "rank", "r": r, "count": c }));
        }
        let mut out = String::new();
        for l in lines {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        out
    }

    /// Checks every threshold against an analytic profile.
    pub fn compare(&self, analytic: &DecodeProfile) -> Vec<PointCheck> {
        (0..=self.scenario.k)
            .map(|x| {
                let expected = analytic.at_least(x);
                PointCheck::new(x, self.frequency(x), expected, self.trials, DEFAULT_FLOOR, 0.0)
            })
            .collect()
    }

    /// Checks rank frequencies against the exact pmf, with no absolute floor
    /// and a `0.5 / trials` continuity allowance.
    pub fn compare_ranks(&self, pmf: &RankPmf) -> Vec<PointCheck> {
        (0..=pmf.max_rank())
            .map(|r| {
                let slack = 0.5 / self.trials as f64;
                PointCheck::new(r, self.rank_frequency(r), pmf.prob(r), self.trials, 0.0, slack)
            })
            .collect()
    }
}

fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Absolute agreement always accepted between a simulated and an analytic point.
pub const DEFAULT_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Flag,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Flag => "flag",
            Verdict::Fail => "fail",
        }
    }
}

/// Pass within `max(floor, 3 se)`, flag up to `max(floor, 4 se)`, fail beyond.
pub fn classify(gap: f64, se: f64, floor: f64) -> Verdict {
    if gap <= floor.max(3.0 * se) {
        Verdict::Pass
    } else if gap <= floor.max(4.0 * se) {
        Verdict::Flag
    } else {
        Verdict::Fail
    }
}

/// One simulated-versus-exact comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub x: u32,
    pub empirical: ProbExact,
    pub analytic: ProbExact,
    pub gap: f64,
    /// Standard error at the empirical frequency.
    pub se: f64,
    pub verdict: Verdict,
}

impl PointCheck {
    /// The band uses the larger of the empirical and the analytic standard
    /// error, so a run that happens to hit 0 or 1 exactly is not judged with
    /// a zero-width band.
    fn new(x: u32, empirical: ProbExact, analytic: ProbExact, trials: u64, floor: f64, slack: f64) -> Self {
        let diff: BigRational = empirical.as_ratio() - analytic.as_ratio();
        let gap = diff.abs().to_f64().unwrap_or(f64::INFINITY);
        let se = binomial_se(empirical.to_f64(), trials);
        let band_se = se.max(binomial_se(analytic.to_f64(), trials));
        let verdict = classify((gap - slack).max(0.0), band_se, floor);
        PointCheck { x, empirical, analytic, gap, se, verdict }
    }
}

/// The received rows of one trial, packed as bits for `F_2` with `k <= 64`.
struct Received<'f> {
    field: &'f FieldSpec,
    k: usize,
    binary: bool,
    bits: Vec<u64>,
    elems: Vec<FieldElement>,
}

impl<'f> Received<'f> {
    fn new(field: &'f FieldSpec, k: u32) -> Self {
        Received {
            field,
            k: k as usize,
            binary: field.order() == 2 && k <= 64,
            bits: Vec::new(),
            elems: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.bits.clear();
        self.elems.clear();
    }

    fn push_unit(&mut self, i: usize) {
        if self.binary {
            self.bits.push(1u64 << i);
        } else {
            let start = self.elems.len();
            self.elems.resize(start + self.k, FieldElement::ZERO);
            self.elems[start + i] = FieldElement::ONE;
        }
    }

    /// A row of `k` i.i.d. uniform entries, drawn left to right.
    fn push_random(&mut self, rng: &mut TrialRng) {
        let q = self.field.order();
        if self.binary {
            let mut row = 0u64;
            for j in 0..self.k {
                row |= (rng.below(2) as u64) << j;
            }
            self.bits.push(row);
        } else {
            for _ in 0..self.k {
                let v = rng.below(q);
                self.elems.push(self.field.element(v).expect("sample below q"));
            }
        }
    }

    /// `(rank, recovered packets)`.
    fn decode(&mut self) -> (usize, usize) {
        if self.binary {
            let rank = matrix::rref_bits(&mut self.bits, self.k);
            (rank, matrix::count_unit_bit_rows(&self.bits))
        } else if self.k == 0 {
            (0, 0)
        } else {
            let rows = self.elems.len() / self.k;
            let rank = matrix::rref_in_place(self.field, &mut self.elems, rows, self.k);
            (rank, matrix::count_unit_rows(&self.elems, self.k))
        }
    }
}

#[derive(Clone)]
struct Tally {
    recovered: Vec<u64>,
    ranks: Vec<u64>,
}

impl Tally {
    fn new(k: u32) -> Self {
        Tally { recovered: vec![0; k as usize + 1], ranks: vec![0; k as usize + 1] }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.recovered.iter_mut().zip(other.recovered) {
            *a += b;
        }
        for (a, b) in self.ranks.iter_mut().zip(other.ranks) {
            *a += b;
        }
        self
    }
}

/// Runs `trials` independent trials on the current rayon pool. Each trial
/// fills a reused row buffer from its own stream; counts are merged as
/// integers, so the result does not depend on scheduling.
fn run_trials<F>(field: &FieldSpec, k: u32, trials: u64, key: StreamKey, fill: F) -> Tally
where
    F: Fn(&mut Received<'_>, &mut TrialRng) + Sync,
{
    (0..trials)
        .into_par_iter()
        .map_init(
            || Received::new(field, k),
            |buf, t| {
                buf.clear();
                let mut rng = TrialRng::new(&key, t);
                fill(buf, &mut rng);
                buf.decode()
            },
        )
        .fold(
            || Tally::new(k),
            |mut acc, (rank, rec)| {
                acc.ranks[rank] += 1;
                acc.recovered[rec] += 1;
                acc
            },
        )
        .reduce(|| Tally::new(k), Tally::merge)
}

fn report(scenario: Scenario, trials: u64, seed: u64, tally: Tally) -> TrialReport {
    TrialReport {
        scenario,
        trials,
        seed,
        generator: GENERATOR_ID,
        recovered: tally.recovered,
        ranks: tally.ranks,
    }
}

/// `n` received packets, each a uniformly random combination of the `k` sources.
pub fn simulate_ns(field: &FieldSpec, k: u32, n: u32, trials: u64, seed: u64) -> Result<TrialReport, SimError> {
    let scenario = Scenario::non_systematic(field.order() as u64, k, n);
    scenario.validate()?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let key = StreamKey::new(seed, &[0, field.order(), k, n]);
    let tally = run_trials(field, k, trials, key, |buf, rng| {
        for _ in 0..n {
            buf.push_random(rng);
        }
    });
    Ok(report(scenario, trials, seed, tally))
}

/// `n` packets received out of `n_t` sent, where the first `min(k, n_t)` sent
/// packets are the sources themselves and the rest are random combinations.
/// The received positions are a uniform `n`-subset (partial Fisher-Yates).
pub fn simulate_sys(
    field: &FieldSpec,
    k: u32,
    n_t: u32,
    n: u32,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, SimError> {
    if n > n_t {
        return Err(SimError::ReceivedExceedsTransmitted { n, n_t });
    }
    let scenario = Scenario::systematic(field.order() as u64, k, n_t, n);
    scenario.validate()?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let key = StreamKey::new(seed, &[1, field.order(), k, n_t, n]);
    let tally = run_trials(field, k, trials, key, |buf, rng| {
        let mut positions: Vec<u32> = (0..n_t).collect();
        for i in 0..n as usize {
            let j = i + rng.below(n_t - i as u32) as usize;
            positions.swap(i, j);
        }
        for &p in &positions[..n as usize] {
            if p < k {
                buf.push_unit(p as usize);
            } else {
                buf.push_random(rng);
            }
        }
    });
    Ok(report(scenario, trials, seed, tally))
}

/// `n_t` packets sent, each erased independently with probability `eps`.
///
/// `eps` must have a denominator below `2^64` so the Bernoulli draw is exact.
pub fn simulate_erasure(
    field: &FieldSpec,
    k: u32,
    n_t: u32,
    eps: &Epsilon,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, SimError> {
    let scenario = Scenario::erasure(field.order() as u64, k, mode, n_t, eps.clone());
    scenario.validate()?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let too_fine = || SimError::EpsilonTooFine(eps.to_string());
    let a = eps.numer().to_u64().ok_or_else(too_fine)?;
    let b = eps.denom().to_u64().ok_or_else(too_fine)?;
    let tag = match mode {
        Mode::NonSystematic => 2,
        Mode::Systematic => 3,
    };
    let key = StreamKey::new(seed, &[tag, field.order(), k, n_t, a as u32, b as u32]);
    let tally = run_trials(field, k, trials, key, |buf, rng| {
        for p in 0..n_t {
            if rng.bernoulli(a, b) {
                continue;
            }
            if mode == Mode::Systematic && p < k {
                buf.push_unit(p as usize);
            } else {
                buf.push_random(rng);
            }
        }
    });
    Ok(report(scenario, trials, seed, tally))
}
