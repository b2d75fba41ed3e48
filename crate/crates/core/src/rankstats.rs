//! Rank distribution of a uniformly random `n x k` matrix over `F_q`.

use num::bigint::BigUint;

use crate::prob::ProbExact;
use crate::qcombin::{gaussian_binomial, pow, q_ladder, BigCount};

/// `P(R = r | N = n)` for every `r = 0..=min(n, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPmf {
    pub q: u64,
    pub k: u32,
    pub n: u32,
    probs: Vec<ProbExact>,
}

impl RankPmf {
    pub fn max_rank(&self) -> u32 {
        self.n.min(self.k)
    }

    /// Probability of rank `r`; zero above `min(n, k)`.
    pub fn prob(&self, r: u32) -> ProbExact {
        self.probs
            .get(r as usize)
            .cloned()
            .unwrap_or_else(ProbExact::zero)
    }

    pub fn probs(&self) -> &[ProbExact] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &ProbExact)> {
        self.probs.iter().enumerate().map(|(r, p)| (r as u32, p))
    }
}

/// Number of `n x k` matrices over `F_q` of each rank `r = 0..=min(n, k)`:
/// `[n r]_q * prod_{l<r} (q^k - q^l)`.
pub fn rank_counts(q: u64, k: u32, n: u32) -> Vec<BigCount> {
    (0..=n.min(k))
        .map(|r| gaussian_binomial(n, r as i64, q) * q_ladder(r, k, q))
        .collect()
}

pub fn rank_pmf(q: u64, k: u32, n: u32) -> RankPmf {
    let total: BigUint = pow(q, n as u64 * k as u64);
    let probs = rank_counts(q, k, n)
        .into_iter()
        .map(|c| ProbExact::ratio_of(c, total.clone()))
        .collect();
    RankPmf { q, k, n, probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::One;

    fn prob(n: u64, d: u64) -> ProbExact {
        ProbExact::from_counts(BigUint::from(n), BigUint::from(d)).unwrap()
    }

    /// Rank of a matrix over prime `q` by plain Gaussian elimination mod q.
    fn rank_mod_p(rows: &mut [Vec<u64>], p: u64) -> u32 {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(piv) = (rank..rows.len()).find(|&i| !rows[i][c].is_multiple_of(p)) else {
                continue;
            };
            rows.swap(rank, piv);
            let inv = (1..p).find(|v| v * rows[rank][c] % p == 1).unwrap();
            for i in 0..rows.len() {
                if i != rank && rows[i][c] != 0 {
                    let f = rows[i][c] * inv % p;
                    for j in 0..cols {
                        rows[i][j] = (rows[i][j] + p * p - f * rows[rank][j]) % p;
                    }
                }
            }
            rank += 1;
        }
        rank as u32
    }

    fn enumerate_rank_counts(p: u64, k: u32, n: u32) -> Vec<u64> {
        let cells = k * n;
        let mut counts = vec![0u64; n.min(k) as usize + 1];
        for idx in 0..p.pow(cells) {
            let mut v = idx;
            let mut rows: Vec<Vec<u64>> = (0..n)
                .map(|_| {
                    (0..k)
                        .map(|_| {
                            let d = v % p;
                            v /= p;
                            d
                        })
                        .collect()
                })
                .collect();
            counts[rank_mod_p(&mut rows, p) as usize] += 1;
        }
        counts
    }

    #[test]
    fn small_examples() {
        let pmf = rank_pmf(2, 1, 1);
        assert_eq!(pmf.probs(), &[prob(1, 2), prob(1, 2)]);
        let pmf = rank_pmf(2, 2, 1);
        assert_eq!(pmf.probs(), &[prob(1, 4), prob(3, 4)]);
        let pmf = rank_pmf(5, 3, 0);
        assert_eq!(pmf.probs(), &[ProbExact::one()]);
        assert_eq!(pmf.prob(2), ProbExact::zero());
    }

    #[test]
    fn normalized_exactly() {
        for q in [2, 3, 4, 8] {
            for k in 1..=10 {
                for n in 0..=10 {
                    let total: BigUint = rank_counts(q, k, n).into_iter().sum();
                    assert_eq!(total, pow(q, (n * k) as u64), "q={q} k={k} n={n}");
                    let pmf = rank_pmf(q, k, n);
                    let sum = pmf
                        .probs()
                        .iter()
                        .fold(num::rational::BigRational::from_integer(0.into()), |a, p| a + p.as_ratio());
                    assert!(sum.is_one());
                }
            }
        }
    }

    #[test]
    fn transpose_symmetry() {
        for q in [2, 3, 4, 8] {
            for k in 1..=10 {
                for n in 1..=10 {
                    assert_eq!(rank_pmf(q, k, n).probs(), rank_pmf(q, n, k).probs());
                }
            }
        }
    }

    #[test]
    fn exhaustive_enumeration_matches() {
        for p in [2u64, 3] {
            for k in 1..=3 {
                for n in 0..=3 {
                    let brute: Vec<BigUint> = enumerate_rank_counts(p, k, n)
                        .into_iter()
                        .map(BigUint::from)
                        .collect();
                    assert_eq!(rank_counts(p, k, n), brute, "q={p} k={k} n={n}");
                }
            }
        }
    }
}
