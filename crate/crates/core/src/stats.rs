//! Summary statistics and the Mann-Whitney U test.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U` of the first sample: its rank sum minus `n_a(n_a+1)/2`.
    pub u: f64,
    pub p_two_sided: f64,
    pub exact: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; zero for fewer than two values.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    libm::sqrt(var / xs.len() as f64)
}

/// Midranks (1-based) of the pooled sample plus the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Number of ways to reach each `U` value when `m` of `m + n` distinct ranks
/// go to the first sample; index is `U`.
pub fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // counts[i][j][u] built row by row over i (first sample size)
    let max_u = m * n;
    let mut prev: Vec<Vec<f64>> = (0..=n).map(|_| vec![1.0]).collect();
    for i in 1..=m {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        cur.push(vec![1.0]);
        for j in 1..=n {
            // the largest rank belongs to the first sample (adds j to U) or the second
            let mut row = vec![0.0; i * j + 1];
            for (u, c) in prev[j].iter().enumerate() {
                row[u + j] += c;
            }
            for (u, c) in cur[j - 1].iter().enumerate() {
                row[u] += c;
            }
            cur.push(row);
        }
        prev = cur;
    }
    let mut dist = prev.swap_remove(n);
    dist.resize(max_u + 1, 0.0);
    dist
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..na].iter().sum();
    let u = rank_sum - (na * (na + 1)) as f64 / 2.0;
    let has_ties = ties.iter().any(|&t| t > 1);

    if na + nb <= EXACT_LIMIT && !has_ties {
        let dist = u_distribution(na, nb);
        let total: f64 = dist.iter().sum();
        let k = libm::round(u) as usize;
        let lower: f64 = dist[..=k].iter().sum();
        let upper: f64 = dist[k..].iter().sum();
        let p = (2.0 * lower.min(upper) / total).min(1.0);
        return Ok(MannWhitney { u, p_two_sided: p, exact: true });
    }

    let (naf, nbf) = (na as f64, nb as f64);
    let n = naf + nbf;
    let mu = naf * nbf / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = naf * nbf / 12.0 * ((n + 1.0) - tie_term);
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p_two_sided: 1.0, exact: false });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / libm::sqrt(var);
    let p = libm::erfc(z / core::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, p_two_sided: p, exact: false })
}
