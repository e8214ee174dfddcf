//! Exact small-problem oracles: the closed-form 2x2 posterior and
//! brute-force enumeration of the feasible set.

use crate::error::Error;
use crate::gravity::log_entropy_weight;
use crate::matrix::{complete_from_submatrix, MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;
use crate::sampler::{nchg_log_pmf_unnormalized, NchgParams};
use std::ops::RangeInclusive;

/// Exact normalized posterior of the single free cell of a 2x2 problem.
#[derive(Clone, Debug)]
pub struct Exact2x2 {
    support_min: u64,
    probabilities: Vec<f64>,
}

impl Exact2x2 {
    pub fn support(&self) -> RangeInclusive<u64> {
        self.support_min..=(self.support_min + self.probabilities.len() as u64 - 1)
    }

    /// `P(T_11 = x)`; zero outside the support.
    pub fn prob(&self, x: u64) -> f64 {
        if x < self.support_min {
            return 0.0;
        }
        self.probabilities
            .get((x - self.support_min) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Support values paired with their probabilities.
    pub fn table(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (self.support_min + i as u64, *p))
    }

    pub fn mean(&self) -> f64 {
        self.table().map(|(x, p)| x as f64 * p).sum()
    }

    /// Most probable value; ties resolve to the smallest.
    pub fn mode(&self) -> u64 {
        let mut best = (self.support_min, f64::NEG_INFINITY);
        for (x, p) in self.table() {
            if p > best.1 {
                best = (x, p);
            }
        }
        best.0
    }
}

/// Normalizes the non-central hypergeometric mass over the feasible range of
/// `T_11` by direct log-space summation. The testing oracle for every 2x2
/// MCMC quantity.
pub fn exact_2x2_posterior(m: &MarginData, p: &ProportionMatrix) -> Result<Exact2x2, Error> {
    if m.n() != 2 || p.n() != 2 {
        return Err(Error::DimensionMismatch(
            "exact posterior requires exactly two zones".into(),
        ));
    }
    let (p12, p21) = (p.get(0, 1), p.get(1, 0));
    if p12 == 0.0 || p21 == 0.0 {
        return Err(Error::InvalidValue(
            "odds ratio undefined: an off-diagonal proportion is zero".into(),
        ));
    }
    let psi = p.get(0, 0) * p.get(1, 1) / (p12 * p21);
    let params = NchgParams::new(m.origin(0), m.destination(0), m.delta(), psi)?;
    let lo = params.support_min();
    let hi = params.support_max();
    let logs: Vec<f64> = (lo..=hi)
        .map(|x| nchg_log_pmf_unnormalized(x, &params))
        .collect::<Result<_, _>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(Exact2x2 {
        support_min: lo,
        probabilities: weights.iter().map(|w| w / z).collect(),
    })
}

/// Log unnormalized posterior mass of a consistent table:
/// `log T! - sum log T_ij! + sum T_ij log p_ij`.
pub fn log_posterior_mass(t: &TripMatrix, p: &ProportionMatrix) -> f64 {
    let mut structural = 0.0;
    for (&count, &prop) in t.cells().iter().zip(p.values()) {
        if count == 0 {
            continue;
        }
        if prop == 0.0 {
            return f64::NEG_INFINITY;
        }
        structural += count as f64 * prop.ln();
    }
    log_entropy_weight(t) + structural
}

/// Enumerates every table in `C(O, D)` by recursive assignment of the free
/// submatrix with budget pruning, completing each leaf through the margin
/// elimination. Fails once more than `cap` tables exist.
pub fn enumerate_consistent_tables(m: &MarginData, cap: usize) -> Result<Vec<TripMatrix>, Error> {
    let n = m.n();
    let k = n - 1;
    let mut tables = Vec::new();
    let mut free = vec![0u64; k * k];
    let mut row_used = vec![0u64; k];
    let mut col_used = vec![0u64; k];

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        idx: usize,
        k: usize,
        m: &MarginData,
        free: &mut [u64],
        row_used: &mut [u64],
        col_used: &mut [u64],
        tables: &mut Vec<TripMatrix>,
        cap: usize,
    ) -> Result<(), Error> {
        if idx == k * k {
            if let Ok(t) = complete_from_submatrix(free, m) {
                if tables.len() == cap {
                    return Err(Error::CapExceeded { cap });
                }
                tables.push(t);
            }
            return Ok(());
        }
        let (i, j) = (idx / k, idx % k);
        let hi = (m.origin(i) - row_used[i]).min(m.destination(j) - col_used[j]);
        for v in 0..=hi {
            free[idx] = v;
            row_used[i] += v;
            col_used[j] += v;
            let r = recurse(idx + 1, k, m, free, row_used, col_used, tables, cap);
            row_used[i] -= v;
            col_used[j] -= v;
            free[idx] = 0;
            r?;
        }
        Ok(())
    }

    recurse(
        0,
        k,
        m,
        &mut free,
        &mut row_used,
        &mut col_used,
        &mut tables,
        cap,
    )?;
    Ok(tables)
}
