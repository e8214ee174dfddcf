//! Trip length distributions: binned trip shares per draw and their
//! posterior summaries.

use super::summary::credible_interval_real;
use crate::cost::{CostBins, CostMatrix};
use crate::error::Error;
use crate::matrix::TripMatrix;
use crate::proportion::ProportionMatrix;
use crate::sampler::ChainOutput;

/// Binned trip counts `T_k = sum T_ij I{c_ij in (c_{k-1}, c_k]}`. Every
/// cell's cost must fall in some bin.
pub fn tld_of(t: &TripMatrix, costs: &CostMatrix, bins: &CostBins) -> Result<Vec<u64>, Error> {
    if t.n() != costs.n() {
        return Err(Error::DimensionMismatch(format!(
            "table has {} zones, costs {}",
            t.n(),
            costs.n()
        )));
    }
    let index = bins.bin_all(costs)?;
    let mut counts = vec![0u64; bins.count()];
    for (&cell, &k) in t.cells().iter().zip(&index) {
        counts[k] += cell;
    }
    Ok(counts)
}

/// Per-bin sums of structural proportions `p_k`.
pub fn aggregate_bin_proportions(
    p: &ProportionMatrix,
    costs: &CostMatrix,
    bins: &CostBins,
) -> Result<Vec<f64>, Error> {
    if p.n() != costs.n() {
        return Err(Error::DimensionMismatch(format!(
            "proportions have {} zones, costs {}",
            p.n(),
            costs.n()
        )));
    }
    let index = bins.bin_all(costs)?;
    let mut shares = vec![0.0f64; bins.count()];
    for (&prop, &k) in p.values().iter().zip(&index) {
        shares[k] += prop;
    }
    Ok(shares)
}

/// Posterior trip length distribution: per-bin mean shares and credible
/// intervals, with an optional reference line (for example the aggregated
/// structural proportions `p_k`).
#[derive(Clone, Debug)]
pub struct TldSummary {
    /// Posterior mean of `T_k / T` per bin; sums to one.
    pub mean_shares: Vec<f64>,
    /// Equal-tailed interval of the share per bin.
    pub intervals: Vec<(f64, f64)>,
    /// Optional per-bin reference proportions.
    pub reference: Option<Vec<f64>>,
}

pub fn tld_distribution(
    out: &ChainOutput,
    costs: &CostMatrix,
    bins: &CostBins,
    gamma: f64,
) -> Result<TldSummary, Error> {
    let k = bins.count();
    let g = out.len();
    let total = out.margins.total();
    if total == 0 {
        return Err(Error::InvalidValue(
            "trip shares undefined for zero total trips".into(),
        ));
    }
    let mut shares = vec![Vec::with_capacity(g); k];
    for draw in &out.draws {
        let counts = tld_of(draw, costs, bins)?;
        for (bin, &c) in counts.iter().enumerate() {
            shares[bin].push(c as f64 / total as f64);
        }
    }
    let mut mean_shares = Vec::with_capacity(k);
    let mut intervals = Vec::with_capacity(k);
    for bin in &shares {
        mean_shares.push(bin.iter().sum::<f64>() / g as f64);
        intervals.push(credible_interval_real(bin, gamma)?);
    }
    Ok(TldSummary {
        mean_shares,
        intervals,
        reference: None,
    })
}
