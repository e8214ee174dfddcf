//! summary.json construction. Everything here is a pure function of the
//! draws, the aux channel, and the explicitly supplied inputs, so
//! `summarize` reproduces `sample`'s file byte for byte given the same
//! arguments.

use anyhow::Result;
use od_core::analysis::{
    aggregate_bin_proportions, cost_distribution, credible_interval_real, effective_sample_size,
    mean_proportion_cost_over_betas, summarize as summarize_chain,
};
use od_core::sampler::ChainOutput;
use od_core::{gravity_proportions, CostBins, CostMatrix, ProportionMatrix};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
pub struct SummaryFile {
    pub n: usize,
    pub samples: usize,
    pub gamma: f64,
    pub mean: Vec<Vec<f64>>,
    pub intervals: Vec<Vec<[u64; 2]>>,
    pub modal_table: Vec<Vec<u64>>,
    pub modal_share: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportions: Option<ProportionBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tld: Option<TldBlock>,
    pub diagnostics: DiagnosticsBlock,
}

#[derive(Serialize)]
pub struct BetaBlock {
    pub mean: f64,
    pub interval: [f64; 2],
    pub ess: f64,
    /// Posterior mean of the proportion cost sum(c_ij p_ij(beta)).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_proportion_cost: Option<f64>,
}

#[derive(Serialize)]
pub struct ProportionBlock {
    pub mean: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct CostBlock {
    pub mean: f64,
    pub interval: [f64; 2],
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub exceedance: BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct TldBlock {
    pub edges: Vec<f64>,
    pub mean_shares: Vec<f64>,
    pub intervals: Vec<[f64; 2]>,
    /// Reference shares: aggregated structural proportions per bin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportion_shares: Option<Vec<f64>>,
}

#[derive(Serialize)]
pub struct DiagnosticsBlock {
    pub ess: Vec<Vec<f64>>,
    pub split_half: Vec<Vec<f64>>,
    pub min_ess: f64,
}

fn to_rows<T: Copy>(n: usize, flat: &[T]) -> Vec<Vec<T>> {
    (0..n).map(|i| flat[i * n..(i + 1) * n].to_vec()).collect()
}

/// Inputs beyond the chain itself; all optional, all echoed only through
/// derived numbers.
pub struct SummaryInputs<'a> {
    pub costs: Option<&'a CostMatrix>,
    pub bins: Option<&'a CostBins>,
    /// Fixed structural proportions, when the model used them.
    pub reference_p: Option<&'a ProportionMatrix>,
    pub cost_thresholds: &'a [f64],
}

pub fn build_summary(
    out: &ChainOutput,
    gamma: f64,
    inputs: &SummaryInputs<'_>,
) -> Result<SummaryFile> {
    let n = out.n();
    let base = summarize_chain(out, gamma)?;

    let beta = match out.aux.betas() {
        Some(betas) => {
            let mean = betas.iter().sum::<f64>() / betas.len() as f64;
            let interval = credible_interval_real(betas, gamma)?;
            let ess = effective_sample_size(betas)?.value;
            let mean_proportion_cost = inputs
                .costs
                .map(|c| mean_proportion_cost_over_betas(betas, c));
            Some(BetaBlock {
                mean,
                interval: [interval.0, interval.1],
                ess,
                mean_proportion_cost,
            })
        }
        None => None,
    };

    let proportions = out.aux.proportions().map(|props| {
        let mut mean = vec![0.0f64; n * n];
        for p in props {
            for (m, v) in mean.iter_mut().zip(p.values()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= props.len() as f64;
        }
        ProportionBlock {
            mean: to_rows(n, &mean),
        }
    });

    let cost = match inputs.costs {
        Some(costs) => {
            let summary = cost_distribution(out, costs, gamma)?;
            let mut exceedance = BTreeMap::new();
            for &threshold in inputs.cost_thresholds {
                exceedance.insert(format!("{threshold}"), summary.exceedance(threshold));
            }
            Some(CostBlock {
                mean: summary.mean,
                interval: [summary.interval.0, summary.interval.1],
                exceedance,
            })
        }
        None => None,
    };

    let tld = match (inputs.costs, inputs.bins) {
        (Some(costs), Some(bins)) => {
            let summary = od_core::analysis::tld_distribution(out, costs, bins, gamma)?;
            let proportion_shares = reference_bin_shares(out, costs, bins, inputs.reference_p)?;
            Some(TldBlock {
                edges: bins.edges().to_vec(),
                mean_shares: summary.mean_shares,
                intervals: summary.intervals.iter().map(|&(a, b)| [a, b]).collect(),
                proportion_shares,
            })
        }
        _ => None,
    };

    let ess_values: Vec<f64> = base.ess.iter().map(|e| e.value).collect();
    let min_ess = ess_values.iter().copied().fold(f64::INFINITY, f64::min);
    let diagnostics = DiagnosticsBlock {
        ess: to_rows(n, &ess_values),
        split_half: to_rows(n, &base.split_half),
        min_ess,
    };

    Ok(SummaryFile {
        n,
        samples: out.len(),
        gamma,
        mean: to_rows(n, &base.mean),
        intervals: to_rows(
            n,
            &base
                .intervals
                .iter()
                .map(|&(a, b)| [a, b])
                .collect::<Vec<_>>(),
        ),
        modal_table: to_rows(n, base.modal_table.cells()),
        modal_share: base.modal_share,
        beta,
        proportions,
        cost,
        tld,
        diagnostics,
    })
}

/// Reference TLD line: per-bin shares of the structural proportions. Uses
/// the fixed proportions when given, the mean over proportion draws, or the
/// mean of `p_k(beta)` over beta draws when costs are available.
fn reference_bin_shares(
    out: &ChainOutput,
    costs: &CostMatrix,
    bins: &CostBins,
    reference_p: Option<&ProportionMatrix>,
) -> Result<Option<Vec<f64>>> {
    if let Some(p) = reference_p {
        return Ok(Some(aggregate_bin_proportions(p, costs, bins)?));
    }
    if let Some(props) = out.aux.proportions() {
        let mut acc = vec![0.0f64; bins.count()];
        for p in props {
            for (a, v) in acc
                .iter_mut()
                .zip(aggregate_bin_proportions(p, costs, bins)?)
            {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= props.len() as f64;
        }
        return Ok(Some(acc));
    }
    if let Some(betas) = out.aux.betas() {
        let mut acc = vec![0.0f64; bins.count()];
        for &b in betas {
            let p = gravity_proportions(costs, b);
            for (a, v) in acc
                .iter_mut()
                .zip(aggregate_bin_proportions(&p, costs, bins)?)
            {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= betas.len() as f64;
        }
        return Ok(Some(acc));
    }
    Ok(None)
}

/// Freedman-Diaconis histogram of the per-draw regional costs, written as
/// `lower,upper,count` rows.
pub fn cost_histogram(draws: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let g = sorted.len();
    let min = sorted[0];
    let max = sorted[g - 1];
    if min == max {
        return vec![(min, max, g)];
    }
    let q1 = sorted[g / 4];
    let q3 = sorted[(3 * g) / 4];
    let iqr = q3 - q1;
    let width = if iqr > 0.0 {
        2.0 * iqr / (g as f64).cbrt()
    } else {
        (max - min) / 10.0
    };
    let count = (((max - min) / width).ceil() as usize).clamp(1, 10_000);
    let width = (max - min) / count as f64;
    let mut hist = vec![0usize; count];
    for &v in &sorted {
        let k = (((v - min) / width) as usize).min(count - 1);
        hist[k] += 1;
    }
    hist.iter()
        .enumerate()
        .map(|(k, &c)| (min + k as f64 * width, min + (k + 1) as f64 * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_draw_once() {
        let draws: Vec<f64> = (0..1000).map(|i| 8.0 + (i % 97) as f64 / 100.0).collect();
        let hist = cost_histogram(&draws);
        assert!(hist.len() > 1);
        assert_eq!(hist.iter().map(|(_, _, c)| c).sum::<usize>(), 1000);
        for window in hist.windows(2) {
            assert_eq!(window[0].1, window[1].0);
        }
    }

    #[test]
    fn constant_draws_collapse_to_one_bin() {
        let hist = cost_histogram(&[2.5; 40]);
        assert_eq!(hist, vec![(2.5, 2.5, 40)]);
    }
}
