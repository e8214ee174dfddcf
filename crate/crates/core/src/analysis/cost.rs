//! Regional cost of trip configurations and its posterior distribution.

use super::summary::credible_interval_real;
use crate::cost::CostMatrix;
use crate::error::Error;
use crate::matrix::TripMatrix;
use crate::sampler::ChainOutput;

/// Trip-weighted mean cost `sum c_ij T_ij / T` of one configuration.
pub fn regional_cost(t: &TripMatrix, costs: &CostMatrix) -> Result<f64, Error> {
    if t.n() != costs.n() {
        return Err(Error::DimensionMismatch(format!(
            "table has {} zones, costs {}",
            t.n(),
            costs.n()
        )));
    }
    let total = t.total();
    if total == 0 {
        return Err(Error::InvalidValue(
            "regional cost undefined for an empty table".into(),
        ));
    }
    Ok(weighted_cost(t.cells().iter().map(|&c| c as f64), costs) / total as f64)
}

/// `sum c_ij w_ij` for real-valued weights (expected-trip matrices, means).
pub fn weighted_cost<I: IntoIterator<Item = f64>>(weights: I, costs: &CostMatrix) -> f64 {
    weights
        .into_iter()
        .zip(costs.values())
        .map(|(w, c)| w * c)
        .sum()
}

/// Posterior distribution of the regional cost over a chain's draws.
#[derive(Clone, Debug)]
pub struct CostSummary {
    /// Mean of the per-draw costs; equals the cost of the posterior mean
    /// matrix by linearity.
    pub mean: f64,
    /// Equal-tailed credible interval at the requested level.
    pub interval: (f64, f64),
    draws: Vec<f64>,
}

impl CostSummary {
    /// Per-draw regional costs, in draw order.
    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    /// `P(c(T) >= threshold)` as an indicator average.
    pub fn exceedance(&self, threshold: f64) -> f64 {
        self.draws.iter().filter(|c| **c >= threshold).count() as f64 / self.draws.len() as f64
    }
}

/// Posterior mean of the proportion cost `C_p(beta) = sum c_ij p_ij(beta)`
/// over deterrence draws.
pub fn mean_proportion_cost_over_betas(betas: &[f64], costs: &CostMatrix) -> f64 {
    let total: f64 = betas
        .iter()
        .map(|&b| {
            crate::gravity::mean_proportion_cost(
                &crate::gravity::gravity_proportions(costs, b),
                costs,
            )
        })
        .sum();
    total / betas.len() as f64
}

pub fn cost_distribution(
    out: &ChainOutput,
    costs: &CostMatrix,
    gamma: f64,
) -> Result<CostSummary, Error> {
    let draws: Vec<f64> = out
        .draws
        .iter()
        .map(|t| regional_cost(t, costs))
        .collect::<Result<_, _>>()?;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let interval = credible_interval_real(&draws, gamma)?;
    Ok(CostSummary {
        mean,
        interval,
        draws,
    })
}
