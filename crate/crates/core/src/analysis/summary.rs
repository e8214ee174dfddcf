//! Point estimates, credible intervals, and event probabilities over chain
//! draws.

use super::diagnostics::{diagnostics, Ess};
use crate::error::Error;
use crate::furness::{furness_balance, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::matrix::{round_to_feasible, MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;
use crate::sampler::ChainOutput;
use std::collections::BTreeMap;
use std::collections::HashMap;

/// Cellwise average of the draws; satisfies the margins by linearity.
pub fn posterior_mean(out: &ChainOutput) -> Vec<f64> {
    let n = out.n();
    let g = out.len() as f64;
    let mut mean = vec![0.0f64; n * n];
    for draw in &out.draws {
        for (m, &c) in mean.iter_mut().zip(draw.cells()) {
            *m += c as f64;
        }
    }
    for m in &mut mean {
        *m /= g;
    }
    mean
}

/// Most frequent sampled value of cell `(i, j)`; ties resolve to the
/// smallest value.
pub fn cell_mode(out: &ChainOutput, i: usize, j: usize) -> u64 {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for draw in &out.draws {
        *counts.entry(draw.get(i, j)).or_insert(0) += 1;
    }
    let mut best = (0u64, 0u64);
    for (value, count) in counts {
        if count > best.1 {
            best = (value, count);
        }
    }
    best.0
}

/// The declared MAP candidate: the Furness solution rounded to the nearest
/// feasible integer table.
pub fn map_estimate(m: &MarginData, p: &ProportionMatrix) -> Result<TripMatrix, Error> {
    let balanced = furness_balance(m, p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(round_to_feasible(balanced.cells(), m)?.table)
}

/// Order-statistic ranks (0-based) of the equal-tailed interval: the
/// `ceil(G (1-gamma)/2)`-th and `floor(G (1+gamma)/2)`-th draws, clamped to
/// the observed range.
pub(crate) fn interval_indices(g: usize, gamma: f64) -> Result<(usize, usize), Error> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidValue(format!(
            "credibility level must lie in (0, 1], got {gamma}"
        )));
    }
    // Guard the rank arithmetic against float noise in (1 - gamma).
    let eps = 1e-9;
    let gf = g as f64;
    let lo = ((gf * (1.0 - gamma) / 2.0 - eps).ceil() as usize).max(1);
    let hi = (((gf * (1.0 + gamma) / 2.0 + eps).floor() as usize).min(g)).max(lo);
    Ok((lo - 1, hi - 1))
}

/// Equal-tailed credible interval for cell `(i, j)` from the empirical draw
/// distribution.
pub fn credible_interval(
    out: &ChainOutput,
    i: usize,
    j: usize,
    gamma: f64,
) -> Result<(u64, u64), Error> {
    let (lo, hi) = interval_indices(out.len(), gamma)?;
    let mut values: Vec<u64> = out.draws.iter().map(|d| d.get(i, j)).collect();
    values.sort_unstable();
    Ok((values[lo], values[hi]))
}

/// Equal-tailed interval over a real-valued per-draw series.
pub fn credible_interval_real(values: &[f64], gamma: f64) -> Result<(f64, f64), Error> {
    if values.is_empty() {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let (lo, hi) = interval_indices(values.len(), gamma)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((sorted[lo], sorted[hi]))
}

/// Indicator average of a predicate over the draws.
pub fn event_probability<F: FnMut(&TripMatrix) -> bool>(out: &ChainOutput, mut event: F) -> f64 {
    if out.is_empty() {
        return 0.0;
    }
    out.draws.iter().filter(|d| event(d)).count() as f64 / out.len() as f64
}

/// Chain summary: cell means and intervals, the most frequent sampled table,
/// per-cell diagnostics, and named event probabilities.
#[derive(Clone, Debug)]
pub struct PosteriorSummary {
    pub n: usize,
    pub gamma: f64,
    /// Row-major posterior means.
    pub mean: Vec<f64>,
    /// Row-major equal-tailed intervals.
    pub intervals: Vec<(u64, u64)>,
    /// Most frequent sampled table (ties resolve to the earliest drawn).
    pub modal_table: TripMatrix,
    /// Share of draws equal to `modal_table`.
    pub modal_share: f64,
    /// Row-major per-cell effective sample sizes.
    pub ess: Vec<Ess>,
    /// Row-major split-half mean discrepancies, in combined standard errors.
    pub split_half: Vec<f64>,
    /// Named indicator averages, filled by [`PosteriorSummary::record_event`].
    pub events: BTreeMap<String, f64>,
}

/// Builds the summary at credibility level `gamma`. Needs at least eight
/// draws for the split-half diagnostic.
pub fn summarize(out: &ChainOutput, gamma: f64) -> Result<PosteriorSummary, Error> {
    let n = out.n();
    let diag = diagnostics(out)?;
    let mean = posterior_mean(out);
    let mut intervals = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            intervals.push(credible_interval(out, i, j, gamma)?);
        }
    }
    let mut counts: HashMap<&TripMatrix, u64> = HashMap::new();
    for draw in &out.draws {
        *counts.entry(draw).or_insert(0) += 1;
    }
    let top = out
        .draws
        .iter()
        .max_by_key(|d| counts[*d])
        .expect("at least one draw");
    Ok(PosteriorSummary {
        n,
        gamma,
        mean,
        intervals,
        modal_table: top.clone(),
        modal_share: counts[top] as f64 / out.len() as f64,
        ess: diag.ess,
        split_half: diag.split_half,
        events: BTreeMap::new(),
    })
}

impl PosteriorSummary {
    /// Records a named indicator average over the chain's draws.
    pub fn record_event<F: FnMut(&TripMatrix) -> bool>(
        &mut self,
        name: &str,
        out: &ChainOutput,
        event: F,
    ) {
        self.events
            .insert(name.to_string(), event_probability(out, event));
    }
}
