//! Estimators, summaries, oracles, and diagnostics over chain output.

mod cost;
mod diagnostics;
mod exact;
mod summary;
mod tld;

pub use cost::{
    cost_distribution, mean_proportion_cost_over_betas, regional_cost, weighted_cost, CostSummary,
};
pub use diagnostics::{
    diagnostics, effective_sample_size, split_half_discrepancy, Diagnostics, Ess,
};
pub use exact::{enumerate_consistent_tables, exact_2x2_posterior, log_posterior_mass, Exact2x2};
pub use summary::{
    cell_mode, credible_interval, credible_interval_real, event_probability, map_estimate,
    posterior_mean, summarize, PosteriorSummary,
};
pub use tld::{aggregate_bin_proportions, tld_distribution, tld_of, TldSummary};
