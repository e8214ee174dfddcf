//! Bayesian inference on static origin-destination trip matrices.
//!
//! Given observed origin totals `O_i` and destination totals `D_j`, the trip
//! table `T` is treated as random with a multinomial structural prior over
//! proportions `p_ij` and a likelihood that is the indicator of margin
//! consistency. The posterior restricted to the feasible set `C(O, D)` is
//!
//! ```text
//! Pr(T | O, D)  ~  T! / prod(T_ij!) * prod(p_ij^T_ij),   T in C(O, D).
//! ```
//!
//! The crate provides:
//!
//! - domain types and the margin elimination ([`matrix`], [`cost`],
//!   [`proportion`]);
//! - classical estimators the posterior subsumes: gravity and logit
//!   proportions, deterrence calibration, Furness/IPF balancing, and the
//!   extended Furness update for seed-matrix hierarchies ([`gravity`],
//!   [`furness`]);
//! - Metropolis-within-Gibbs samplers over the free submatrix with
//!   non-central hypergeometric cell conditionals, plus hierarchical chains
//!   for Dirichlet proportions and a random cost deterrence ([`sampler`]);
//! - posterior summaries, exact small-case oracles, and convergence
//!   diagnostics ([`analysis`]).
//!
//! ```
//! use od_core::*;
//! use od_core::analysis::{exact_2x2_posterior, posterior_mean};
//!
//! let margins = MarginData::new(vec![40, 40], vec![60, 20])?;
//! let p = ProportionMatrix::new(2, vec![0.1, 0.2, 0.3, 0.4])?;
//!
//! // Exact posterior of the single free cell of a 2x2 problem.
//! let exact = exact_2x2_posterior(&margins, &p)?;
//! assert!((exact.prob(28) - 0.2003).abs() < 1e-3);
//!
//! // MCMC over the same posterior; identical seeds give identical chains.
//! let cfg = ChainConfig::new(2, 10_000, 42);
//! let out = run_fixed_p_chain(&margins, &p, None, &cfg)?;
//! let mean = posterior_mean(&out);
//! assert!((mean[0] - exact.mean()).abs() < 0.1);
//! # Ok::<(), od_core::Error>(())
//! ```

pub mod analysis;
pub mod cost;
pub mod error;
pub mod furness;
pub mod gravity;
pub mod matrix;
pub mod proportion;
pub mod sampler;

pub use cost::{CostBins, CostMatrix};
pub use error::Error;
pub use furness::{extended_furness, furness_balance, BalancedMatrix, DirichletParams};
pub use gravity::{
    calibrate_beta, entropy, gravity_proportions, log_entropy_weight, log_relative_weight,
    logit_proportions, mean_proportion_cost,
};
pub use matrix::{
    check_consistency, complete_from_submatrix, round_to_feasible, MarginData, TripMatrix,
};
pub use proportion::ProportionMatrix;
pub use sampler::{
    run_beta_tld_chain, run_fixed_p_chain, run_seed_chain, AuxDraws, ChainConfig, ChainOutput,
    ChainRng,
};
