//! MCMC samplers for the margin-constrained posterior on trip matrices.
//!
//! Three chains share the same Metropolis-within-Gibbs core over the free
//! submatrix cells:
//!
//! - [`run_fixed_p_chain`]: known structural proportions;
//! - [`run_seed_chain`]: Dirichlet-distributed proportions, optionally
//!   informed by a seed matrix, updated by exact conjugate draws;
//! - [`run_beta_tld_chain`]: gravity proportions with a random deterrence
//!   sampled against binned trip-length counts.
//!
//! Chains are deterministic given their [`ChainConfig`]: each owns one
//! [`ChainRng`] stream seeded from `rng_seed`, and every draw site consumes
//! the stream in a fixed order. The one-step moves act on squares through
//! the eliminated last row and column; for very tight margins (all totals
//! near zero) such moves may not connect the whole feasible set, which is a
//! property of the scheme itself rather than of this implementation.

mod gibbs;
mod hierarchical;
mod nchg;
mod run;

pub use gibbs::{gibbs_sweep, initial_table, SweepStats};
pub use hierarchical::{beta_step, dirichlet_step, phi_log};
pub use nchg::{metropolis_step, nchg_log_pmf_unnormalized, NchgParams};
pub use run::{run_beta_tld_chain, run_fixed_p_chain, run_seed_chain};

use crate::error::Error;
use crate::matrix::{MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;

/// The seedable generator every chain owns; named so runs are reproducible
/// across platforms and releases.
pub type ChainRng = rand_chacha::ChaCha12Rng;

/// Chain length, thinning, seeding, and the deterrence proposal variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    /// Sweeps discarded before recording.
    pub burn_in: usize,
    /// Post-burn-in draws to record.
    pub samples: usize,
    /// Sweeps per recorded draw.
    pub thin: usize,
    /// Seed for the chain's private RNG stream.
    pub rng_seed: u64,
    /// Variance of the normal proposal for the deterrence parameter.
    pub sigma2: f64,
}

impl ChainConfig {
    /// Defaults for an `n`-zone problem: burn-in of `10 n^2` sweeps, no
    /// thinning, `sigma2 = 1e-4`.
    pub fn new(n: usize, samples: usize, rng_seed: u64) -> Self {
        Self {
            burn_in: 10 * n * n,
            samples,
            thin: 1,
            rng_seed,
            sigma2: 1e-4,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), Error> {
        if self.samples == 0 {
            return Err(Error::InvalidValue("samples must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidValue("thin must be at least 1".into()));
        }
        if !self.sigma2.is_finite() || self.sigma2 <= 0.0 {
            return Err(Error::InvalidValue(format!(
                "sigma2 must be positive and finite, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

/// Auxiliary per-draw values recorded alongside the trip matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum AuxDraws {
    /// Fixed-proportion chains record nothing extra.
    None,
    /// One proportion matrix per draw (seed/Dirichlet chains).
    Proportions(Vec<ProportionMatrix>),
    /// One deterrence value per draw (beta-TLD chains).
    Betas(Vec<f64>),
}

impl AuxDraws {
    pub fn betas(&self) -> Option<&[f64]> {
        match self {
            AuxDraws::Betas(b) => Some(b),
            _ => None,
        }
    }

    pub fn proportions(&self) -> Option<&[ProportionMatrix]> {
        match self {
            AuxDraws::Proportions(p) => Some(p),
            _ => None,
        }
    }
}

/// Proposal and acceptance counts per proposal block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub cell_proposals: u64,
    pub cell_accepts: u64,
    pub aux_proposals: u64,
    pub aux_accepts: u64,
}

impl AcceptanceStats {
    /// Acceptance rate of the per-cell Metropolis block.
    pub fn cell_rate(&self) -> f64 {
        if self.cell_proposals == 0 {
            0.0
        } else {
            self.cell_accepts as f64 / self.cell_proposals as f64
        }
    }

    /// Acceptance rate of the auxiliary block, when one ran.
    pub fn aux_rate(&self) -> Option<f64> {
        if self.aux_proposals == 0 {
            None
        } else {
            Some(self.aux_accepts as f64 / self.aux_proposals as f64)
        }
    }
}

/// Ordered post-burn-in draws with their auxiliary channel, the margins they
/// all satisfy, the config that produced them, and acceptance statistics.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub config: ChainConfig,
    pub margins: MarginData,
    pub draws: Vec<TripMatrix>,
    pub aux: AuxDraws,
    pub acceptance: AcceptanceStats,
}

impl ChainOutput {
    pub fn n(&self) -> usize {
        self.margins.n()
    }

    /// Number of recorded draws `G`.
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}
