//! Chain drivers: burn-in, thinning, and recording for the three models.

use super::gibbs::{
    cost_odds_combination, initial_table, ln_odds_from_proportions, sweep_with_odds,
};
use super::hierarchical::{beta_step, dirichlet_step, phi_log};
use super::{AcceptanceStats, AuxDraws, ChainConfig, ChainOutput, ChainRng};
use crate::cost::{CostBins, CostMatrix};
use crate::error::Error;
use crate::furness::DirichletParams;
use crate::gravity::gravity_proportions;
use crate::matrix::{check_consistency, MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;
use rand::SeedableRng;

fn resolve_init(
    m: &MarginData,
    p: &ProportionMatrix,
    init: Option<TripMatrix>,
) -> Result<TripMatrix, Error> {
    match init {
        Some(t) => {
            if check_consistency(&t, m)? {
                Ok(t)
            } else {
                Err(Error::Infeasible(
                    "initial table does not satisfy the margins".into(),
                ))
            }
        }
        None => initial_table(m, p),
    }
}

/// Samples the posterior under fixed structural proportions. The default
/// initial table is the rounded-and-repaired Furness solution.
pub fn run_fixed_p_chain(
    m: &MarginData,
    p: &ProportionMatrix,
    init: Option<TripMatrix>,
    cfg: &ChainConfig,
) -> Result<ChainOutput, Error> {
    cfg.validate()?;
    if m.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "margins have {} zones, proportions {}",
            m.n(),
            p.n()
        )));
    }
    let odds = ln_odds_from_proportions(p)?;
    let mut t = resolve_init(m, p, init)?;
    let mut rng = ChainRng::seed_from_u64(cfg.rng_seed);
    let mut acceptance = AcceptanceStats::default();

    for _ in 0..cfg.burn_in {
        sweep_with_odds(&mut t, &odds, 1.0, &mut rng);
    }
    let mut draws = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            let s = sweep_with_odds(&mut t, &odds, 1.0, &mut rng);
            acceptance.cell_proposals += s.proposals;
            acceptance.cell_accepts += s.accepts;
        }
        debug_assert_eq!(check_consistency(&t, m), Ok(true));
        draws.push(t.clone());
    }
    Ok(ChainOutput {
        config: *cfg,
        margins: m.clone(),
        draws,
        aux: AuxDraws::None,
        acceptance,
    })
}

/// Samples the hierarchical posterior with Dirichlet-distributed
/// proportions, optionally informed by a seed matrix: alternates a Gibbs
/// sweep of the table at the current proportions with an exact conjugate
/// Dirichlet draw. Records `(T, p)` pairs.
pub fn run_seed_chain(
    m: &MarginData,
    seed: Option<&TripMatrix>,
    pi: &DirichletParams,
    cfg: &ChainConfig,
) -> Result<ChainOutput, Error> {
    cfg.validate()?;
    let n = m.n();
    if pi.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} Dirichlet parameters, got {}",
            n * n,
            pi.len()
        )));
    }
    if let Some(s) = seed {
        if s.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "seed has {} zones, margins {}",
                s.n(),
                n
            )));
        }
    }
    // Start the proportions at the prior-plus-seed mean and the table at the
    // matching Furness round.
    let weights: Vec<f64> = (0..n * n)
        .map(|idx| pi.values()[idx] + seed.map_or(0.0, |s| s.cells()[idx] as f64))
        .collect();
    let mut p = ProportionMatrix::from_weights(n, &weights)?;
    let mut t = initial_table(m, &p)?;
    let mut rng = ChainRng::seed_from_u64(cfg.rng_seed);
    let mut acceptance = AcceptanceStats::default();

    let step = |t: &mut TripMatrix,
                p: &mut ProportionMatrix,
                acc: Option<&mut AcceptanceStats>,
                rng: &mut ChainRng|
     -> Result<(), Error> {
        let odds = ln_odds_from_proportions(p)?;
        let s = sweep_with_odds(t, &odds, 1.0, rng);
        if let Some(acc) = acc {
            acc.cell_proposals += s.proposals;
            acc.cell_accepts += s.accepts;
            // The Dirichlet draw is exact, not a proposal.
            acc.aux_proposals += 1;
            acc.aux_accepts += 1;
        }
        *p = dirichlet_step(t, seed, pi, rng)?;
        Ok(())
    };

    for _ in 0..cfg.burn_in {
        step(&mut t, &mut p, None, &mut rng)?;
    }
    let mut draws = Vec::with_capacity(cfg.samples);
    let mut proportions = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            step(&mut t, &mut p, Some(&mut acceptance), &mut rng)?;
        }
        debug_assert_eq!(check_consistency(&t, m), Ok(true));
        draws.push(t.clone());
        proportions.push(p.clone());
    }
    Ok(ChainOutput {
        config: *cfg,
        margins: m.clone(),
        draws,
        aux: AuxDraws::Proportions(proportions),
        acceptance,
    })
}

/// Samples the hierarchical posterior with gravity proportions and a random
/// deterrence: alternates a Gibbs sweep of the table at `p(beta)` with a
/// random-walk Metropolis step on `beta` against the (optional) binned
/// trip-length counts. Records `(T, beta)` pairs. The chain starts at
/// `beta = 0` and the rounded Furness table for `p(0)`.
pub fn run_beta_tld_chain(
    m: &MarginData,
    costs: &CostMatrix,
    bins: &CostBins,
    tld: Option<&[u64]>,
    pi: &DirichletParams,
    cfg: &ChainConfig,
) -> Result<ChainOutput, Error> {
    cfg.validate()?;
    if m.n() != costs.n() {
        return Err(Error::DimensionMismatch(format!(
            "margins have {} zones, costs {}",
            m.n(),
            costs.n()
        )));
    }
    let mut beta = 0.0f64;
    // Validates bins, pi length, and TLD length up front.
    let mut t = initial_table(m, &gravity_proportions(costs, beta))?;
    phi_log(beta, &t, tld, pi, costs, bins)?;

    let combo = cost_odds_combination(costs);
    let mut rng = ChainRng::seed_from_u64(cfg.rng_seed);
    let mut acceptance = AcceptanceStats::default();

    let step = |t: &mut TripMatrix,
                beta: &mut f64,
                acc: Option<&mut AcceptanceStats>,
                rng: &mut ChainRng|
     -> Result<(), Error> {
        let s = sweep_with_odds(t, &combo, -*beta, rng);
        let next = beta_step(*beta, t, tld, pi, costs, bins, cfg.sigma2, rng)?;
        if let Some(acc) = acc {
            acc.cell_proposals += s.proposals;
            acc.cell_accepts += s.accepts;
            acc.aux_proposals += 1;
            if next != *beta {
                acc.aux_accepts += 1;
            }
        }
        *beta = next;
        Ok(())
    };

    for _ in 0..cfg.burn_in {
        step(&mut t, &mut beta, None, &mut rng)?;
    }
    let mut draws = Vec::with_capacity(cfg.samples);
    let mut betas = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            step(&mut t, &mut beta, Some(&mut acceptance), &mut rng)?;
        }
        debug_assert_eq!(check_consistency(&t, m), Ok(true));
        draws.push(t.clone());
        betas.push(beta);
    }
    Ok(ChainOutput {
        config: *cfg,
        margins: m.clone(),
        draws,
        aux: AuxDraws::Betas(betas),
        acceptance,
    })
}
