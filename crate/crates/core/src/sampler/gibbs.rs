//! Metropolis-within-Gibbs sweep over the free `(n-1) x (n-1)` submatrix.
//!
//! Updating free cell `(i, j)` moves exactly four entries: the cell itself
//! and its companions `T_in`, `T_nj`, `T_nn` in the eliminated last row and
//! column. The effective 2x2 budgets are read off the current state:
//! `O_ij = T_ij + T_in`, `D_ij = T_ij + T_nj`, `Delta_ij = T_ij - T_nn`,
//! so margin consistency is an exact integer invariant of the sweep.

use super::nchg::{ln_ratio_down, ln_ratio_up};
use crate::error::Error;
use crate::furness::{furness_balance, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::matrix::{round_to_feasible, MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;
use rand::Rng;

/// Proposal and acceptance counts for one or more sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub proposals: u64,
    pub accepts: u64,
}

impl SweepStats {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepts as f64 / self.proposals as f64
        }
    }
}

/// Log odds ratios `ln psi_ij = ln(p_ij p_nn) - ln(p_in p_nj)` for the free
/// cells, flattened row-major over the `(n-1) x (n-1)` block.
#[derive(Clone, Debug)]
pub(crate) struct LnOdds {
    pub k: usize,
    pub values: Vec<f64>,
}

/// Derives the odds ratios from structural proportions. Zero numerator
/// proportions yield `ln psi = -inf` (the cell is forced down); a zero in
/// any denominator position (last row, last column, or corner) makes the
/// conditional undefined and is rejected.
pub(crate) fn ln_odds_from_proportions(p: &ProportionMatrix) -> Result<LnOdds, Error> {
    let n = p.n();
    let k = n - 1;
    if p.get(k, k) == 0.0 {
        return Err(Error::InvalidValue(
            "corner proportion p_nn is zero; odds ratios undefined".into(),
        ));
    }
    for i in 0..k {
        if p.get(i, k) == 0.0 {
            return Err(Error::InvalidValue(format!(
                "proportion p_({i},n) in the last column is zero; odds ratios undefined"
            )));
        }
    }
    for j in 0..k {
        if p.get(k, j) == 0.0 {
            return Err(Error::InvalidValue(format!(
                "proportion p_(n,{j}) in the last row is zero; odds ratios undefined"
            )));
        }
    }
    let ln_corner = p.get(k, k).ln();
    let mut values = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let numerator = p.get(i, j);
            let v = if numerator == 0.0 {
                f64::NEG_INFINITY
            } else {
                numerator.ln() + ln_corner - p.get(i, k).ln() - p.get(k, j).ln()
            };
            values.push(v);
        }
    }
    Ok(LnOdds { k, values })
}

/// Odds ratios under gravity proportions at deterrence `beta`: the
/// normalizer cancels, leaving `ln psi_ij = -beta (c_ij + c_nn - c_in - c_nj)`.
pub(crate) fn cost_odds_combination(costs: &crate::cost::CostMatrix) -> LnOdds {
    let n = costs.n();
    let k = n - 1;
    let mut values = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            values.push(costs.get(i, j) + costs.get(k, k) - costs.get(i, k) - costs.get(k, j));
        }
    }
    LnOdds { k, values }
}

/// One sweep with precomputed log odds; the fast path used by the chain
/// drivers. `scale` multiplies the stored combination (used to fold `-beta`
/// into cost combinations); pass 1.0 for plain log odds.
pub(crate) fn sweep_with_odds<R: Rng + ?Sized>(
    t: &mut TripMatrix,
    odds: &LnOdds,
    scale: f64,
    rng: &mut R,
) -> SweepStats {
    let n = t.n();
    let k = odds.k;
    debug_assert_eq!(k, n - 1);
    let mut stats = SweepStats::default();
    for i in 0..k {
        for j in 0..k {
            stats.proposals += 1;
            let x = t.get(i, j);
            let companion_row = t.get(i, k);
            let companion_col = t.get(k, j);
            let corner = t.get(k, k);
            let o = x + companion_row;
            let d = x + companion_col;
            let delta = x as i64 - corner as i64;
            let lo = delta.max(0) as u64;
            let hi = o.min(d);

            let down = rng.random::<f64>() < 0.5;
            if down {
                if x == 0 || x - 1 < lo {
                    continue;
                }
            } else if x + 1 > hi {
                continue;
            }
            let ln_psi = scale * odds.values[i * k + j];
            let ln_r = if down {
                ln_ratio_down(x, o, d, delta, ln_psi)
            } else {
                ln_ratio_up(x, o, d, delta, ln_psi)
            };
            let u: f64 = rng.random();
            if u.ln() < ln_r {
                let new = if down { x - 1 } else { x + 1 };
                t.set(i, j, new);
                t.set(i, k, o - new);
                t.set(k, j, d - new);
                t.set(k, k, (new as i64 - delta) as u64);
                stats.accepts += 1;
            }
        }
    }
    stats
}

/// One Metropolis-within-Gibbs sweep: visits the free cells in row-major
/// order, performing one random-walk Metropolis step on each conditional.
/// The table's margins are preserved exactly.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    t: &mut TripMatrix,
    p: &ProportionMatrix,
    rng: &mut R,
) -> Result<SweepStats, Error> {
    if t.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "table has {} zones, proportions {}",
            t.n(),
            p.n()
        )));
    }
    let odds = ln_odds_from_proportions(p)?;
    Ok(sweep_with_odds(t, &odds, 1.0, rng))
}

/// Default chain start: the Furness solution rounded cell-wise and repaired
/// to the margins, so the chain begins near the posterior mode.
pub fn initial_table(m: &MarginData, p: &ProportionMatrix) -> Result<TripMatrix, Error> {
    let balanced = furness_balance(m, p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(round_to_feasible(balanced.cells(), m)?.table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::check_consistency;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sweep_preserves_margins_exactly() {
        let m = MarginData::new(vec![400, 460, 400, 702], vec![260, 400, 500, 802]).unwrap();
        let p = ProportionMatrix::uniform(4);
        let mut t = initial_table(&m, &p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..500 {
            gibbs_sweep(&mut t, &p, &mut rng).unwrap();
            assert_eq!(check_consistency(&t, &m), Ok(true));
        }
    }

    #[test]
    fn two_zone_sweep_reduces_to_single_cell_step() {
        // With n = 2 the sweep is one Metropolis step on T_11 with the full
        // margin budgets.
        let m = MarginData::new(vec![40, 40], vec![60, 20]).unwrap();
        let p = ProportionMatrix::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut t = initial_table(&m, &p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let before = t.get(0, 0);
            gibbs_sweep(&mut t, &p, &mut rng).unwrap();
            let after = t.get(0, 0);
            assert!(after.abs_diff(before) <= 1);
            assert!((20..=40).contains(&after));
            assert_eq!(check_consistency(&t, &m), Ok(true));
        }
    }

    #[test]
    fn zero_denominator_proportion_is_rejected() {
        let p = ProportionMatrix::from_weights(2, &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(ln_odds_from_proportions(&p).is_err());
        let ok = ProportionMatrix::from_weights(2, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(ln_odds_from_proportions(&ok).is_ok());
    }

    #[test]
    fn initial_table_sits_on_the_margins() {
        let m = MarginData::new(vec![400, 460, 400, 702], vec![260, 400, 500, 802]).unwrap();
        let costs = crate::cost::CostMatrix::from_rows(&[
            vec![3.0, 11.0, 18.0, 22.0],
            vec![12.0, 3.0, 13.0, 19.0],
            vec![15.5, 13.0, 5.0, 7.0],
            vec![24.0, 18.0, 8.0, 5.0],
        ])
        .unwrap();
        let p = crate::gravity::gravity_proportions(&costs, 0.1);
        let t = initial_table(&m, &p).unwrap();
        assert_eq!(check_consistency(&t, &m), Ok(true));
        // Near the Furness solution: the mode cell rounds to ~156.
        assert!(t.get(0, 0).abs_diff(156) <= 2);
    }

    #[test]
    fn cost_combination_matches_proportion_odds() {
        let costs = crate::cost::CostMatrix::from_rows(&[
            vec![3.0, 11.0, 18.0],
            vec![12.0, 3.0, 13.0],
            vec![15.5, 13.0, 5.0],
        ])
        .unwrap();
        let beta = 0.07;
        let combo = cost_odds_combination(&costs);
        let from_p =
            ln_odds_from_proportions(&crate::gravity::gravity_proportions(&costs, beta)).unwrap();
        for (c, lp) in combo.values.iter().zip(&from_p.values) {
            assert!((-beta * c - lp).abs() < 1e-12);
        }
    }
}
