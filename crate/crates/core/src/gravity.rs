//! Structural proportion models and entropy weights.
//!
//! Gravity proportions use an exponential deterrence of cost,
//! `p_ij = exp(-beta c_ij) / Z(beta)`; the general multinomial-logit form
//! covers other deterrence shapes with known coefficients. `calibrate_beta`
//! inverts the map from deterrence to mean proportion cost.

use crate::cost::CostMatrix;
use crate::error::Error;
use crate::matrix::TripMatrix;
use crate::proportion::ProportionMatrix;
use statrs::function::gamma::ln_gamma;

/// `p_ij = exp(-beta c_ij) / Z(beta)`, stabilized by subtracting the largest
/// exponent before exponentiation.
pub fn gravity_proportions(costs: &CostMatrix, beta: f64) -> ProportionMatrix {
    assert!(beta.is_finite(), "deterrence parameter must be finite");
    let n = costs.n();
    let max_exp = costs
        .values()
        .iter()
        .map(|c| -beta * c)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = costs
        .values()
        .iter()
        .map(|c| (-beta * c - max_exp).exp())
        .collect();
    ProportionMatrix::from_weights(n, &weights).expect("exp weights are positive")
}

/// Multinomial-logit proportions over per-cell covariate vectors with known
/// coefficients: `p_ij = exp(x_ij . coeffs) / sum exp(x_kl . coeffs)`.
pub fn logit_proportions(
    n: usize,
    covariates: &[Vec<f64>],
    coeffs: &[f64],
) -> Result<ProportionMatrix, Error> {
    if covariates.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} covariate vectors, got {}",
            n * n,
            covariates.len()
        )));
    }
    if covariates.iter().any(|x| x.len() != coeffs.len()) {
        return Err(Error::DimensionMismatch(
            "covariate vectors must match coefficient length".into(),
        ));
    }
    let scores: Vec<f64> = covariates
        .iter()
        .map(|x| x.iter().zip(coeffs).map(|(a, b)| a * b).sum())
        .collect();
    let max_score = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max_score).exp()).collect();
    ProportionMatrix::from_weights(n, &weights)
}

/// Mean cost under the proportions: `sum c_ij p_ij`.
pub fn mean_proportion_cost(p: &ProportionMatrix, costs: &CostMatrix) -> f64 {
    assert_eq!(p.n(), costs.n(), "shape mismatch");
    p.values()
        .iter()
        .zip(costs.values())
        .map(|(pv, cv)| pv * cv)
        .sum()
}

/// Maximum bracket doublings before calibration gives up.
const MAX_BRACKET_DOUBLINGS: u32 = 60;

/// Finds `beta` such that the gravity proportions reproduce `target_cost`
/// within `tol`. The mean cost is strictly decreasing in `beta`, so a
/// bracketing bisection converges; the bracket starts at `[-1, 1]` and
/// doubles until it straddles the target.
pub fn calibrate_beta(costs: &CostMatrix, target_cost: f64, tol: f64) -> Result<f64, Error> {
    let (min_c, max_c) = (costs.min(), costs.max());
    if !(target_cost > min_c && target_cost < max_c) {
        return Err(Error::TargetOutOfRange {
            target: target_cost,
            min: min_c,
            max: max_c,
        });
    }
    let cost_at = |beta: f64| mean_proportion_cost(&gravity_proportions(costs, beta), costs);

    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut doublings = 0;
    // Decreasing map: cost_at(lo) should sit above the target, cost_at(hi) below.
    while cost_at(lo) < target_cost {
        lo *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::NonConvergence {
                iterations: doublings as usize,
                residual: target_cost - cost_at(lo),
            });
        }
    }
    while cost_at(hi) > target_cost {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::NonConvergence {
                iterations: doublings as usize,
                residual: cost_at(hi) - target_cost,
            });
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let c = cost_at(mid);
        if (c - target_cost).abs() <= tol {
            return Ok(mid);
        }
        if c > target_cost {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: (cost_at(mid) - target_cost).abs(),
    })
}

/// Shannon entropy `-sum p log p` with the `0 log 0 = 0` convention.
pub fn entropy(p: &ProportionMatrix) -> f64 {
    p.values()
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| -v * v.ln())
        .sum()
}

/// `log W = log T! - sum log T_ij!`, the log micro-state count of a table.
pub fn log_entropy_weight(t: &TripMatrix) -> f64 {
    let total = t.total() as f64;
    ln_gamma(total + 1.0)
        - t.cells()
            .iter()
            .map(|&c| ln_gamma(c as f64 + 1.0))
            .sum::<f64>()
}

/// `log W' = -sum (T_ij log(T_ij / t_ij) - T_ij)` against a seed table, with
/// zero cells contributing zero. Fails when a positive cell sits on a zero
/// seed cell.
pub fn log_relative_weight(t: &TripMatrix, seed: &TripMatrix) -> Result<f64, Error> {
    if t.n() != seed.n() {
        return Err(Error::DimensionMismatch(format!(
            "table has {} zones, seed has {}",
            t.n(),
            seed.n()
        )));
    }
    let mut sum = 0.0;
    for (idx, (&tv, &sv)) in t.cells().iter().zip(seed.cells()).enumerate() {
        if tv == 0 {
            continue;
        }
        if sv == 0 {
            return Err(Error::InvalidValue(format!(
                "seed cell {idx} is zero under a positive trip count"
            )));
        }
        let tf = tv as f64;
        sum -= tf * (tf / sv as f64).ln() - tf;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1_costs() -> CostMatrix {
        CostMatrix::from_rows(&[
            vec![3.0, 11.0, 18.0, 22.0],
            vec![12.0, 3.0, 13.0, 19.0],
            vec![15.5, 13.0, 5.0, 7.0],
            vec![24.0, 18.0, 8.0, 5.0],
        ])
        .unwrap()
    }

    #[test]
    fn zero_beta_is_uniform() {
        let p = gravity_proportions(&table1_costs(), 0.0);
        for v in p.values() {
            assert_relative_eq!(*v, 1.0 / 16.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn table1_mean_cost_at_calibrated_beta() {
        let p = gravity_proportions(&table1_costs(), 0.10);
        let cp = mean_proportion_cost(&p, &table1_costs());
        // 8.51 in the source data, to two decimals.
        assert_relative_eq!(cp, 8.51, epsilon = 0.005);
    }

    #[test]
    fn table1_full_matrix_against_direct_evaluation() {
        // Independent route: evaluate exp(-beta c) / Z without stabilization.
        let costs = table1_costs();
        let beta = 0.10;
        let z: f64 = costs.values().iter().map(|c| (-beta * c).exp()).sum();
        let p = gravity_proportions(&costs, beta);
        for (pv, cv) in p.values().iter().zip(costs.values()) {
            assert_relative_eq!(*pv, (-beta * cv).exp() / z, epsilon = 1e-14);
        }
    }

    #[test]
    fn logit_with_cost_covariate_matches_gravity() {
        let costs = table1_costs();
        let beta = 0.07;
        let covs: Vec<Vec<f64>> = costs.values().iter().map(|c| vec![*c]).collect();
        let logit = logit_proportions(4, &covs, &[-beta]).unwrap();
        let grav = gravity_proportions(&costs, beta);
        for (a, b) in logit.values().iter().zip(grav.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn logit_zero_coeffs_is_uniform() {
        let covs: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let p = logit_proportions(2, &covs, &[0.0]).unwrap();
        for v in p.values() {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn logit_two_covariates_match_combined_deterrence() {
        // d(c) = exp(-beta c - alpha log c) via covariates (c, log c).
        let costs = table1_costs();
        let (beta, alpha) = (0.05, 0.3);
        let covs: Vec<Vec<f64>> = costs.values().iter().map(|c| vec![*c, c.ln()]).collect();
        let p = logit_proportions(4, &covs, &[-beta, -alpha]).unwrap();
        let z: f64 = costs
            .values()
            .iter()
            .map(|c| (-beta * c - alpha * c.ln()).exp())
            .sum();
        for (pv, cv) in p.values().iter().zip(costs.values()) {
            assert_relative_eq!(
                *pv,
                (-beta * cv - alpha * cv.ln()).exp() / z,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mean_cost_degenerate_and_constant_cases() {
        let costs = table1_costs();
        let mut w = vec![0.0; 16];
        w[0] = 1.0;
        let degenerate = ProportionMatrix::from_weights(4, &w).unwrap();
        assert_relative_eq!(mean_proportion_cost(&degenerate, &costs), 3.0);

        let constant = CostMatrix::new(2, vec![7.0; 4]).unwrap();
        let uniform = ProportionMatrix::uniform(2);
        assert_relative_eq!(mean_proportion_cost(&uniform, &constant), 7.0);
    }

    #[test]
    fn calibration_recovers_table1_beta() {
        let beta = calibrate_beta(&table1_costs(), 8.51, 1e-9).unwrap();
        assert!((beta - 0.10).abs() < 1e-3, "beta = {beta}");
    }

    #[test]
    fn calibration_at_unweighted_mean_gives_zero() {
        let costs = table1_costs();
        let target = costs.values().iter().sum::<f64>() / 16.0;
        let beta = calibrate_beta(&costs, target, 1e-12).unwrap();
        assert!(beta.abs() < 1e-9, "beta = {beta}");
    }

    #[test]
    fn calibration_roundtrips_arbitrary_target() {
        let costs = table1_costs();
        let beta = calibrate_beta(&costs, 10.0, 1e-10).unwrap();
        let achieved = mean_proportion_cost(&gravity_proportions(&costs, beta), &costs);
        assert_relative_eq!(achieved, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn calibration_rejects_unattainable_targets() {
        assert!(matches!(
            calibrate_beta(&table1_costs(), 100.0, 1e-6),
            Err(Error::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            calibrate_beta(&table1_costs(), 3.0, 1e-6),
            Err(Error::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn mean_cost_is_decreasing_in_beta() {
        let costs = table1_costs();
        let mut last = f64::INFINITY;
        for k in -10..=10 {
            let beta = k as f64 * 0.05;
            let c = mean_proportion_cost(&gravity_proportions(&costs, beta), &costs);
            assert!(c < last, "mean cost not decreasing at beta = {beta}");
            last = c;
        }
    }

    #[test]
    fn entropy_examples() {
        assert_relative_eq!(entropy(&ProportionMatrix::uniform(2)), 4.0f64.ln());
        let mut w = vec![0.0; 4];
        w[2] = 1.0;
        let degenerate = ProportionMatrix::from_weights(2, &w).unwrap();
        assert_relative_eq!(entropy(&degenerate), 0.0);
        let p = ProportionMatrix::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        // Direct evaluation: -(0.1 ln 0.1 + 0.2 ln 0.2 + 0.3 ln 0.3 + 0.4 ln 0.4).
        assert_relative_eq!(entropy(&p), 1.2798542258336676, epsilon = 1e-12);
    }

    #[test]
    fn entropy_weight_examples() {
        let single = TripMatrix::from_rows(&[vec![7, 0], vec![0, 0]]).unwrap();
        assert_relative_eq!(log_entropy_weight(&single), 0.0, epsilon = 1e-10);

        let ones = TripMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_relative_eq!(log_entropy_weight(&ones), 24.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn relative_weight_of_seed_is_total() {
        let t = TripMatrix::from_rows(&[vec![10, 20], vec![30, 40]]).unwrap();
        assert_relative_eq!(log_relative_weight(&t, &t).unwrap(), 100.0, epsilon = 1e-10);
    }

    #[test]
    fn relative_weight_rejects_zero_seed_under_trips() {
        let t = TripMatrix::from_rows(&[vec![1, 0], vec![0, 0]]).unwrap();
        let seed = TripMatrix::zeros(2).unwrap();
        assert!(log_relative_weight(&t, &seed).is_err());
        // A zero trip cell over a zero seed cell is fine.
        let seed_ok = TripMatrix::from_rows(&[vec![5, 0], vec![0, 0]]).unwrap();
        assert!(log_relative_weight(&t, &seed_ok).is_ok());
    }
}
