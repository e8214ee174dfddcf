//! Hierarchical sampler steps: the conjugate Dirichlet draw for random
//! proportions, and the random-walk Metropolis step for a random cost
//! deterrence against a trip length distribution.

use crate::cost::{CostBins, CostMatrix};
use crate::error::Error;
use crate::furness::DirichletParams;
use crate::matrix::TripMatrix;
use crate::proportion::ProportionMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

/// One exact draw from `Dir(pi + T [+ T_0])`, the conjugate conditional of
/// the proportions given the current table and an optional seed matrix.
/// Sampled as one gamma variate per cell, normalized.
pub fn dirichlet_step<R: Rng + ?Sized>(
    t: &TripMatrix,
    seed: Option<&TripMatrix>,
    pi: &DirichletParams,
    rng: &mut R,
) -> Result<ProportionMatrix, Error> {
    let n = t.n();
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
                "seed has {} zones, table {}",
                s.n(),
                n
            )));
        }
    }
    let mut weights = Vec::with_capacity(n * n);
    for idx in 0..n * n {
        let alpha =
            pi.values()[idx] + t.cells()[idx] as f64 + seed.map_or(0.0, |s| s.cells()[idx] as f64);
        // alpha > 0 because pi is validated positive at construction.
        let gamma = Gamma::new(alpha, 1.0)
            .map_err(|e| Error::InvalidValue(format!("gamma parameter {alpha}: {e}")))?;
        weights.push(gamma.sample(rng));
    }
    ProportionMatrix::from_weights(n, &weights)
}

/// Binned trip-length counts plus their Dirichlet pseudo-counts; `None`
/// counts with flat `pi = 1` reduce the likelihood to the fixed-proportion
/// gravity form.
fn bin_exponents(
    tld: Option<&[u64]>,
    pi: &DirichletParams,
    bin_count: usize,
) -> Result<Vec<f64>, Error> {
    if pi.len() != bin_count {
        return Err(Error::DimensionMismatch(format!(
            "expected {bin_count} bin pseudo-counts, got {}",
            pi.len()
        )));
    }
    if let Some(counts) = tld {
        if counts.len() != bin_count {
            return Err(Error::DimensionMismatch(format!(
                "expected {bin_count} TLD counts, got {}",
                counts.len()
            )));
        }
    }
    Ok((0..bin_count)
        .map(|k| tld.map_or(0.0, |c| c[k] as f64) + pi.values()[k] - 1.0)
        .collect())
}

/// Log of the deterrence conditional
///
/// ```text
/// log Phi(beta) = -beta sum c_ij T_ij + sum_k (t_k + pi_k - 1) log Z_k(beta)
///                 - (T + T_0^*) log Z(beta),   T_0^* = sum_k (t_k + pi_k - 1)
/// ```
///
/// where `Z_k` sums `exp(-beta c_ij)` over the OD pairs in bin `k` and `Z`
/// over all pairs. Each log-sum is stabilized by subtracting its largest
/// exponent. A bin with no OD pairs but a nonzero exponent is an error.
pub fn phi_log(
    beta: f64,
    t: &TripMatrix,
    tld: Option<&[u64]>,
    pi: &DirichletParams,
    costs: &CostMatrix,
    bins: &CostBins,
) -> Result<f64, Error> {
    if t.n() != costs.n() {
        return Err(Error::DimensionMismatch(format!(
            "table has {} zones, costs {}",
            t.n(),
            costs.n()
        )));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidValue(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let bin_index = bins.bin_all(costs)?;
    let exponents = bin_exponents(tld, pi, bins.count())?;

    let cost_total: f64 = t
        .cells()
        .iter()
        .zip(costs.values())
        .map(|(&n, c)| n as f64 * c)
        .sum();

    let log_z_bin = |k: usize| -> f64 {
        let exps: Vec<f64> = costs
            .values()
            .iter()
            .zip(&bin_index)
            .filter(|(_, b)| **b == k)
            .map(|(c, _)| -beta * c)
            .collect();
        log_sum_exp(&exps)
    };

    let mut bin_term = 0.0;
    for (k, &e) in exponents.iter().enumerate() {
        if e == 0.0 {
            continue;
        }
        let lz = log_z_bin(k);
        if lz == f64::NEG_INFINITY {
            return Err(Error::EmptyBin {
                bin: k,
                exponent: e,
            });
        }
        bin_term += e * lz;
    }

    let all: Vec<f64> = costs.values().iter().map(|c| -beta * c).collect();
    let log_z = log_sum_exp(&all);
    let t0_star: f64 = exponents.iter().sum();

    Ok(-beta * cost_total + bin_term - (t.total() as f64 + t0_star) * log_z)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// One random-walk Metropolis step on the deterrence: proposes
/// `beta* ~ N(beta, sigma2)` and accepts with `min(1, Phi(beta*) / Phi(beta))`
/// evaluated in log space. The proposal normal is drawn before the
/// acceptance uniform.
#[allow(clippy::too_many_arguments)]
pub fn beta_step<R: Rng + ?Sized>(
    beta: f64,
    t: &TripMatrix,
    tld: Option<&[u64]>,
    pi: &DirichletParams,
    costs: &CostMatrix,
    bins: &CostBins,
    sigma2: f64,
    rng: &mut R,
) -> Result<f64, Error> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::InvalidValue(format!(
            "proposal variance must be positive, got {sigma2}"
        )));
    }
    let normal = Normal::new(beta, sigma2.sqrt())
        .map_err(|e| Error::InvalidValue(format!("proposal: {e}")))?;
    let candidate = normal.sample(rng);
    let log_ratio =
        phi_log(candidate, t, tld, pi, costs, bins)? - phi_log(beta, t, tld, pi, costs, bins)?;
    let u: f64 = rng.random();
    Ok(if u.ln() < log_ratio { candidate } else { beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn table1() -> (CostMatrix, CostBins, TripMatrix) {
        let costs = CostMatrix::from_rows(&[
            vec![3.0, 11.0, 18.0, 22.0],
            vec![12.0, 3.0, 13.0, 19.0],
            vec![15.5, 13.0, 5.0, 7.0],
            vec![24.0, 18.0, 8.0, 5.0],
        ])
        .unwrap();
        let bins = CostBins::new(vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0]).unwrap();
        let m = crate::matrix::MarginData::new(vec![400, 460, 400, 702], vec![260, 400, 500, 802])
            .unwrap();
        let p = crate::gravity::gravity_proportions(&costs, 0.1);
        let t = crate::sampler::gibbs::initial_table(&m, &p).unwrap();
        (costs, bins, t)
    }

    #[test]
    fn dirichlet_mean_matches_parameter_ratio() {
        // Dir(29, 13, 33, 9): cell means are alpha / sum(alpha).
        let t = TripMatrix::from_rows(&[vec![28, 12], vec![32, 8]]).unwrap();
        let pi = DirichletParams::flat(4, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let reps = 100_000;
        let mut mean = [0.0f64; 4];
        for _ in 0..reps {
            let p = dirichlet_step(&t, None, &pi, &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(p.values()) {
                *m += v;
            }
        }
        let total = 84.0;
        for (idx, alpha) in [29.0, 13.0, 33.0, 9.0].iter().enumerate() {
            let expect = alpha / total;
            let got = mean[idx] / reps as f64;
            // Standard error of a Dirichlet cell mean over 1e5 draws.
            let se = (expect * (1.0 - expect) / (total + 1.0) / reps as f64).sqrt();
            assert!(
                (got - expect).abs() < 3.0 * se + 1e-4,
                "cell {idx}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn dirichlet_concentrates_with_large_parameter() {
        let t = TripMatrix::zeros(2).unwrap();
        let pi = DirichletParams::flat(4, 1e7).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let p = dirichlet_step(&t, None, &pi, &mut rng).unwrap();
        for v in p.values() {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-3);
        }
    }

    #[test]
    fn dirichlet_includes_seed_counts() {
        let t = TripMatrix::zeros(2).unwrap();
        let seed = TripMatrix::from_rows(&[vec![1_000_000, 0], vec![0, 0]]).unwrap();
        let pi = DirichletParams::flat(4, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let p = dirichlet_step(&t, Some(&seed), &pi, &mut rng).unwrap();
        assert!(p.get(0, 0) > 0.999);
    }

    #[test]
    fn phi_without_tld_is_the_gravity_likelihood() {
        // Flat pi: log Phi = -beta sum(cT) - T log Z, up to nothing at all.
        let (costs, bins, t) = table1();
        let pi = DirichletParams::flat(6, 1.0).unwrap();
        let beta = 0.07;
        let got = phi_log(beta, &t, None, &pi, &costs, &bins).unwrap();
        let cost_total: f64 = t
            .cells()
            .iter()
            .zip(costs.values())
            .map(|(&n, c)| n as f64 * c)
            .sum();
        let z: f64 = costs.values().iter().map(|c| (-beta * c).exp()).sum();
        let expect = -beta * cost_total - t.total() as f64 * z.ln();
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn phi_at_zero_beta_counts_cells() {
        // beta = 0: Z_k = N_k (pairs per bin), Z = n^2.
        let (costs, bins, t) = table1();
        let tld = [365u64, 962, 160, 150, 230, 95];
        let pi = DirichletParams::flat(6, 1.0).unwrap();
        let got = phi_log(0.0, &t, Some(&tld), &pi, &costs, &bins).unwrap();
        let n_k = [2.0f64, 4.0, 2.0, 3.0, 3.0, 2.0];
        let t0_star: f64 = tld.iter().sum::<u64>() as f64;
        let expect: f64 = tld
            .iter()
            .zip(&n_k)
            .map(|(&tk, nk)| tk as f64 * nk.ln())
            .sum::<f64>()
            - (t.total() as f64 + t0_star) * 16.0f64.ln();
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn phi_derivative_matches_finite_differences() {
        let (costs, bins, t) = table1();
        let tld = [365u64, 962, 160, 150, 230, 95];
        let pi = DirichletParams::flat(6, 1.0).unwrap();
        let beta = 0.05;
        let h = 1e-6;
        let up = phi_log(beta + h, &t, Some(&tld), &pi, &costs, &bins).unwrap();
        let down = phi_log(beta - h, &t, Some(&tld), &pi, &costs, &bins).unwrap();
        let numeric = (up - down) / (2.0 * h);

        // Analytic: -sum(cT) + sum_k e_k Z_k'/Z_k - (T + T0*) Z'/Z, with
        // Z' = -sum c exp(-beta c).
        let bin_index = bins.bin_all(&costs).unwrap();
        let cost_total: f64 = t
            .cells()
            .iter()
            .zip(costs.values())
            .map(|(&n, c)| n as f64 * c)
            .sum();
        let mut zk = [0.0f64; 6];
        let mut zk_prime = [0.0f64; 6];
        for (c, k) in costs.values().iter().zip(&bin_index) {
            let w = (-beta * c).exp();
            zk[*k] += w;
            zk_prime[*k] -= c * w;
        }
        let z: f64 = zk.iter().sum();
        let z_prime: f64 = zk_prime.iter().sum();
        let t0_star: f64 = tld.iter().sum::<u64>() as f64;
        let analytic = -cost_total
            + tld
                .iter()
                .enumerate()
                .map(|(k, &tk)| tk as f64 * zk_prime[k] / zk[k])
                .sum::<f64>()
            - (t.total() as f64 + t0_star) * z_prime / z;
        assert_relative_eq!(numeric, analytic, max_relative = 1e-6);
    }

    #[test]
    fn empty_bin_with_exponent_is_rejected() {
        let (costs, _, t) = table1();
        // (24, 30] holds no OD pair.
        let bins = CostBins::new(vec![0.0, 24.0, 30.0]).unwrap();
        let pi = DirichletParams::flat(2, 1.0).unwrap();
        let tld = [10u64, 5];
        assert!(matches!(
            phi_log(0.1, &t, Some(&tld), &pi, &costs, &bins),
            Err(Error::EmptyBin { bin: 1, .. })
        ));
        // Without counts the exponent vanishes and the bin is ignored.
        assert!(phi_log(0.1, &t, None, &pi, &costs, &bins).is_ok());
    }

    #[test]
    fn beta_step_accepts_identical_proposals() {
        // sigma^2 -> 0 collapses the proposal onto the current point, where
        // the ratio is one and the step always accepts the (unchanged) value.
        let (costs, bins, t) = table1();
        let pi = DirichletParams::flat(6, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let beta = 0.08;
        let stepped = beta_step(beta, &t, None, &pi, &costs, &bins, 1e-30, &mut rng).unwrap();
        assert_relative_eq!(stepped, beta, epsilon = 1e-10);
    }
}
