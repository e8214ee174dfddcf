//! Within-chain convergence diagnostics: effective sample size by initial
//! positive sequence truncation, and a split-half mean discrepancy.

use crate::error::Error;
use crate::sampler::{AcceptanceStats, ChainOutput};

/// Effective sample size of one scalar series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ess {
    /// Estimated effective draws, capped at the series length.
    pub value: f64,
    /// Set when the series is constant; `value` is then the full length by
    /// convention.
    pub zero_variance: bool,
}

fn autocovariance(values: &[f64], mean: f64, lag: usize) -> f64 {
    let g = values.len();
    values[..g - lag]
        .iter()
        .zip(&values[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / g as f64
}

/// ESS via Geyer's initial positive sequence: autocorrelation pair sums
/// `rho_2m + rho_2m+1` accumulate while positive, giving the integrated
/// autocorrelation time `tau = 2 sum - 1`. Antithetic series can push the
/// raw estimate above the draw count; the report is capped at `G`.
pub fn effective_sample_size(values: &[f64]) -> Result<Ess, Error> {
    let g = values.len();
    if g < 4 {
        return Err(Error::TooFewDraws { needed: 4, got: g });
    }
    let mean = values.iter().sum::<f64>() / g as f64;
    let c0 = autocovariance(values, mean, 0);
    if c0 == 0.0 {
        return Ok(Ess {
            value: g as f64,
            zero_variance: true,
        });
    }
    let mut pair_sum = 0.0;
    let mut lag = 0;
    while lag + 1 < g {
        let pair = autocovariance(values, mean, lag) + autocovariance(values, mean, lag + 1);
        if pair <= 0.0 {
            break;
        }
        pair_sum += pair / c0;
        lag += 2;
    }
    let tau = 2.0 * pair_sum - 1.0;
    let value = if tau <= 0.0 {
        g as f64
    } else {
        (g as f64 / tau).min(g as f64)
    };
    Ok(Ess {
        value,
        zero_variance: false,
    })
}

/// Difference of the two half-chain means in units of their combined
/// standard error (each half's variance scaled by its own ESS). Zero when
/// both halves are constant and equal; infinite when they are constant and
/// different.
pub fn split_half_discrepancy(values: &[f64]) -> Result<f64, Error> {
    let g = values.len();
    if g < 8 {
        return Err(Error::TooFewDraws { needed: 8, got: g });
    }
    let (a, b) = values.split_at(g / 2);
    let half = |v: &[f64]| -> Result<(f64, f64), Error> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let ess = effective_sample_size(v)?;
        Ok((m, var / ess.value))
    };
    let (ma, sa) = half(a)?;
    let (mb, sb) = half(b)?;
    let se = (sa + sb).sqrt();
    if se == 0.0 {
        return Ok(if ma == mb { 0.0 } else { f64::INFINITY });
    }
    Ok((ma - mb).abs() / se)
}

/// Per-cell diagnostics over a chain's draws.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// Row-major per-cell ESS.
    pub ess: Vec<Ess>,
    /// Row-major per-cell split-half discrepancies.
    pub split_half: Vec<f64>,
    /// Acceptance statistics per proposal block, echoed from the run.
    pub acceptance: AcceptanceStats,
}

pub fn diagnostics(out: &ChainOutput) -> Result<Diagnostics, Error> {
    let g = out.len();
    if g < 8 {
        return Err(Error::TooFewDraws { needed: 8, got: g });
    }
    let n = out.n();
    let mut ess = Vec::with_capacity(n * n);
    let mut split = Vec::with_capacity(n * n);
    let mut series = vec![0.0f64; g];
    for idx in 0..n * n {
        for (s, d) in series.iter_mut().zip(&out.draws) {
            *s = d.cells()[idx] as f64;
        }
        ess.push(effective_sample_size(&series)?);
        split.push(split_half_discrepancy(&series)?);
    }
    Ok(Diagnostics {
        ess,
        split_half: split,
        acceptance: out.acceptance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn iid_series_has_near_full_ess() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(10);
        let g = 20_000;
        let values: Vec<f64> = (0..g).map(|_| rng.random::<f64>()).collect();
        let ess = effective_sample_size(&values).unwrap();
        assert!(!ess.zero_variance);
        assert!(ess.value > 0.85 * g as f64, "iid ESS {} of {g}", ess.value);
    }

    #[test]
    fn constant_series_is_flagged() {
        let ess = effective_sample_size(&[3.0; 100]).unwrap();
        assert!(ess.zero_variance);
        assert_eq!(ess.value, 100.0);
    }

    #[test]
    fn antithetic_series_caps_at_length() {
        let values: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ess = effective_sample_size(&values).unwrap();
        assert_eq!(ess.value, 1000.0);
    }

    #[test]
    fn correlated_series_has_reduced_ess() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let g = 20_000;
        let mut x = 0.0f64;
        let values: Vec<f64> = (0..g)
            .map(|_| {
                x = 0.9 * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        let ess = effective_sample_size(&values).unwrap();
        // AR(1) with rho = 0.9: tau = (1 + rho) / (1 - rho) = 19.
        let expected = g as f64 / 19.0;
        assert!(
            ess.value > 0.5 * expected && ess.value < 2.0 * expected,
            "ESS {} vs expected {expected}",
            ess.value
        );
    }

    #[test]
    fn split_half_detects_drift() {
        let drifting: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0).collect();
        let d = split_half_discrepancy(&drifting).unwrap();
        assert!(d > 3.0, "drift discrepancy {d}");

        let flat = vec![1.0; 2000];
        assert_eq!(split_half_discrepancy(&flat).unwrap(), 0.0);
    }

    #[test]
    fn too_few_draws_is_an_error() {
        assert!(effective_sample_size(&[1.0, 2.0, 3.0]).is_err());
    }
}
