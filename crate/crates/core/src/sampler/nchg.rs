//! Non-central hypergeometric cell conditional and its random-walk
//! Metropolis step.
//!
//! A free cell of a margin-constrained table, conditional on every other
//! free cell, follows `HG(o, d, delta; psi)` on the support
//! `max(0, delta) <= x <= min(o, d)` with unnormalized mass
//! `C(o, x) C(d - delta, d - x) psi^x`.

use crate::error::Error;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Parameters of one cell conditional: row budget, column budget, corner
/// offset, and the within-between odds ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NchgParams {
    o: u64,
    d: u64,
    delta: i64,
    psi: f64,
}

impl NchgParams {
    /// Requires a finite nonnegative odds ratio and a nonempty support.
    /// `psi = 0` is allowed (a zero structural proportion in the numerator
    /// forces the cell toward its lower bound).
    pub fn new(o: u64, d: u64, delta: i64, psi: f64) -> Result<Self, Error> {
        if !psi.is_finite() || psi < 0.0 {
            return Err(Error::InvalidValue(format!(
                "odds ratio must be finite and nonnegative, got {psi}"
            )));
        }
        let p = Self { o, d, delta, psi };
        if p.support_min() > p.support_max() {
            return Err(Error::Infeasible(format!(
                "empty support: max(0, {delta}) > min({o}, {d})"
            )));
        }
        Ok(p)
    }

    pub fn support_min(&self) -> u64 {
        self.delta.max(0) as u64
    }

    pub fn support_max(&self) -> u64 {
        self.o.min(self.d)
    }

    pub fn o(&self) -> u64 {
        self.o
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `log[ C(o, x) C(d - delta, d - x) psi^x ]`, without normalization.
/// Requires `x` in the support. With `psi = 0` the value is finite only at
/// `x = 0`.
pub fn nchg_log_pmf_unnormalized(x: u64, p: &NchgParams) -> Result<f64, Error> {
    if x < p.support_min() || x > p.support_max() {
        return Err(Error::InvalidValue(format!(
            "{x} outside support [{}, {}]",
            p.support_min(),
            p.support_max()
        )));
    }
    let odds_term = if p.psi == 0.0 {
        if x == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        x as f64 * p.psi.ln()
    };
    Ok(ln_choose(p.o as f64, x as f64)
        + ln_choose((p.d as i64 - p.delta) as f64, (p.d - x) as f64)
        + odds_term)
}

/// Log acceptance ratio `log H(x+1) - log H(x)`; every factor argument is
/// at least one when `x + 1` lies in the support, so only `ln psi` can be
/// infinite.
#[inline]
pub(crate) fn ln_ratio_up(x: u64, o: u64, d: u64, delta: i64, ln_psi: f64) -> f64 {
    ((o - x) as f64).ln() - ((x + 1) as f64).ln() + ((d - x) as f64).ln()
        - ((x as i64 + 1 - delta) as f64).ln()
        + ln_psi
}

/// Log acceptance ratio `log H(x-1) - log H(x)`.
#[inline]
pub(crate) fn ln_ratio_down(x: u64, o: u64, d: u64, delta: i64, ln_psi: f64) -> f64 {
    (x as f64).ln() - ((o - x + 1) as f64).ln() + ((x as i64 - delta) as f64).ln()
        - ((d - x + 1) as f64).ln()
        - ln_psi
}

/// One random-walk Metropolis step on the cell conditional: proposes `x - 1`
/// or `x + 1` with equal probability, rejects out-of-support proposals
/// outright, and otherwise accepts with probability `min(1, H(x*) / H(x))`.
///
/// Draw order is fixed for reproducibility: one uniform for the proposal
/// direction, then one uniform for the acceptance test whenever the proposal
/// lies in the support.
pub fn metropolis_step<R: Rng + ?Sized>(x: u64, p: &NchgParams, rng: &mut R) -> u64 {
    debug_assert!(x >= p.support_min() && x <= p.support_max());
    let down = rng.random::<f64>() < 0.5;
    if down {
        if x == 0 || x - 1 < p.support_min() {
            return x;
        }
    } else if x + 1 > p.support_max() {
        return x;
    }
    let ln_psi = p.psi.ln();
    let ln_r = if down {
        ln_ratio_down(x, p.o, p.d, p.delta, ln_psi)
    } else {
        ln_ratio_up(x, p.o, p.d, p.delta, ln_psi)
    };
    let u: f64 = rng.random();
    if u.ln() < ln_r {
        if down {
            x - 1
        } else {
            x + 1
        }
    } else {
        x
    }
}
