//! Deterministic margin balancing: the Furness method and its extension
//! that re-estimates proportions from a Dirichlet pseudo-count update.

use crate::error::Error;
use crate::matrix::{MarginData, TripMatrix};
use crate::proportion::ProportionMatrix;

/// Default convergence tolerance on the relative margin residual.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for the balancing loop.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Expected-trip matrix `T_ij = A_i O_i B_j D_j p_ij` with its balancing
/// factors, iteration count, and final residual.
#[derive(Clone, Debug)]
pub struct BalancedMatrix {
    n: usize,
    cells: Vec<f64>,
    row_factors: Vec<f64>,
    col_factors: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl BalancedMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n + j]
    }

    /// Row-major expected trips.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Balancing factors `A_i`, normalized so the first factor with a
    /// positive origin total is one.
    pub fn row_factors(&self) -> &[f64] {
        &self.row_factors
    }

    /// Balancing factors `B_j`.
    pub fn col_factors(&self) -> &[f64] {
        &self.col_factors
    }
}

/// Largest relative deviation of the cell margins from the targets.
fn margin_residual(cells: &[f64], m: &MarginData) -> f64 {
    let n = m.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        let achieved: f64 = cells[i * n..(i + 1) * n].iter().sum();
        let required = m.origin(i) as f64;
        worst = worst.max((achieved - required).abs() / required.max(1.0));
    }
    for j in 0..n {
        let achieved: f64 = (0..n).map(|i| cells[i * n + j]).sum();
        let required = m.destination(j) as f64;
        worst = worst.max((achieved - required).abs() / required.max(1.0));
    }
    worst
}

/// Alternately rescales rows to the origin totals and columns to the
/// destination totals until the largest relative margin error drops below
/// `tol`. Zero margins force their row or column to zero; a structurally
/// incompatible zero pattern in `p` surfaces as [`Error::Infeasible`] (when
/// a positive margin meets an all-zero row or column of weight) or as
/// [`Error::NonConvergence`] after `max_iter` passes.
pub fn furness_balance(
    m: &MarginData,
    p: &ProportionMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<BalancedMatrix, Error> {
    if m.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "margins have {} zones, proportions {}",
            m.n(),
            p.n()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidValue("tolerance must be positive".into()));
    }
    let n = m.n();
    // Scale parametrization: cell_ij = a_i * b_j * p_ij.
    let mut a = vec![1.0f64; n];
    let mut b = vec![1.0f64; n];
    let mut cells = vec![0.0f64; n * n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for iter in 1..=max_iter {
        for (i, scale) in a.iter_mut().enumerate() {
            let denom: f64 = (0..n).map(|j| b[j] * p.get(i, j)).sum();
            let target = m.origin(i) as f64;
            if denom > 0.0 {
                *scale = target / denom;
            } else if target > 0.0 {
                return Err(Error::Infeasible(format!(
                    "origin {i} requires {target} trips but every usable proportion in its row is zero"
                )));
            } else {
                *scale = 0.0;
            }
        }
        for (j, scale) in b.iter_mut().enumerate() {
            let denom: f64 = (0..n).map(|i| a[i] * p.get(i, j)).sum();
            let target = m.destination(j) as f64;
            if denom > 0.0 {
                *scale = target / denom;
            } else if target > 0.0 {
                return Err(Error::Infeasible(format!(
                    "destination {j} requires {target} trips but every usable proportion in its column is zero"
                )));
            } else {
                *scale = 0.0;
            }
        }
        for i in 0..n {
            for j in 0..n {
                cells[i * n + j] = a[i] * b[j] * p.get(i, j);
            }
        }
        iterations = iter;
        residual = margin_residual(&cells, m);
        if residual < tol {
            break;
        }
    }
    if residual >= tol {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }

    // Report factors in the growth-factor form T_ij = A_i O_i B_j D_j p_ij,
    // fixing the scale so the first balanced row has A = 1.
    let mut row_factors: Vec<f64> = (0..n)
        .map(|i| {
            let o = m.origin(i) as f64;
            if o > 0.0 {
                a[i] / o
            } else {
                0.0
            }
        })
        .collect();
    let mut col_factors: Vec<f64> = (0..n)
        .map(|j| {
            let d = m.destination(j) as f64;
            if d > 0.0 {
                b[j] / d
            } else {
                0.0
            }
        })
        .collect();
    if let Some(pivot) = row_factors.iter().copied().find(|f| *f > 0.0) {
        for f in &mut row_factors {
            *f /= pivot;
        }
        for f in &mut col_factors {
            *f *= pivot;
        }
    }

    Ok(BalancedMatrix {
        n,
        cells,
        row_factors,
        col_factors,
        iterations,
        residual,
    })
}

/// Dirichlet pseudo-counts, one positive value per cell (or per cost range
/// in the binned variant).
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    values: Vec<f64>,
}

impl DirichletParams {
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::InvalidValue("no Dirichlet parameters".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidValue(
                "Dirichlet parameters must be finite and positive".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `len` copies of `value`; `flat(len, 1.0)` is the non-informative choice.
    pub fn flat(len: usize, value: f64) -> Result<Self, Error> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Joint-mode candidate for the seed-matrix hierarchy: alternates a full
/// Furness pass at the current proportions with the pseudo-count update
/// `p_ij ~ (T_ij + t_ij + pi_ij - 1) / sum(...)` until the proportions stop
/// moving. Requires `pi_ij >= 1` wherever seed and expected counts are small
/// enough to drive a numerator negative.
pub fn extended_furness(
    m: &MarginData,
    seed: Option<&TripMatrix>,
    pi: &DirichletParams,
    tol: f64,
    max_iter: usize,
) -> Result<BalancedMatrix, Error> {
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
    let seed_cell = |idx: usize| seed.map_or(0.0, |s| s.cells()[idx] as f64);

    // Start from the update applied to a zero table; all-zero weights mean a
    // flat start.
    let mut weights: Vec<f64> = (0..n * n)
        .map(|idx| seed_cell(idx) + pi.values()[idx] - 1.0)
        .collect();
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidValue(
            "seed + pi - 1 is negative; raise pi to at least 1".into(),
        ));
    }
    let mut p = if weights.iter().sum::<f64>() > 0.0 {
        ProportionMatrix::from_weights(n, &weights)?
    } else {
        ProportionMatrix::uniform(n)
    };

    for _ in 0..max_iter {
        let balanced = furness_balance(m, &p, tol, DEFAULT_MAX_ITER)?;
        for (idx, w) in weights.iter_mut().enumerate() {
            *w = balanced.cells()[idx] + seed_cell(idx) + pi.values()[idx] - 1.0;
            if *w < 0.0 {
                return Err(Error::InvalidValue(format!(
                    "update numerator at cell {idx} is negative ({w}); raise pi"
                )));
            }
        }
        let next = ProportionMatrix::from_weights(n, &weights)?;
        let shift = next
            .values()
            .iter()
            .zip(p.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        p = next;
        if shift < tol {
            return furness_balance(m, &p, tol, DEFAULT_MAX_ITER);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}
