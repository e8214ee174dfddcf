//! Structural trip proportions: the simplex-valued prior parameter.

use crate::error::Error;

/// Tolerance on the simplex constraint `sum p_ij = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// `n x n` nonnegative proportions summing to one, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ProportionMatrix {
    /// Accepts values already on the simplex (within [`SIMPLEX_TOL`]).
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} proportions for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidValue(
                "proportions must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidValue(format!(
                "proportions sum to {sum}, not 1"
            )));
        }
        Ok(Self { n, values })
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(n: usize, weights: &[f64]) -> Result<Self, Error> {
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} weights for n = {n}, got {}",
                n * n,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidValue(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidValue("weights sum to zero".into()));
        }
        Ok(Self {
            n,
            values: weights.iter().map(|w| w / sum).collect(),
        })
    }

    /// `p_ij = 1 / n^2` everywhere.
    pub fn uniform(n: usize) -> Self {
        let cells = n * n;
        Self {
            n,
            values: vec![1.0 / cells as f64; cells],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
