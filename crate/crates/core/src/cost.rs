//! Interzonal travel costs and cost-range bins.

use crate::error::Error;

/// `n x n` finite nonnegative generalized travel costs, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} costs for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidValue(
                "costs must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows are not square".into()));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Strictly increasing cost-range edges `c_0 < c_1 < ... < c_K` defining the
/// half-open ranges `(c_{k-1}, c_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBins {
    edges: Vec<f64>,
}

impl CostBins {
    pub fn new(edges: Vec<f64>) -> Result<Self, Error> {
        if edges.len() < 2 {
            return Err(Error::InvalidValue("need at least two bin edges".into()));
        }
        if !edges[0].is_finite() || edges[0] < 0.0 {
            return Err(Error::InvalidValue(
                "first bin edge must be finite and nonnegative".into(),
            ));
        }
        if edges.windows(2).any(|w| !w[1].is_finite() || w[1] <= w[0]) {
            return Err(Error::InvalidValue(
                "bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { edges })
    }

    /// Number of ranges `K`.
    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bounds of bin `k` as `(lower, upper]`.
    pub fn range(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }

    /// Index of the bin containing `cost`, with membership in `(c_{k-1}, c_k]`.
    pub fn bin_of(&self, cost: f64) -> Option<usize> {
        if cost.is_nan() || cost <= self.edges[0] || cost > *self.edges.last().unwrap() {
            return None;
        }
        // First edge >= cost; cost sits in the range ending at that edge.
        let k = self.edges.partition_point(|e| *e < cost);
        Some(k - 1)
    }

    /// Bin index per cell, or the offending cell if any cost falls outside.
    pub fn bin_all(&self, costs: &CostMatrix) -> Result<Vec<usize>, Error> {
        let n = costs.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let c = costs.get(i, j);
                match self.bin_of(c) {
                    Some(k) => out.push(k),
                    None => {
                        return Err(Error::CostOutsideBins {
                            cost: c,
                            row: i,
                            col: j,
                            lo: self.edges[0],
                            hi: *self.edges.last().unwrap(),
                        })
                    }
                }
            }
        }
        Ok(out)
    }
}
