//! Trip matrices, margin data, and the linear elimination connecting them.
//!
//! An OD matrix with fixed row and column totals has `(n-1)^2` free cells:
//! once the upper-left submatrix is chosen, the last row, last column, and
//! corner follow from the margins. `complete_from_submatrix` performs that
//! completion and detects infeasibility; `round_to_feasible` maps a
//! real-valued estimate back into the feasible integer set.

use crate::error::Error;

/// Largest supported grand total: totals up to `2^53` keep every count and
/// every intermediate sum exactly representable in both u64 and f64.
pub const MAX_TOTAL: u64 = 1 << 53;

fn check_total(cells: &[u64]) -> Result<(), Error> {
    let total: u128 = cells.iter().map(|&c| c as u128).sum();
    if total > MAX_TOTAL as u128 {
        return Err(Error::InvalidValue(format!(
            "total {total} exceeds the supported maximum of 2^53 trips"
        )));
    }
    Ok(())
}

/// Square matrix of nonnegative integer trip counts, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TripMatrix {
    n: usize,
    cells: Vec<u64>,
}

impl TripMatrix {
    /// Builds an `n x n` matrix from row-major cells. Requires `n >= 2` and
    /// a grand total of at most [`MAX_TOTAL`].
    pub fn new(n: usize, cells: Vec<u64>) -> Result<Self, Error> {
        if n < 2 {
            return Err(Error::InvalidValue(format!("zone count {n} < 2")));
        }
        if cells.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} cells for n = {n}, got {}",
                n * n,
                cells.len()
            )));
        }
        check_total(&cells)?;
        Ok(Self { n, cells })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, Error> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows are not square".into()));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    /// All-zero matrix.
    pub fn zeros(n: usize) -> Result<Self, Error> {
        Self::new(n, vec![0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: u64) {
        self.cells[i * self.n + j] = value;
    }

    /// Row-major cell slice.
    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    /// Sum of all cells.
    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.cells[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// Row sums, column sums, and grand total; self-consistent by construction.
    pub fn margins(&self) -> MarginData {
        let origins: Vec<u64> = (0..self.n).map(|i| self.row_sum(i)).collect();
        let destinations: Vec<u64> = (0..self.n).map(|j| self.col_sum(j)).collect();
        MarginData::new(origins, destinations).expect("row and column sums share one total")
    }
}

/// Observed origin totals, destination totals, and their common grand total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginData {
    origins: Vec<u64>,
    destinations: Vec<u64>,
    total: u64,
}

impl MarginData {
    /// Rejects margins whose origin and destination sums differ.
    pub fn new(origins: Vec<u64>, destinations: Vec<u64>) -> Result<Self, Error> {
        if origins.len() != destinations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} origins vs {} destinations",
                origins.len(),
                destinations.len()
            )));
        }
        if origins.len() < 2 {
            return Err(Error::InvalidValue(format!(
                "zone count {} < 2",
                origins.len()
            )));
        }
        check_total(&origins)?;
        check_total(&destinations)?;
        let so: u64 = origins.iter().sum();
        let sd: u64 = destinations.iter().sum();
        if so != sd {
            return Err(Error::InconsistentMargins {
                origins: so,
                destinations: sd,
            });
        }
        Ok(Self {
            origins,
            destinations,
            total: so,
        })
    }

    pub fn n(&self) -> usize {
        self.origins.len()
    }

    pub fn origins(&self) -> &[u64] {
        &self.origins
    }

    pub fn destinations(&self) -> &[u64] {
        &self.destinations
    }

    pub fn origin(&self, i: usize) -> u64 {
        self.origins[i]
    }

    pub fn destination(&self, j: usize) -> u64 {
        self.destinations[j]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `T - O_n - D_n`, the corner-cell offset. May be negative.
    pub fn delta(&self) -> i64 {
        let n = self.n();
        self.total as i64 - self.origins[n - 1] as i64 - self.destinations[n - 1] as i64
    }
}

/// True iff every row sum equals `O_i` and every column sum equals `D_j`.
pub fn check_consistency(t: &TripMatrix, m: &MarginData) -> Result<bool, Error> {
    if t.n() != m.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} zones, margins have {}",
            t.n(),
            m.n()
        )));
    }
    let rows_ok = (0..t.n()).all(|i| t.row_sum(i) == m.origin(i));
    let cols_ok = (0..t.n()).all(|j| t.col_sum(j) == m.destination(j));
    Ok(rows_ok && cols_ok)
}

/// Fills the last row, last column, and corner of a table from its free
/// `(n-1) x (n-1)` submatrix (row-major in `free`) and the margins.
///
/// `T_in = O_i - sum_j S_ij`, `T_nj = D_j - sum_i S_ij`, and
/// `T_nn = sum S - (T - O_n - D_n)`. Fails with [`Error::Infeasible`] when
/// any completed cell would be negative.
pub fn complete_from_submatrix(free: &[u64], m: &MarginData) -> Result<TripMatrix, Error> {
    let n = m.n();
    let k = n - 1;
    if free.len() != k * k {
        return Err(Error::DimensionMismatch(format!(
            "expected {} free cells for n = {n}, got {}",
            k * k,
            free.len()
        )));
    }
    let mut t = TripMatrix::zeros(n)?;
    for i in 0..k {
        for j in 0..k {
            t.set(i, j, free[i * k + j]);
        }
    }
    for i in 0..k {
        let partial: u64 = (0..k).map(|j| t.get(i, j)).sum();
        let rest = m.origin(i) as i128 - partial as i128;
        if rest < 0 {
            return Err(Error::Infeasible(format!(
                "row {i} free cells sum to {partial}, exceeding origin total {}",
                m.origin(i)
            )));
        }
        t.set(i, k, rest as u64);
    }
    for j in 0..k {
        let partial: u64 = (0..k).map(|i| t.get(i, j)).sum();
        let rest = m.destination(j) as i128 - partial as i128;
        if rest < 0 {
            return Err(Error::Infeasible(format!(
                "column {j} free cells sum to {partial}, exceeding destination total {}",
                m.destination(j)
            )));
        }
        t.set(k, j, rest as u64);
    }
    let free_total: i128 = free.iter().map(|&v| v as i128).sum();
    let corner = free_total - m.delta() as i128;
    if corner < 0 {
        return Err(Error::Infeasible(format!(
            "corner cell would be {corner}: free cells sum to {free_total}, delta is {}",
            m.delta()
        )));
    }
    t.set(k, k, corner as u64);
    debug_assert_eq!(check_consistency(&t, m), Ok(true));
    Ok(t)
}

/// One unit adjustment applied while repairing a rounded table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjustment {
    pub row: usize,
    pub col: usize,
    pub step: i8,
}

/// A rounded table together with the repair steps that restored its margins.
#[derive(Clone, Debug)]
pub struct RoundedTable {
    pub table: TripMatrix,
    pub adjustments: Vec<Adjustment>,
}

/// Rounds a real-valued `n x n` matrix (row-major) to the nearest integers,
/// then repairs the margins greedily: rows first (adjusting the cell that
/// best helps its column), then residual column imbalances by transfers
/// within a row. The repair always terminates for self-consistent margins.
pub fn round_to_feasible(cells: &[f64], m: &MarginData) -> Result<RoundedTable, Error> {
    let n = m.n();
    if cells.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} cells, got {}",
            n * n,
            cells.len()
        )));
    }
    if cells.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidValue(
            "cells must be finite and nonnegative".into(),
        ));
    }
    let mut t = TripMatrix::new(n, cells.iter().map(|c| (c + 0.5).floor() as u64).collect())?;
    let mut steps = Vec::new();

    // Row repair: fix each row sum, preferring the column whose own error
    // moves toward zero under the adjustment.
    for i in 0..n {
        loop {
            let err = t.row_sum(i) as i64 - m.origin(i) as i64;
            if err == 0 {
                break;
            }
            let step: i64 = if err > 0 { -1 } else { 1 };
            let mut best: Option<(i64, usize)> = None;
            for j in 0..n {
                if step < 0 && t.get(i, j) == 0 {
                    continue;
                }
                let col_err = t.col_sum(j) as i64 - m.destination(j) as i64;
                let gain = (col_err + step).abs() - col_err.abs();
                if best.is_none_or(|(g, _)| gain < g) {
                    best = Some((gain, j));
                }
            }
            let (_, j) = best.expect("a positive cell exists in an over-full row");
            t.set(i, j, (t.get(i, j) as i64 + step) as u64);
            steps.push(Adjustment {
                row: i,
                col: j,
                step: step as i8,
            });
        }
    }

    // Column repair: row sums are now exact, so column errors cancel in
    // aggregate; transfer units between columns inside a single row.
    loop {
        let col_err: Vec<i64> = (0..n)
            .map(|j| t.col_sum(j) as i64 - m.destination(j) as i64)
            .collect();
        let Some(over) = (0..n)
            .max_by_key(|&j| col_err[j])
            .filter(|&j| col_err[j] > 0)
        else {
            break;
        };
        let under = (0..n)
            .min_by_key(|&j| col_err[j])
            .expect("column errors sum to zero, so a deficit exists");
        let row = (0..n)
            .max_by_key(|&i| t.get(i, over))
            .expect("over-full column has a positive cell");
        t.set(row, over, t.get(row, over) - 1);
        t.set(row, under, t.get(row, under) + 1);
        steps.push(Adjustment {
            row,
            col: over,
            step: -1,
        });
        steps.push(Adjustment {
            row,
            col: under,
            step: 1,
        });
    }

    debug_assert_eq!(check_consistency(&t, m), Ok(true));
    Ok(RoundedTable {
        table: t,
        adjustments: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> MarginData {
        MarginData::new(vec![40, 40], vec![60, 20]).unwrap()
    }

    #[test]
    fn consistency_detects_row_and_column_sums() {
        let t = TripMatrix::from_rows(&[vec![28, 12], vec![32, 8]]).unwrap();
        assert_eq!(check_consistency(&t, &m2()), Ok(true));

        let bad = TripMatrix::from_rows(&[vec![29, 12], vec![32, 8]]).unwrap();
        assert_eq!(check_consistency(&bad, &m2()), Ok(false));

        let zero = TripMatrix::zeros(2).unwrap();
        let zm = MarginData::new(vec![0, 0], vec![0, 0]).unwrap();
        assert_eq!(check_consistency(&zero, &zm), Ok(true));
    }

    #[test]
    fn consistency_rejects_dimension_mismatch() {
        let t = TripMatrix::zeros(3).unwrap();
        assert!(check_consistency(&t, &m2()).is_err());
    }

    #[test]
    fn totals_beyond_the_supported_width_are_rejected() {
        let big = MAX_TOTAL / 2 + 1;
        assert!(TripMatrix::new(2, vec![big, big, 0, 0]).is_err());
        assert!(MarginData::new(vec![big, big], vec![big, big]).is_err());
        assert!(TripMatrix::new(2, vec![big, 0, 0, 0]).is_ok());
    }

    #[test]
    fn margins_require_matching_totals() {
        let err = MarginData::new(vec![40, 41], vec![60, 20]).unwrap_err();
        assert_eq!(
            err,
            Error::InconsistentMargins {
                origins: 81,
                destinations: 80
            }
        );
    }

    #[test]
    fn delta_examples() {
        assert_eq!(m2().delta(), 20);
        assert_eq!(MarginData::new(vec![1, 1], vec![1, 1]).unwrap().delta(), 0);
        let table1 = MarginData::new(vec![400, 460, 400, 702], vec![260, 400, 500, 802]).unwrap();
        assert_eq!(table1.delta(), 1962 - 702 - 802);
        assert_eq!(table1.delta(), 458);
    }

    #[test]
    fn margins_of_matches_row_and_column_sums() {
        let t = TripMatrix::from_rows(&[vec![28, 12], vec![32, 8]]).unwrap();
        let m = t.margins();
        assert_eq!(m.origins(), &[40, 40]);
        assert_eq!(m.destinations(), &[60, 20]);
        assert_eq!(m.total(), 80);

        let z = TripMatrix::zeros(3).unwrap();
        assert_eq!(z.margins().total(), 0);

        let d = TripMatrix::from_rows(&[vec![5, 0], vec![0, 5]]).unwrap();
        let dm = d.margins();
        assert_eq!(dm.origins(), &[5, 5]);
        assert_eq!(dm.destinations(), &[5, 5]);
        assert_eq!(dm.total(), 10);
    }

    #[test]
    fn completion_fills_forced_cells() {
        let t = complete_from_submatrix(&[28], &m2()).unwrap();
        assert_eq!(t.cells(), &[28, 12, 32, 8]);
        assert_eq!(check_consistency(&t, &m2()), Ok(true));
    }

    #[test]
    fn completion_rejects_negative_corner() {
        // T_22 = 10 - 20 < 0.
        let err = complete_from_submatrix(&[10], &m2()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn completion_is_a_bijection_onto_consistent_tables() {
        // Every accepted submatrix yields the input margins back, and the
        // accepted count matches a brute-force scan over full tables.
        let m = MarginData::new(vec![4, 3, 2], vec![3, 4, 2]).unwrap();
        let mut accepted = 0usize;
        let cap = |i: usize, j: usize| m.origin(i).min(m.destination(j));
        for a in 0..=cap(0, 0) {
            for b in 0..=cap(0, 1) {
                for c in 0..=cap(1, 0) {
                    for d in 0..=cap(1, 1) {
                        if let Ok(t) = complete_from_submatrix(&[a, b, c, d], &m) {
                            accepted += 1;
                            assert_eq!(t.margins(), m);
                        }
                    }
                }
            }
        }
        // Independent enumeration over all 3x3 tables with cells <= total.
        let mut brute = 0usize;
        let total = m.total();
        let mut cells = [0u64; 9];
        fn scan(idx: usize, cells: &mut [u64; 9], total: u64, m: &MarginData, count: &mut usize) {
            if idx == 9 {
                let t = TripMatrix::new(3, cells.to_vec()).unwrap();
                if check_consistency(&t, m) == Ok(true) {
                    *count += 1;
                }
                return;
            }
            let i = idx / 3;
            let j = idx % 3;
            let hi = m.origin(i).min(m.destination(j)).min(total);
            for v in 0..=hi {
                cells[idx] = v;
                scan(idx + 1, cells, total, m, count);
            }
            cells[idx] = 0;
        }
        scan(0, &mut cells, total, &m, &mut brute);
        assert_eq!(accepted, brute);
        assert!(accepted > 0);
    }

    #[test]
    fn margins_of_roundtrips_through_consistency() {
        let t = TripMatrix::from_rows(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]).unwrap();
        assert_eq!(check_consistency(&t, &t.margins()), Ok(true));
    }

    #[test]
    fn rounding_repairs_margins() {
        let m = MarginData::new(vec![40, 40], vec![60, 20]).unwrap();
        // Deliberately inconsistent rounding input.
        let rounded = round_to_feasible(&[28.6, 12.6, 31.4, 7.4], &m).unwrap();
        assert_eq!(check_consistency(&rounded.table, &m), Ok(true));
        // 29 + 13 = 42 needs two decrements; repairs are recorded.
        assert!(!rounded.adjustments.is_empty());
    }

    #[test]
    fn rounding_handles_zero_margins() {
        let m = MarginData::new(vec![5, 0], vec![0, 5]).unwrap();
        let rounded = round_to_feasible(&[0.2, 4.8, 0.1, 0.0], &m).unwrap();
        assert_eq!(rounded.table.cells(), &[0, 5, 0, 0]);
    }
}
