//! Dense row-major tables indexed by (state, action).
//!
//! Policies, policy parameters, and policy gradients all share this layout:
//! one row per state, one column per action.

use serde::{Deserialize, Serialize};

/// A `rows × cols` matrix of reals stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    /// Wraps `data` as a `rows × cols` table.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "table data has wrong length");
        Table { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Every row is the uniform distribution.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Table::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    /// Deterministic policy table: row `s` puts all mass on `actions[s]`.
    pub fn deterministic(cols: usize, actions: &[usize]) -> Self {
        let mut t = Table::zeros(actions.len(), cols);
        for (s, &a) in actions.iter().enumerate() {
            t.set(s, a, 1.0);
        }
        t
    }

    /// Builds a table from nested rows. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Table::new(rows.len(), cols, rows.concat()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Table {
        let mut t = Table::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Euclidean (Frobenius) norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Table) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True if every row is nonnegative and sums to one within `tol`.
    pub fn is_stochastic(&self, tol: f64) -> bool {
        (0..self.rows).all(|r| {
            let row = self.row(r);
            row.iter().all(|&v| v.is_finite() && v >= -tol)
                && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Row-wise action indices when every row is a vertex of the simplex.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let a = row.iter().position(|&v| v == 1.0)?;
                row.iter()
                    .enumerate()
                    .all(|(i, &v)| i == a || v == 0.0)
                    .then_some(a)
            })
            .collect()
    }
}

/// Vector helpers on plain slices.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_round_trip() {
        let t = Table::deterministic(3, &[2, 0, 1]);
        assert!(t.is_stochastic(0.0));
        assert_eq!(t.as_deterministic(), Some(vec![2, 0, 1]));
        assert_eq!(Table::uniform(2, 2).as_deterministic(), None);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Table::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_none());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
