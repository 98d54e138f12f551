use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

#[derive(Debug)]
struct GridData<C> {
    times: Vec<C>,
    horizon: C,
}

/// Strictly increasing evaluation times `0 < s_1 < ... < s_n <= T`.
///
/// Cloning is cheap; polynomials built on a grid share it.
#[derive(Debug, Clone)]
pub struct TimeGrid<C: Scalar> {
    data: Arc<GridData<C>>,
}

impl<C: Scalar> PartialEq for TimeGrid<C> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.data.times == other.data.times && self.data.horizon == other.data.horizon)
    }
}

impl<C: Scalar> TimeGrid<C> {
    pub fn new(times: Vec<C>, horizon: C) -> Result<Self> {
        if times.is_empty() {
            return Err(LabError::InvalidGrid("grid needs at least one time".into()));
        }
        if times[0] <= C::zero() {
            return Err(LabError::InvalidGrid(format!(
                "first time must be positive, got {}",
                times[0].to_f64()
            )));
        }
        for w in times.windows(2) {
            if w[0] >= w[1] {
                return Err(LabError::InvalidGrid(format!(
                    "times must be strictly increasing ({} >= {})",
                    w[0].to_f64(),
                    w[1].to_f64()
                )));
            }
        }
        let last = times.last().expect("non-empty");
        if *last > horizon {
            return Err(LabError::InvalidGrid(format!(
                "last time {} exceeds horizon {}",
                last.to_f64(),
                horizon.to_f64()
            )));
        }
        Ok(Self {
            data: Arc::new(GridData { times, horizon }),
        })
    }

    /// Grid whose horizon is its last time.
    pub fn from_times(times: Vec<C>) -> Result<Self> {
        let horizon = times
            .last()
            .cloned()
            .ok_or_else(|| LabError::InvalidGrid("grid needs at least one time".into()))?;
        Self::new(times, horizon)
    }

    pub fn len(&self) -> usize {
        self.data.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.times.is_empty()
    }

    pub fn times(&self) -> &[C] {
        &self.data.times
    }

    pub fn time(&self, i: usize) -> &C {
        &self.data.times[i]
    }

    pub fn horizon(&self) -> &C {
        &self.data.horizon
    }

    /// `s_i ∧ s_j`.
    pub fn min_time(&self, i: usize, j: usize) -> &C {
        &self.data.times[i.min(j)]
    }

    /// Gaps `s_i - s_{i-1}` with `s_0 = 0`.
    pub fn gaps(&self) -> Vec<C> {
        let mut prev = C::zero();
        self.data
            .times
            .iter()
            .map(|s| {
                let g = s.clone() - prev.clone();
                prev = s.clone();
                g
            })
            .collect()
    }

    /// Position of `t` among the grid times, by exact equality.
    pub fn index_of(&self, t: &C) -> Option<usize> {
        self.data.times.iter().position(|s| s == t)
    }

    pub fn to_f64(&self) -> TimeGrid<f64> {
        TimeGrid {
            data: Arc::new(GridData {
                times: self.data.times.iter().map(Scalar::to_f64).collect(),
                horizon: self.data.horizon.to_f64(),
            }),
        }
    }
}

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<C> {
    n: usize,
    entries: Vec<C>,
}

impl<C: Scalar> SymMatrix<C> {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![C::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.entries[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: C) {
        self.entries[i * self.n + j] = v.clone();
        self.entries[j * self.n + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<C>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn matmul(&self, other: &SymMatrix<C>) -> Vec<Vec<C>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(C::zero(), |acc, k| {
                            acc + self.get(i, k).clone() * other.get(k, j).clone()
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Malliavin covariance `min(s_i, s_j)` of `(W_{s_1}, ..., W_{s_n})`.
pub type CovarianceMatrix<C> = SymMatrix<C>;

/// Tridiagonal inverse of the Brownian covariance.
pub type InverseCovariance<C> = SymMatrix<C>;

pub fn build_covariance<C: Scalar>(grid: &TimeGrid<C>) -> CovarianceMatrix<C> {
    let n = grid.len();
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, grid.min_time(i, j).clone());
        }
    }
    m
}

/// Closed-form tridiagonal inverse of `min(s_i, s_j)`.
///
/// With `s_0 = 0` and gaps `d_i = s_i - s_{i-1}`, the diagonal is
/// `1/d_i + 1/d_{i+1}` (just `1/d_n` on the last row) and the off-diagonal
/// `(i, i+1)` entry is `-1/d_{i+1}`.
pub fn invert_covariance<C: Scalar>(grid: &TimeGrid<C>) -> Result<InverseCovariance<C>> {
    let n = grid.len();
    let mut prev = C::zero();
    for s in grid.times() {
        if !C::well_separated(&prev, s) {
            return Err(LabError::DegenerateGrid(prev.to_f64(), s.to_f64()));
        }
        prev = s.clone();
    }
    let gaps = grid.gaps();
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        let mut diag = C::one() / gaps[i].clone();
        if i + 1 < n {
            diag = diag + C::one() / gaps[i + 1].clone();
            m.set(i, i + 1, -(C::one() / gaps[i + 1].clone()));
        }
        m.set(i, i, diag);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;

    fn rgrid(ts: &[i64]) -> TimeGrid<BigRational> {
        TimeGrid::from_times(ts.iter().map(|&t| rational(t, 1)).collect()).unwrap()
    }

    fn ints(rows: Vec<Vec<BigRational>>) -> Vec<Vec<i64>> {
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| {
                        assert!(v.is_integer());
                        v.to_integer().try_into().unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(
            ints(build_covariance(&rgrid(&[1, 2])).rows()),
            vec![vec![1, 1], vec![1, 2]]
        );
        assert_eq!(
            ints(build_covariance(&rgrid(&[1, 2, 3])).rows()),
            vec![vec![1, 1, 1], vec![1, 2, 2], vec![1, 2, 3]]
        );
        let g = TimeGrid::from_times(vec![0.7]).unwrap();
        assert_eq!(build_covariance(&g).rows(), vec![vec![0.7]]);
    }

    #[test]
    fn inverse_examples() {
        let inv = invert_covariance(&rgrid(&[1, 2])).unwrap();
        assert_eq!(ints(inv.rows()), vec![vec![2, -1], vec![-1, 1]]);
        let inv = invert_covariance(&rgrid(&[1, 2, 3])).unwrap();
        assert_eq!(
            ints(inv.rows()),
            vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 1]]
        );
        let g = TimeGrid::from_times(vec![rational(5, 2)]).unwrap();
        assert_eq!(*invert_covariance(&g).unwrap().get(0, 0), rational(2, 5));
    }

    #[test]
    fn inverse_is_exact_for_rational_grid() {
        let g = TimeGrid::from_times(vec![
            rational(1, 3),
            rational(1, 2),
            rational(7, 5),
            rational(2, 1),
        ])
        .unwrap();
        let prod = invert_covariance(&g).unwrap().matmul(&build_covariance(&g));
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j {
                    rational(1, 1)
                } else {
                    rational(0, 1)
                };
                assert_eq!(*v, expect);
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::<f64>::from_times(vec![]).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 1.0]).is_err());
        assert!(TimeGrid::from_times(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![1.0, 2.0], 1.5).is_err());
        assert!(TimeGrid::new(vec![1.0, 2.0], 3.0).is_ok());
    }

    #[test]
    fn near_coincident_times_are_degenerate() {
        let g = TimeGrid::from_times(vec![1.0, 1.0 + 1e-15]).unwrap();
        assert!(matches!(
            invert_covariance(&g),
            Err(LabError::DegenerateGrid(..))
        ));
    }
}
