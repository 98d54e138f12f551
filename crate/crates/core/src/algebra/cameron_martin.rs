use crate::algebra::grid::{invert_covariance, TimeGrid};
use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Element of the Cameron–Martin space with piecewise-constant derivative.
///
/// `breakpoints[0] = 0` and `slopes[k]` is `ḣ` on
/// `(breakpoints[k], breakpoints[k + 1])`; `ḣ = 0` after the last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CameronMartinVector<C: Scalar> {
    breakpoints: Vec<C>,
    slopes: Vec<C>,
}

impl<C: Scalar> CameronMartinVector<C> {
    pub fn new(breakpoints: Vec<C>, slopes: Vec<C>) -> Result<Self> {
        if breakpoints.first() != Some(&C::zero()) {
            return Err(LabError::InvalidVector("first breakpoint must be 0".into()));
        }
        if slopes.len() + 1 != breakpoints.len() {
            return Err(LabError::InvalidVector(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidVector(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            slopes,
        })
    }

    /// `ζ_s(τ) = τ ∧ s`, the gradient of `W_s`.
    pub fn indicator(s: C) -> Result<Self> {
        Self::new(vec![C::zero(), s], vec![C::one()])
    }

    pub fn breakpoints(&self) -> &[C] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[C] {
        &self.slopes
    }

    /// `ḣ(τ)`, right-continuous at breakpoints.
    pub fn slope_at(&self, tau: &C) -> C {
        for (k, s) in self.slopes.iter().enumerate() {
            if *tau >= self.breakpoints[k] && *tau < self.breakpoints[k + 1] {
                return s.clone();
            }
        }
        C::zero()
    }

    /// `h(τ) = ∫_0^τ ḣ`.
    pub fn value_at(&self, tau: &C) -> C {
        let mut acc = C::zero();
        for (k, s) in self.slopes.iter().enumerate() {
            let lo = &self.breakpoints[k];
            let hi = &self.breakpoints[k + 1];
            if tau <= lo {
                break;
            }
            let end = if tau < hi { tau.clone() } else { hi.clone() };
            acc = acc + s.clone() * (end - lo.clone());
        }
        acc
    }

    /// `⟨h, g⟩_H = ∫ ḣ ġ`, exact over the merged partition.
    pub fn inner_product(&self, other: &Self) -> C {
        let mut cuts: Vec<C> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .cloned()
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("comparable breakpoints"));
        cuts.dedup();
        let mut acc = C::zero();
        for w in cuts.windows(2) {
            let a = self.slope_at(&w[0]);
            let b = other.slope_at(&w[0]);
            if a.is_negligible() || b.is_negligible() {
                continue;
            }
            acc = acc + a * b * (w[1].clone() - w[0].clone());
        }
        acc
    }

    pub fn norm_squared(&self) -> C {
        self.inner_product(self)
    }

    /// Coefficients `c_k` with `∫ ḣ dW = Σ_k c_k W_{breakpoints[k]}`.
    pub(crate) fn increment_weights(&self) -> Vec<(C, C)> {
        let m = self.breakpoints.len();
        (1..m)
            .map(|k| {
                let before = self.slopes[k - 1].clone();
                let after = if k < self.slopes.len() {
                    self.slopes[k].clone()
                } else {
                    C::zero()
                };
                (self.breakpoints[k].clone(), before - after)
            })
            .collect()
    }
}

/// Dual vector `h_j` (1-based `j`) with `h_j(s_i) = δ_ij`.
///
/// Slopes are `ḣ_j = Σ_{i >= k} σ⁻¹_{ij}` on `(s_{k-1}, s_k)`.
pub fn build_h<C: Scalar>(grid: &TimeGrid<C>, j: usize) -> Result<CameronMartinVector<C>> {
    let n = grid.len();
    if j == 0 || j > n {
        return Err(LabError::IndexOutOfRange { index: j, len: n });
    }
    let inv = invert_covariance(grid)?;
    let col = j - 1;
    let mut slopes = vec![C::zero(); n];
    let mut tail = C::zero();
    for k in (0..n).rev() {
        tail = tail + inv.get(k, col).clone();
        slopes[k] = tail.clone();
    }
    let mut breakpoints = Vec::with_capacity(n + 1);
    breakpoints.push(C::zero());
    breakpoints.extend(grid.times().iter().cloned());
    CameronMartinVector::new(breakpoints, slopes)
}

/// All dual vectors `h_1, ..., h_n`.
pub fn dual_basis<C: Scalar>(grid: &TimeGrid<C>) -> Result<Vec<CameronMartinVector<C>>> {
    (1..=grid.len()).map(|j| build_h(grid, j)).collect()
}
