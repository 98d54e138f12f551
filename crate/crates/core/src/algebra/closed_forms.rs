//! Hand-expanded forms of `Λ` for two and three grid points, built
//! independently of the recursive divergence so the two can be compared.

use crate::algebra::gaussian::GaussianPolynomial;
use crate::algebra::grid::{invert_covariance, TimeGrid};
use crate::error::{LabError, Result};
use crate::scalar::Scalar;

fn require_len<C: Scalar>(grid: &TimeGrid<C>, n: usize) -> Result<()> {
    if grid.len() != n {
        return Err(LabError::LengthMismatch {
            expected: n,
            got: grid.len(),
        });
    }
    Ok(())
}

/// `W_1 (W_2 − W_1) / (s_1 (s_2 − s_1)) − ((W_2 − W_1)² / (s_2 − s_1)² − 1/(s_2 − s_1))`.
pub fn lambda_two_point<C: Scalar>(grid: &TimeGrid<C>) -> Result<GaussianPolynomial<C>> {
    require_len(grid, 2)?;
    let s1 = grid.time(0).clone();
    let gap = grid.time(1).clone() - s1.clone();
    let w1 = GaussianPolynomial::variable(grid, 0);
    let inc = GaussianPolynomial::variable(grid, 1).sub(&w1);
    let one = C::one();
    let cross = w1.mul(&inc).scale(&(one.clone() / (s1 * gap.clone())));
    let square = inc
        .mul(&inc)
        .scale(&(one.clone() / (gap.clone() * gap.clone())))
        .sub(&GaussianPolynomial::constant(grid, one / gap));
    Ok(cross.sub(&square))
}

/// Three-point form `Σ σ⁻¹_{i1,1} σ⁻¹_{i2,2} σ⁻¹_{i3,3} :W_{i1} W_{i2} W_{i3}:`,
/// where the Wick product subtracts all three pairings
/// `(s_{i1}∧s_{i2}) W_{i3} + (s_{i1}∧s_{i3}) W_{i2} + (s_{i2}∧s_{i3}) W_{i1}`.
pub fn lambda_three_point_wick<C: Scalar>(grid: &TimeGrid<C>) -> Result<GaussianPolynomial<C>> {
    three_point_sum(grid, |g, a, b, c| {
        let w = |i| GaussianPolynomial::variable(g, i);
        let m = |i: usize, j: usize| g.min_time(i, j).clone();
        w(a).mul(&w(b))
            .mul(&w(c))
            .sub(&w(c).scale(&m(a, b)))
            .sub(&w(b).scale(&m(a, c)))
            .sub(&w(a).scale(&m(b, c)))
    })
}

/// The same sum with the single pairing `3 (s_{i1}∧s_{i2}) W_{i3}`, i.e. the
/// contraction terms read as if invariant under cyclic relabelling. This
/// differs from `Λ` whenever `σ⁻¹_{12} ≠ σ⁻¹_{13}`; kept to document that.
pub fn lambda_three_point_single_pairing<C: Scalar>(
    grid: &TimeGrid<C>,
) -> Result<GaussianPolynomial<C>> {
    three_point_sum(grid, |g, a, b, c| {
        let w = |i| GaussianPolynomial::variable(g, i);
        let three = C::from_i64(3);
        w(a).mul(&w(b))
            .mul(&w(c))
            .sub(&w(c).scale(&(three * g.min_time(a, b).clone())))
    })
}

fn three_point_sum<C: Scalar>(
    grid: &TimeGrid<C>,
    body: impl Fn(&TimeGrid<C>, usize, usize, usize) -> GaussianPolynomial<C>,
) -> Result<GaussianPolynomial<C>> {
    require_len(grid, 3)?;
    let inv = invert_covariance(grid)?;
    let mut total = GaussianPolynomial::constant(grid, C::zero());
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let weight = inv.get(a, 0).clone() * inv.get(b, 1).clone() * inv.get(c, 2).clone();
                if weight.is_negligible() {
                    continue;
                }
                total = total.add(&body(grid, a, b, c).scale(&weight));
            }
        }
    }
    Ok(total)
}
