//! Polynomials in the jointly Gaussian vector `(W_{s_1}, ..., W_{s_n})`,
//! with the Malliavin derivative and divergence acting on them.

use std::collections::HashMap;

use crate::algebra::cameron_martin::{dual_basis, CameronMartinVector};
use crate::algebra::grid::TimeGrid;
use crate::algebra::polynomial::{Exponents, Polynomial};
use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Largest grid for which [`iterated_divergence`] is computed.
pub const MAX_DIVERGENCE_ORDER: usize = 8;

/// Largest total degree accepted by [`GaussianPolynomial::expectation`].
pub const MAX_EXPECTATION_DEGREE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolynomial<C: Scalar> {
    grid: TimeGrid<C>,
    poly: Polynomial<C>,
}

impl<C: Scalar> GaussianPolynomial<C> {
    pub fn new(grid: TimeGrid<C>, poly: Polynomial<C>) -> Result<Self> {
        if poly.nvars() != grid.len() {
            return Err(LabError::LengthMismatch {
                expected: grid.len(),
                got: poly.nvars(),
            });
        }
        Ok(Self { grid, poly })
    }

    pub fn constant(grid: &TimeGrid<C>, c: C) -> Self {
        Self {
            poly: Polynomial::constant(grid.len(), c),
            grid: grid.clone(),
        }
    }

    /// `W_{s_{i+1}}` (0-based `i`).
    pub fn variable(grid: &TimeGrid<C>, i: usize) -> Self {
        Self {
            poly: Polynomial::variable(grid.len(), i),
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &TimeGrid<C> {
        &self.grid
    }

    pub fn polynomial(&self) -> &Polynomial<C> {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn coefficient(&self, exps: &[u16]) -> C {
        self.poly.coefficient(exps)
    }

    fn with_poly(&self, poly: Polynomial<C>) -> Self {
        Self {
            grid: self.grid.clone(),
            poly,
        }
    }

    fn assert_same_grid(&self, other: &Self) {
        assert!(self.grid == other.grid, "polynomials on different grids");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_grid(other);
        self.with_poly(self.poly.add(&other.poly))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_grid(other);
        self.with_poly(self.poly.sub(&other.poly))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_grid(other);
        self.with_poly(self.poly.mul(&other.poly))
    }

    pub fn scale(&self, c: &C) -> Self {
        self.with_poly(self.poly.scale(c))
    }

    /// `D_h P` using `D_h W_{s_i} = h(s_i)`.
    pub fn directional_derivative(&self, h: &CameronMartinVector<C>) -> Self {
        let mut out = Polynomial::zero(self.grid.len());
        for (i, s) in self.grid.times().iter().enumerate() {
            let hs = h.value_at(s);
            if hs.is_negligible() {
                continue;
            }
            out = out.add(&self.poly.partial(i).scale(&hs));
        }
        self.with_poly(out)
    }

    /// Exact centred-Gaussian expectation with covariance `s_i ∧ s_j`.
    pub fn expectation(&self) -> Result<C> {
        let deg = self.degree();
        if deg > MAX_EXPECTATION_DEGREE {
            return Err(LabError::CapExceeded {
                what: "expectation degree",
                value: deg,
                cap: MAX_EXPECTATION_DEGREE,
            });
        }
        let mut moments = MomentTable::new(&self.grid);
        Ok(self
            .poly
            .terms()
            .fold(C::zero(), |acc, (e, c)| acc + c.clone() * moments.moment(e)))
    }

    pub fn evaluate(&self, y: &[C]) -> Result<C> {
        self.poly.evaluate(y)
    }

    pub fn to_f64(&self) -> GaussianPolynomial<f64> {
        GaussianPolynomial {
            grid: self.grid.to_f64(),
            poly: self.poly.map_coefficients(Scalar::to_f64),
        }
    }

    /// The same polynomial written in the independent increments
    /// `U_i = W_{s_i} - W_{s_{i-1}}` (variable `i` of the result is `U_{i+1}`).
    pub fn in_increments(&self) -> Polynomial<C> {
        let n = self.grid.len();
        let map: Vec<Vec<C>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if j <= i { C::one() } else { C::zero() })
                    .collect()
            })
            .collect();
        self.poly
            .substitute_linear(&map)
            .expect("map has one row per variable")
    }
}

/// `δ(h) = ∫ ḣ dW` as a degree-1 polynomial in the grid variables.
///
/// Every breakpoint where `ḣ` jumps must be a grid time.
pub fn divergence_of<C: Scalar>(
    grid: &TimeGrid<C>,
    h: &CameronMartinVector<C>,
) -> Result<GaussianPolynomial<C>> {
    let n = grid.len();
    let mut coeffs = vec![C::zero(); n];
    for (b, w) in h.increment_weights() {
        if w.is_negligible() {
            continue;
        }
        let i = grid
            .index_of(&b)
            .ok_or_else(|| LabError::BreakpointNotOnGrid(b.to_f64()))?;
        coeffs[i] = coeffs[i].clone() + w;
    }
    GaussianPolynomial::new(grid.clone(), Polynomial::linear(&coeffs))
}

/// `δ(hP) = δ(h) P − D_h P`.
pub fn divergence_product<C: Scalar>(
    h: &CameronMartinVector<C>,
    p: &GaussianPolynomial<C>,
) -> Result<GaussianPolynomial<C>> {
    let dh = divergence_of(p.grid(), h)?;
    Ok(dh.mul(p).sub(&p.directional_derivative(h)))
}

/// `Λ_{s_1…s_n} = δ(h_n δ(h_{n−1} ⋯ δ(h_2 δ(h_1))⋯))`.
pub fn iterated_divergence<C: Scalar>(grid: &TimeGrid<C>) -> Result<GaussianPolynomial<C>> {
    let n = grid.len();
    if n > MAX_DIVERGENCE_ORDER {
        return Err(LabError::CapExceeded {
            what: "iterated divergence order",
            value: n,
            cap: MAX_DIVERGENCE_ORDER,
        });
    }
    let hs = dual_basis(grid)?;
    let mut lambda = divergence_of(grid, &hs[0])?;
    for h in &hs[1..] {
        lambda = divergence_product(h, &lambda)?;
    }
    Ok(lambda)
}

/// Memoised Gaussian moments `E[Π W_i^{e_i}]`, computed by the Wick
/// recursion `E[W_a M] = Σ_b cov(a, b) E[∂_b M]`.
struct MomentTable<'g, C: Scalar> {
    grid: &'g TimeGrid<C>,
    memo: HashMap<Exponents, C>,
}

impl<'g, C: Scalar> MomentTable<'g, C> {
    fn new(grid: &'g TimeGrid<C>) -> Self {
        Self {
            grid,
            memo: HashMap::new(),
        }
    }

    fn moment(&mut self, e: &Exponents) -> C {
        let deg = e.degree();
        if deg == 0 {
            return C::one();
        }
        if deg % 2 == 1 {
            return C::zero();
        }
        if let Some(v) = self.memo.get(e) {
            return v.clone();
        }
        let a = e.0.iter().position(|&k| k > 0).expect("nonzero degree");
        let mut rest = e.clone();
        rest.0[a] -= 1;
        let mut acc = C::zero();
        for b in 0..rest.0.len() {
            let k = rest.0[b];
            if k == 0 {
                continue;
            }
            let mut reduced = rest.clone();
            reduced.0[b] -= 1;
            let cov = self.grid.min_time(a, b).clone();
            acc = acc + cov * C::from_i64(k as i64) * self.moment(&reduced);
        }
        self.memo.insert(e.clone(), acc.clone());
        acc
    }
}
