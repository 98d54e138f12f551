//! Sparse multivariate polynomials over a [`Scalar`] field.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Exponent vector of a monomial, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponents(pub Vec<u16>);

impl Exponents {
    pub fn constant(nvars: usize) -> Self {
        Exponents(vec![0; nvars])
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Exponents(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    fn mul(&self, other: &Exponents) -> Exponents {
        Exponents(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Canonical sparse polynomial: no stored negligible coefficients, every
/// exponent vector has length `nvars`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C: Scalar> {
    nvars: usize,
    terms: BTreeMap<Exponents, C>,
}

impl<C: Scalar> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Exponents::constant(nvars), c);
        p
    }

    pub fn variable(nvars: usize, var: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Exponents::unit(nvars, var), C::one());
        p
    }

    /// Linear form `Σ coeffs[i] x_i`.
    pub fn linear(coeffs: &[C]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(Exponents::unit(n, i), c.clone());
        }
        p
    }

    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u16>, C)>,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(LabError::LengthMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(Exponents(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u16]) -> C {
        self.terms
            .get(&Exponents(exps.to_vec()))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Exponents::degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, e: Exponents, c: C) {
        let merged = match self.terms.remove(&e) {
            Some(old) => old + c,
            None => c,
        };
        if !merged.is_negligible() {
            self.terms.insert(e, merged);
        }
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials over different variable counts"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.mul(eb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvars, C::one()), |acc, _| acc.mul(self))
    }

    /// `∂/∂x_var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e.0[var];
            if k == 0 {
                continue;
            }
            let mut d = e.clone();
            d.0[var] -= 1;
            out.add_term(d, c.clone() * C::from_i64(k as i64));
        }
        out
    }

    pub fn evaluate(&self, x: &[C]) -> Result<C> {
        if x.len() != self.nvars {
            return Err(LabError::LengthMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.terms.iter().fold(C::zero(), |acc, (e, c)| {
            let mono = e.0.iter().zip(x).fold(C::one(), |m, (&k, xi)| {
                (0..k).fold(m, |m, _| m * xi.clone())
            });
            acc + c.clone() * mono
        }))
    }

    /// Substitutes `x_i = Σ_j map[i][j] u_j`, returning a polynomial in `u`.
    pub fn substitute_linear(&self, map: &[Vec<C>]) -> Result<Self> {
        if map.len() != self.nvars {
            return Err(LabError::LengthMismatch {
                expected: self.nvars,
                got: map.len(),
            });
        }
        let m = map.first().map_or(0, Vec::len);
        let images: Vec<Polynomial<C>> = map.iter().map(|row| Polynomial::linear(row)).collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut mono = Polynomial::constant(m, c.clone());
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    mono = mono.mul(&images[i].pow(k as u32));
                }
            }
            out = out.add(&mono);
        }
        Ok(out)
    }

    pub fn map_coefficients<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }
}

impl<C: Scalar> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{:?}", c)?;
            for (i, &k) in e.0.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*W{}", i + 1)?,
                    _ => write!(f, "*W{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}
