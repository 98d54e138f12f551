//! Exact and floating-point algebra of polynomial Wiener functionals on a
//! finite time grid.

pub mod cameron_martin;
pub mod closed_forms;
pub mod gaussian;
pub mod grid;
pub mod integrability;
pub mod polynomial;

pub use cameron_martin::{build_h, dual_basis, CameronMartinVector};
pub use gaussian::{
    divergence_of, divergence_product, iterated_divergence, GaussianPolynomial,
    MAX_DIVERGENCE_ORDER, MAX_EXPECTATION_DEGREE,
};
pub use grid::{
    build_covariance, invert_covariance, CovarianceMatrix, InverseCovariance, TimeGrid,
};
pub use polynomial::{Exponents, Polynomial};
