//! Gaussian heat kernel `q_t(x) = (2πt)^{-1/2} e^{-x²/2t}`, its spatial
//! derivatives, and products over a time grid.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::gaussian::iterated_divergence;
use crate::algebra::grid::TimeGrid;
use crate::error::{LabError, Result};
use crate::scalar::Scalar;

pub const MAX_DERIVATIVE_ORDER: u32 = 10;
pub const MAX_PRODUCT_SIZE: usize = 8;

/// Below this `Q` the mixed partial is formed as a sum of Hermite ratios.
const RATIO_FORM_THRESHOLD: f64 = 1e-280;

/// Probabilists' Hermite polynomial `He_k(z)`.
pub fn hermite(k: u32, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, z);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = z * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonPositiveTime(t))
    }
}

fn check_order(k: u32) -> Result<()> {
    if k > MAX_DERIVATIVE_ORDER {
        return Err(LabError::CapExceeded {
            what: "kernel derivative order",
            value: k as usize,
            cap: MAX_DERIVATIVE_ORDER as usize,
        });
    }
    Ok(())
}

pub fn kernel(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt())
}

/// `q_t^{(k)}(x) / q_t(x) = (−1)^k t^{−k/2} He_k(x/√t)`.
pub fn kernel_ratio(t: f64, x: f64, k: u32) -> Result<f64> {
    check_time(t)?;
    check_order(k)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let st = t.sqrt();
    Ok(sign * hermite(k, x / st) / st.powi(k as i32))
}

/// `∂_x^k q_t(x)`.
pub fn kernel_derivative(t: f64, x: f64, k: u32) -> Result<f64> {
    Ok(kernel_ratio(t, x, k)? * kernel(t, x)?)
}

fn check_args(grid: &TimeGrid<f64>, y: &[f64]) -> Result<()> {
    if y.len() != grid.len() {
        return Err(LabError::LengthMismatch {
            expected: grid.len(),
            got: y.len(),
        });
    }
    if grid.len() > MAX_PRODUCT_SIZE {
        return Err(LabError::CapExceeded {
            what: "kernel product size",
            value: grid.len(),
            cap: MAX_PRODUCT_SIZE,
        });
    }
    Ok(())
}

/// `(s_i − s_{i−1}, y_i − y_{i−1})` with `s_0 = y_0 = 0`.
fn factor_args(grid: &TimeGrid<f64>, y: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_args(grid, y)?;
    let mut out = Vec::with_capacity(y.len());
    let (mut s_prev, mut y_prev) = (0.0, 0.0);
    for (s, &yi) in grid.times().iter().zip(y) {
        let d = s - s_prev;
        if !(d > crate::scalar::DEGENERATE_RELATIVE_GAP * s.abs()) {
            return Err(LabError::DegenerateGrid(s_prev, *s));
        }
        out.push((d, yi - y_prev));
        s_prev = *s;
        y_prev = yi;
    }
    Ok(out)
}

/// `ln Q` for the Brownian marginal density at the grid.
pub fn log_product_q(grid: &TimeGrid<f64>, y: &[f64]) -> Result<f64> {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    Ok(factor_args(grid, y)?
        .iter()
        .map(|&(d, x)| -0.5 * (ln_2pi + d.ln()) - x * x / (2.0 * d))
        .sum())
}

/// `Q = Π q_{s_i − s_{i−1}}(y_i − y_{i−1})`.
pub fn product_q(grid: &TimeGrid<f64>, y: &[f64]) -> Result<f64> {
    let mut acc = 1.0;
    for (d, x) in factor_args(grid, y)? {
        acc *= kernel(d, x)?;
    }
    Ok(acc)
}

/// One summand `sign · Π q^{(k_i)}` of a mixed partial of `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelTerm {
    pub orders: Vec<u32>,
    pub sign: i8,
}

impl KernelTerm {
    pub fn total_order(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// `sign · Π q^{(k_i)} / q` at the given factor arguments.
    fn ratio(&self, args: &[(f64, f64)]) -> Result<f64> {
        let mut acc = self.sign as f64;
        for (&k, &(d, x)) in self.orders.iter().zip(args) {
            acc *= kernel_ratio(d, x, k)?;
        }
        Ok(acc)
    }
}

/// Terms of `∂ⁿQ/∂y_1⋯∂y_n`.
///
/// `y_i` enters factor `i` as `+y_i` and factor `i+1` as `−y_i`, so each
/// `∂/∂y_i` either raises `k_i` or raises `k_{i+1}` and flips the sign.
/// Distinct choices give distinct order vectors, so nothing merges.
pub fn mixed_partial_terms(n: usize) -> Result<Vec<KernelTerm>> {
    if n == 0 || n > MAX_PRODUCT_SIZE {
        return Err(LabError::CapExceeded {
            what: "kernel product size",
            value: n,
            cap: MAX_PRODUCT_SIZE,
        });
    }
    let mut terms = Vec::with_capacity(1 << (n - 1));
    for mask in 0u32..(1 << (n - 1)) {
        let mut orders = vec![0u32; n];
        let mut sign = 1i8;
        for i in 0..n {
            if i + 1 < n && mask & (1 << i) != 0 {
                orders[i + 1] += 1;
                sign = -sign;
            } else {
                orders[i] += 1;
            }
        }
        terms.push(KernelTerm { orders, sign });
    }
    terms.sort();
    Ok(terms)
}

#[derive(Debug, Clone)]
pub struct MixedPartial {
    pub value: f64,
    /// `∂ⁿQ / Q`, computed from Hermite ratios so it survives underflow of `Q`.
    pub ratio: f64,
    pub terms: Vec<KernelTerm>,
}

pub fn mixed_partial_q(grid: &TimeGrid<f64>, y: &[f64]) -> Result<MixedPartial> {
    let args = factor_args(grid, y)?;
    let terms = mixed_partial_terms(grid.len())?;
    let q = product_q(grid, y)?;
    let (value, ratio) = if q < RATIO_FORM_THRESHOLD {
        let ratio = terms_ratio(&terms, &args)?;
        let value = ratio.signum() * (ratio.abs().ln() + log_product_q(grid, y)?).exp();
        (value, ratio)
    } else {
        let mut sum = 0.0;
        for term in &terms {
            let mut prod = term.sign as f64;
            for (&k, &(d, x)) in term.orders.iter().zip(&args) {
                prod *= kernel_derivative(d, x, k)?;
            }
            sum += prod;
        }
        (sum, sum / q)
    };
    Ok(MixedPartial {
        value,
        ratio,
        terms,
    })
}

fn terms_ratio(terms: &[KernelTerm], args: &[(f64, f64)]) -> Result<f64> {
    terms.iter().map(|t| t.ratio(args)).sum()
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| LabError::InvalidArgument(format!("{x} is not finite")))
}

/// `q_d^{(k)}(x) / q_d(x)` in rational arithmetic.
///
/// `d^{−k/2} He_k(x/√d)` only involves `x^{k−2j} / d^{k−j}`, so no square
/// roots appear.
pub fn kernel_ratio_exact(d: &BigRational, x: &BigRational, k: u32) -> Result<BigRational> {
    check_order(k)?;
    if !d.is_positive() {
        return Err(LabError::NonPositiveTime(d.to_f64()));
    }
    // He_k(z) = Σ_j (−1)^j k! / (j! (k−2j)! 2^j) z^{k−2j}
    let mut acc = BigRational::zero();
    let mut coeff = BigRational::one();
    for j in 0..=k / 2 {
        if j > 0 {
            let (kk, jj) = (k as i64, j as i64);
            let num = -(kk - 2 * jj + 2) * (kk - 2 * jj + 1);
            coeff = coeff * BigRational::new(BigInt::from(num), BigInt::from(2 * jj));
        }
        let term = x.pow((k - 2 * j) as i32) / d.pow((k - j) as i32);
        acc += coeff.clone() * term;
    }
    Ok(if k % 2 == 0 { acc } else { -acc })
}

/// `Q⁻¹ ∂ⁿQ/∂y_1⋯∂y_n` from the kernel term list, exactly.
pub fn mixed_partial_ratio_exact(
    grid: &TimeGrid<BigRational>,
    y: &[BigRational],
) -> Result<BigRational> {
    if y.len() != grid.len() {
        return Err(LabError::LengthMismatch {
            expected: grid.len(),
            got: y.len(),
        });
    }
    let mut args = Vec::with_capacity(y.len());
    let (mut s_prev, mut y_prev) = (BigRational::zero(), BigRational::zero());
    for (s, yi) in grid.times().iter().zip(y) {
        args.push((s - &s_prev, yi - &y_prev));
        s_prev = s.clone();
        y_prev = yi.clone();
    }
    let mut sum = BigRational::zero();
    for term in mixed_partial_terms(grid.len())? {
        let mut prod = BigRational::from_integer(BigInt::from(term.sign));
        for (&k, (d, x)) in term.orders.iter().zip(&args) {
            prod *= kernel_ratio_exact(d, x, k)?;
        }
        sum += prod;
    }
    Ok(sum)
}

/// Exact grid and point from the binary values of `grid` and `y`.
fn exact_inputs(
    grid: &TimeGrid<f64>,
    y: &[f64],
) -> Result<(TimeGrid<BigRational>, Vec<BigRational>)> {
    check_args(grid, y)?;
    let times = grid
        .times()
        .iter()
        .map(|&s| exact(s))
        .collect::<Result<Vec<_>>>()?;
    let point = y.iter().map(|&v| exact(v)).collect::<Result<Vec<_>>>()?;
    Ok((TimeGrid::from_times(times)?, point))
}

/// `(−1)ⁿ Λ(y)` in rational arithmetic.
fn signed_lambda(grid: &TimeGrid<BigRational>, y: &[BigRational]) -> Result<BigRational> {
    let lambda = iterated_divergence(grid)?.evaluate(y)?;
    Ok(if grid.len() % 2 == 0 { lambda } else { -lambda })
}

/// `|Q⁻¹ ∂ⁿQ/∂y_1⋯∂y_n − (−1)ⁿ Λ(y)|`.
///
/// Both sides are evaluated in rational arithmetic at the exact binary
/// values of the grid and `y`: the kernel side from the Hermite term list,
/// `Λ` from the iterated divergence.
pub fn representation_residual(grid: &TimeGrid<f64>, y: &[f64]) -> Result<f64> {
    let (g, point) = exact_inputs(grid, y)?;
    let lhs = mixed_partial_ratio_exact(&g, &point)?;
    Ok((lhs - signed_lambda(&g, &point)?).abs().to_f64())
}

/// Same identity with the kernel side taken from the f64 `mixed_partial_q`.
/// Returns the absolute residual and `|Λ(y)|` for scale; grids with tiny
/// gaps lose digits to cancellation here.
pub fn representation_residual_f64(grid: &TimeGrid<f64>, y: &[f64]) -> Result<(f64, f64)> {
    let lhs = mixed_partial_q(grid, y)?.ratio;
    let (g, point) = exact_inputs(grid, y)?;
    let rhs = signed_lambda(&g, &point)?.to_f64();
    Ok(((lhs - rhs).abs(), rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn hermite_low_orders() {
        let z = 0.7;
        assert_eq!(hermite(0, z), 1.0);
        assert_eq!(hermite(1, z), z);
        assert!((hermite(2, z) - (z * z - 1.0)).abs() < 1e-15);
        assert!((hermite(3, z) - (z.powi(3) - 3.0 * z)).abs() < 1e-15);
        assert!((hermite(4, z) - (z.powi(4) - 6.0 * z * z + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        assert!((kernel(1.0, 0.0).unwrap() - INV_SQRT_2PI).abs() < 1e-15);
        for t in [0.1, 1.0, 7.0] {
            assert_eq!(kernel_derivative(t, 0.0, 1).unwrap(), 0.0);
        }
        assert!((kernel_derivative(1.0, 0.0, 2).unwrap() + INV_SQRT_2PI).abs() < 1e-15);
        assert!(matches!(
            kernel(0.0, 1.0),
            Err(LabError::NonPositiveTime(_))
        ));
        assert!(matches!(
            kernel_derivative(1.0, 0.0, 11),
            Err(LabError::CapExceeded { .. })
        ));
    }

    #[test]
    fn second_derivative_matches_central_difference() {
        let h = 1e-5;
        for x in [0.0, 0.4, -1.3] {
            let fd = (kernel(1.0, x + h).unwrap() - 2.0 * kernel(1.0, x).unwrap()
                + kernel(1.0, x - h).unwrap())
                / (h * h);
            assert!((fd - kernel_derivative(1.0, x, 2).unwrap()).abs() < 1e-5);
        }
        // Differencing q' instead of q keeps rounding near ε/h.
        let fd = (kernel_derivative(1.0, h, 1).unwrap() - kernel_derivative(1.0, -h, 1).unwrap())
            / (2.0 * h);
        assert!((fd + INV_SQRT_2PI).abs() < 1e-8);
    }

    #[test]
    fn product_examples() {
        let g = TimeGrid::from_times(vec![1.0, 2.0]).unwrap();
        let q = product_q(&g, &[0.0, 0.0]).unwrap();
        assert!((q - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((log_product_q(&g, &[0.0, 0.0]).unwrap() - q.ln()).abs() < 1e-14);
        assert!(product_q(&g, &[0.0]).is_err());
    }

    #[test]
    fn four_point_term_list() {
        let got = mixed_partial_terms(4).unwrap();
        let mut want: Vec<KernelTerm> = [
            ([1, 1, 1, 1], 1),
            ([1, 1, 0, 2], -1),
            ([1, 0, 1, 2], 1),
            ([1, 0, 2, 1], -1),
            ([0, 2, 0, 2], 1),
            ([0, 2, 1, 1], -1),
            ([0, 1, 2, 1], 1),
            ([0, 1, 1, 2], -1),
        ]
        .into_iter()
        .map(|(o, s)| KernelTerm {
            orders: o.to_vec(),
            sign: s,
        })
        .collect();
        want.sort();
        assert_eq!(got, want);
        assert!(got.iter().all(|t| t.total_order() == 4));
    }

    #[test]
    fn single_point_mixed_partial() {
        let g = TimeGrid::from_times(vec![1.0]).unwrap();
        let m = mixed_partial_q(&g, &[1.0]).unwrap();
        assert!((m.value + (-0.5f64).exp() * INV_SQRT_2PI).abs() < 1e-15);
        assert!((m.ratio + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_form_survives_underflow() {
        let g = TimeGrid::from_times(vec![0.01, 0.02]).unwrap();
        let y = [4.0, 8.0];
        assert_eq!(product_q(&g, &y).unwrap(), 0.0);
        let m = mixed_partial_q(&g, &y).unwrap();
        assert!(m.ratio.is_finite() && m.ratio != 0.0);
        assert!(representation_residual(&g, &y).unwrap() < 1e-9 * m.ratio.abs());
    }

    #[test]
    fn representation_small_cases() {
        let g = TimeGrid::from_times(vec![0.8]).unwrap();
        assert!(representation_residual(&g, &[1.7]).unwrap() < 1e-15);
        let g = TimeGrid::from_times(vec![1.0, 2.0]).unwrap();
        assert!(representation_residual(&g, &[0.5, 1.0]).unwrap() < 1e-9);
        let (r, scale) = representation_residual_f64(&g, &[0.5, 1.0]).unwrap();
        assert!(r < 1e-12 && scale > 0.0);
    }

    #[test]
    fn exact_ratio_matches_float() {
        for (d, x) in [(0.5, 0.3), (2.0, -1.25), (0.125, 3.0)] {
            for k in 0..=MAX_DERIVATIVE_ORDER {
                let e = kernel_ratio_exact(&exact(d).unwrap(), &exact(x).unwrap(), k)
                    .unwrap()
                    .to_f64();
                let f = kernel_ratio(d, x, k).unwrap();
                assert!((e - f).abs() <= 1e-12 * f.abs().max(1.0), "{d} {x} {k}");
            }
        }
    }

    #[test]
    fn tiny_gap_grid_is_exact() {
        let g = TimeGrid::from_times(vec![0.3, 0.3 + 1e-7, 0.9, 0.9 + 3e-6]).unwrap();
        let y = [0.4, -1.1, 1.9, 0.2];
        assert_eq!(representation_residual(&g, &y).unwrap(), 0.0);
        assert!(representation_residual_f64(&g, &y).is_ok());
    }
}
