//! Wallis integrals, unit-ball volumes and the simplex integrals
//! `η_n(t) = ∫_{0<s_1<⋯<s_n<t} Π (s_i − s_{i−1})^{−1/2} ds`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{EstimateWithError, Method};
use crate::error::{LabError, Result};
use crate::quadrature::adaptive;

pub const ETA_QUADRATURE_CAP: usize = 12;
/// Uniform grid size in the radius variable for the η recursion.
pub const ETA_GRID: usize = 4000;

/// `W(k) = ∫_0^{π/2} sinᵏθ dθ`.
pub fn wallis(k: u32) -> f64 {
    let (mut w, start) = if k % 2 == 0 { (FRAC_PI_2, 2) } else { (1.0, 3) };
    let mut j = start;
    while j <= k {
        w *= (j - 1) as f64 / j as f64;
        j += 2;
    }
    w
}

/// `W(k) = c · π^e` with rational `c`.
pub fn wallis_exact(k: u32) -> (BigRational, u32) {
    let (mut c, e, start) = if k % 2 == 0 {
        (BigRational::new(BigInt::one(), BigInt::from(2)), 1, 2)
    } else {
        (BigRational::one(), 0, 3)
    };
    let mut j = start;
    while j <= k {
        c *= BigRational::new(BigInt::from(j - 1), BigInt::from(j));
        j += 2;
    }
    (c, e)
}

/// `v_n = 2ⁿ Π_{k≤n} W(k)`.
pub fn ball_volume(n: u32) -> f64 {
    (1..=n).fold(2f64.powi(n as i32), |acc, k| acc * wallis(k))
}

/// `v_n = c · π^e` with rational `c`.
pub fn ball_volume_exact(n: u32) -> (BigRational, u32) {
    let mut c = BigRational::from_integer(BigInt::from(2).pow(n));
    let mut e = 0;
    for k in 1..=n {
        let (wc, we) = wallis_exact(k);
        c *= wc;
        e += we;
    }
    (c, e)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(format!(
            "α must be ≥ 0, got {alpha}"
        )))
    }
}

/// `A(α) = ∫_0^1 (1−τ)^α τ^{−1/2} dτ`, through the Wallis recurrence when
/// `2α + 1` is an integer.
pub fn a_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let k = 2.0 * alpha + 1.0;
    if (k - k.round()).abs() < 1e-12 {
        Ok(2.0 * wallis(k.round() as u32))
    } else {
        a_alpha_quadrature(alpha)
    }
}

/// `A(α)` by `τ = sin²θ`, which turns it into `2∫_0^{π/2} cos^{2α+1}θ dθ`.
pub fn a_alpha_quadrature(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = 2.0 * alpha + 1.0;
    Ok(2.0 * adaptive(|th: f64| th.cos().max(0.0).powf(p), 0.0, FRAC_PI_2, 1e-15)?)
}

/// Cubic Lagrange interpolation of equispaced samples at fractional index `p`.
fn interpolate(values: &[f64], p: f64) -> f64 {
    let last = values.len() - 1;
    let base = (p.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
    let x = p - base as f64;
    let (f0, f1, f2, f3) = (
        values[base],
        values[base + 1],
        values[base + 2],
        values[base + 3],
    );
    let l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    let l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    let l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    let l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    l0 * f0 + l1 * f1 + l2 * f2 + l3 * f3
}

/// `η_1(t), …, η_{n_max}(t)` from the recursion
/// `ρ_k(τ) = ∫_0^τ ρ_{k−1}(τ − r) r^{−1/2} dr`, `ρ_0 = 1`.
///
/// With `r = u²` the integrand is bounded: `ρ_k(w²) = 2∫_0^w ρ_{k−1}(w² − u²) du`.
/// Each `ρ_k` is stored on the uniform radius grid `w_i = i√t/m` and the
/// `u`-integral is a trapezoid sum on the same grid.
pub fn eta_quadrature_all(n_max: usize, t: f64) -> Result<Vec<f64>> {
    if n_max > ETA_QUADRATURE_CAP {
        return Err(LabError::CapExceeded {
            what: "eta quadrature order",
            value: n_max,
            cap: ETA_QUADRATURE_CAP,
        });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::NonPositiveTime(t));
    }
    let m = ETA_GRID;
    let h = t.sqrt() / m as f64;
    let mut rho = vec![1.0; m + 1];
    let mut out = Vec::with_capacity(n_max);
    let mut next = vec![0.0; m + 1];
    for _ in 0..n_max {
        next[0] = 0.0;
        for i in 1..=m {
            let ii = (i * i) as f64;
            let mut sum = 0.5 * (rho[i] + rho[0]);
            for j in 1..i {
                sum += interpolate(&rho, (ii - (j * j) as f64).sqrt());
            }
            next[i] = 2.0 * h * sum;
        }
        std::mem::swap(&mut rho, &mut next);
        out.push(rho[m]);
    }
    Ok(out)
}

/// `η_n(t)`, either as `v_n t^{n/2}` or by the convolution recursion.
pub fn eta(n: usize, t: f64, method: Method) -> Result<EstimateWithError> {
    if n == 0 {
        return Err(LabError::InvalidArgument("η_n needs n ≥ 1".into()));
    }
    match method {
        Method::Closed => {
            if !(t > 0.0) {
                return Err(LabError::NonPositiveTime(t));
            }
            Ok(EstimateWithError::exact(
                ball_volume(n as u32) * t.powf(n as f64 / 2.0),
                "closed",
            ))
        }
        Method::Quadrature => {
            let all = eta_quadrature_all(n, t)?;
            Ok(EstimateWithError::deterministic(
                all[n - 1],
                "quadrature",
                ETA_GRID as u64,
            ))
        }
        other => Err(LabError::MethodMismatch {
            method: other.to_string(),
            reason: "η supports closed and quadrature".into(),
        }),
    }
}

/// `(2√π/√e)ⁿ ‖b‖ⁿ t^{n/2} / ⌊n/2⌋!`.
pub fn bound_in1(n: u32, t: f64, bnorm: f64) -> f64 {
    let c = 2.0 * PI.sqrt() / 1f64.exp().sqrt();
    (c * bnorm).powi(n as i32) * t.powf(n as f64 / 2.0) / factorial(n / 2)
}

/// `Mⁿ ‖b‖ⁿ t^{n/2} / ⌊n/2⌋!`.
pub fn davie_bound(n: u32, t: f64, bnorm: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(LabError::NonPositiveConstant(m));
    }
    Ok((m * bnorm).powi(n as i32) * t.powf(n as f64 / 2.0) / factorial(n / 2))
}

/// `π^{⌊n/2⌋} / ⌊n/2⌋!`, the volume bound used in the `I_{n,1}` chain.
pub fn volume_majorant(n: u32) -> f64 {
    let q = n / 2;
    PI.powi(q as i32) / factorial(q)
}
