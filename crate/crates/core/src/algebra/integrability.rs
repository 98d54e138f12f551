//! Blow-up rate of `E|Λ_{s_1 s_2}|` as `s_2 → s_1`.
//!
//! In the increments `U_1 = W_{s_1}`, `U_2 = W_{s_2} − W_{s_1}` the two-point
//! `Λ` has no `U_1²` term, so conditionally on `U_2` it is affine in `U_1`
//! and `E|Λ|` reduces to a one-dimensional integral of the folded-normal mean.

use num_rational::BigRational;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::algebra::gaussian::iterated_divergence;
use crate::algebra::grid::TimeGrid;
use crate::error::{LabError, Result};
use crate::quadrature::adaptive;
use crate::scalar::Scalar;

const TAIL: f64 = 12.0;

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| LabError::InvalidArgument(format!("{x} is not finite")))
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `E|μ + σ Z|` for standard normal `Z`.
fn folded_mean(mu: f64, sigma: f64, normal: &Normal) -> f64 {
    let sigma = sigma.abs();
    if sigma < 1e-300 {
        return mu.abs();
    }
    let c = mu / sigma;
    sigma * (c * (2.0 * normal.cdf(c) - 1.0) + 2.0 * normal.pdf(c))
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `E|Λ_{s_1 s_2}|`, with `Λ` taken from the symbolic iterated divergence.
pub fn mean_abs_lambda_two_point(s1: f64, s2: f64) -> Result<f64> {
    let grid = TimeGrid::from_times(vec![exact(s1)?, exact(s2)?])?;
    let inc = iterated_divergence(&grid)?.in_increments();
    let mut affine = [vec![0.0; 3], vec![0.0; 3]];
    for (e, c) in inc.terms() {
        let (zp, gp) = (e.0[0] as usize, e.0[1] as usize);
        if zp > 1 || gp > 2 {
            return Err(LabError::InvalidArgument(format!(
                "unexpected monomial U1^{zp} U2^{gp} in two-point Λ"
            )));
        }
        affine[zp][gp] = c.to_f64();
    }
    let sd1 = s1.sqrt();
    let sd_gap = (s2 - s1).sqrt();
    let normal = standard_normal();
    let scale = 1.0 / (s2 - s1) + 1.0 / s1;
    adaptive(
        |g| {
            let u2 = sd_gap * g;
            let mu = horner(&affine[0], u2);
            let sigma = horner(&affine[1], u2) * sd1;
            normal.pdf(g) * folded_mean(mu, sigma, &normal)
        },
        -TAIL,
        TAIL,
        1e-11 * scale,
    )
}

/// `E|G² − 1|` for standard normal `G`, by quadrature split at the kinks.
pub fn chi_square_abs_deviation() -> Result<f64> {
    let normal = standard_normal();
    let f = |g: f64| (g * g - 1.0).abs() * normal.pdf(g);
    let inner = adaptive(f, -1.0, 1.0, 1e-14)?;
    let outer = adaptive(f, 1.0, TAIL, 1e-14)?;
    Ok(inner + 2.0 * outer)
}

#[derive(Debug, Clone)]
pub struct RateStudy {
    pub s1: f64,
    pub gaps: Vec<f64>,
    pub mean_abs: Vec<f64>,
    /// Least-squares slope of `log E|Λ|` against `log(s_2 − s_1)`.
    pub slope: f64,
    /// `ε · E|Λ|` at the smallest gap.
    pub scaled_limit: f64,
    /// `E|G² − 1|`.
    pub limit_constant: f64,
}

pub fn rate_study(s1: f64, gaps: &[f64]) -> Result<RateStudy> {
    if gaps.len() < 2 {
        return Err(LabError::InvalidArgument("need at least two gaps".into()));
    }
    let mean_abs = gaps
        .iter()
        .map(|&e| mean_abs_lambda_two_point(s1, s1 + e))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = gaps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = mean_abs.iter().map(|v| v.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let (i_min, _) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    Ok(RateStudy {
        s1,
        gaps: gaps.to_vec(),
        scaled_limit: gaps[i_min] * mean_abs[i_min],
        mean_abs,
        slope,
        limit_constant: chi_square_abs_deviation()?,
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `n` log-spaced points between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
