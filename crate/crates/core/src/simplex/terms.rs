//! Monte Carlo for kernel-product terms
//! `∫_{Δ_n}∫_{ℝⁿ} Π b(y_i) Π q^{(k_i)}_{s_i−s_{i−1}}(y_i − y_{i−1}) dy ds`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::volumes::{ball_volume, factorial, wallis};
use super::EstimateWithError;
use crate::drift::DriftSpec;
use crate::error::{LabError, Result};
use crate::heat_kernel::kernel_ratio;
use crate::mc::Ensemble;

pub const MAX_TERM_SIZE: usize = 4;
pub const MAX_TERM_ORDER: u32 = 2;
pub const J6_PATTERN: [u32; 4] = [0, 2, 1, 1];
pub const J5_PATTERN: [u32; 4] = [0, 2, 0, 2];

#[derive(Debug, Clone, Copy)]
pub struct TermParams {
    pub samples: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for TermParams {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0,
            workers: None,
        }
    }
}

/// Evaluation points and weights standing in for `q^{(k)}(x)/q(x)` at one
/// increment `x`.
///
/// The ratio is odd in `x` for `k = 1` and even for `k = 2`, so averaging
/// over `±x` (and subtracting the mean-zero control `g(0)·ratio` when
/// `k = 2`) leaves the expectation unchanged. The rest of the integrand then
/// enters through a first or second difference, which keeps the variance
/// bounded as the time gap shrinks.
fn increment_points(k: u32, gap: f64, x: f64, out: &mut Vec<(f64, f64)>) -> Result<()> {
    out.clear();
    match k {
        0 => out.push((x, 1.0)),
        1 => {
            let r = kernel_ratio(gap, x, 1)?;
            out.push((x, 0.5 * r));
            out.push((-x, -0.5 * r));
        }
        2 => {
            let r = kernel_ratio(gap, x, 2)?;
            out.push((x, 0.5 * r));
            out.push((-x, 0.5 * r));
            out.push((0.0, -r));
        }
        other => return Err(LabError::OrderOutOfRange(other)),
    }
    Ok(())
}

fn tensor_sum(spec: &DriftSpec, points: &[Vec<(f64, f64)>], level: usize, y_prev: f64) -> f64 {
    if level == points.len() {
        return 1.0;
    }
    let mut acc = 0.0;
    for &(x, w) in &points[level] {
        let y = y_prev + x;
        let by = spec.eval(y);
        if by != 0.0 {
            acc += w * by * tensor_sum(spec, points, level + 1, y);
        }
    }
    acc
}

pub fn estimate_term(
    orders: &[u32],
    spec: &DriftSpec,
    t: f64,
    params: &TermParams,
) -> Result<EstimateWithError> {
    let n = orders.len();
    if n == 0 || n > MAX_TERM_SIZE {
        return Err(LabError::CapExceeded {
            what: "kernel term size",
            value: n,
            cap: MAX_TERM_SIZE,
        });
    }
    if let Some(&k) = orders.iter().find(|&&k| k > MAX_TERM_ORDER) {
        return Err(LabError::OrderOutOfRange(k));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::NonPositiveTime(t));
    }
    let volume = t.powi(n as i32) / factorial(n as u32);
    let mut ensemble = Ensemble::new(params.samples, params.seed);
    ensemble.workers = params.workers;
    let acc = ensemble.run(1, |rng, out| {
        let mut times: Vec<f64> = (0..n).map(|_| t * rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        let mut points = vec![Vec::with_capacity(3); n];
        let mut prev = 0.0;
        for (i, &s) in times.iter().enumerate() {
            let gap = s - prev;
            prev = s;
            if gap <= 0.0 {
                // Probability-zero tie; the sample carries no mass.
                out[0] = 0.0;
                return Ok(());
            }
            let g: f64 = StandardNormal.sample(rng);
            increment_points(orders[i], gap, gap.sqrt() * g, &mut points[i])?;
        }
        out[0] = volume * tensor_sum(spec, &points, 0, 0.0);
        Ok(())
    })?;
    Ok(EstimateWithError::stochastic(
        acc[0].mean(),
        acc[0].std_error(),
        "monte_carlo",
        acc[0].count(),
        params.seed,
    ))
}

/// Right-hand side of the `J_6` bound,
/// `8‖b‖⁴ [∫∫∫ ds/√((s_2−s_1)(s_3−s_2)) + ∫∫∫ ds/√((s_3−s_2)(t−s_3))]`.
///
/// The first integral is `∫_0^t η_2(t − s_1) ds_1 = v_2 t²/2`; in the second
/// the inner integral is the Beta value `B(1/2, 1/2) = 2W(0)` for every
/// `s_2`, leaving `2W(0)·t²/2`.
pub fn j6_bound(t: f64, bnorm: f64) -> f64 {
    let first = ball_volume(2) * t * t / 2.0;
    let second = 2.0 * wallis(0) * t * t / 2.0;
    8.0 * bnorm.powi(4) * (first + second)
}

#[derive(Debug, Clone)]
pub struct J5Scaling {
    pub times: Vec<f64>,
    pub estimates: Vec<EstimateWithError>,
    /// `|J_5(t)| / t²` and its standard error.
    pub ratios: Vec<(f64, f64)>,
    /// No ratio at a smaller `t` exceeds one at a larger `t` by more than
    /// three combined standard errors.
    pub bounded: bool,
}

pub fn j5_scaling(spec: &DriftSpec, times: &[f64], params: &TermParams) -> Result<J5Scaling> {
    let mut estimates = Vec::with_capacity(times.len());
    let mut ratios = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let p = TermParams {
            seed: params.seed.wrapping_add(i as u64),
            ..*params
        };
        let e = estimate_term(&J5_PATTERN, spec, t, &p)?;
        ratios.push((e.value.abs() / (t * t), e.std_error / (t * t)));
        estimates.push(e);
    }
    let mut bounded = true;
    for i in 0..times.len() {
        for j in 0..times.len() {
            if times[i] < times[j] {
                let (ri, si) = ratios[i];
                let (rj, sj) = ratios[j];
                if ri - rj > 3.0 * si.hypot(sj) {
                    bounded = false;
                }
            }
        }
    }
    Ok(J5Scaling {
        times: times.to_vec(),
        estimates,
        ratios,
        bounded,
    })
}
