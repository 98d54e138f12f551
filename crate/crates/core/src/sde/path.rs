//! Euler–Maruyama paths of `dX = dW + b(X) dt` and pathwise functionals.

use rand_distr::{Distribution, StandardNormal};

use crate::algebra::cameron_martin::CameronMartinVector;
use crate::drift::DriftSpec;
use crate::error::{LabError, Result};
use crate::mc::{step_count, substream, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub x0: f64,
    pub dt: f64,
    /// Brownian increments `ΔW_k ~ N(0, dt)`.
    pub noise: Vec<f64>,
    pub states: Vec<f64>,
    pub wiener: Vec<f64>,
}

impl PathSample {
    pub fn steps(&self) -> usize {
        self.noise.len()
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn terminal(&self) -> f64 {
        *self.states.last().expect("states are never empty")
    }
}

pub fn sample_noise(rng: &mut Rng, steps: usize, dt: f64) -> Vec<f64> {
    let sd = dt.sqrt();
    (0..steps)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sd * g
        })
        .collect()
}

/// `X_{k+1} = X_k + ΔW_k + b(X_k) dt` from given increments.
pub fn run_scheme(spec: &DriftSpec, x0: f64, dt: f64, noise: Vec<f64>) -> PathSample {
    let mut states = Vec::with_capacity(noise.len() + 1);
    let mut wiener = Vec::with_capacity(noise.len() + 1);
    states.push(x0);
    wiener.push(0.0);
    // X_k = x0 + W_k + Σ_{j<k} b(X_j) dt; zero drift gives x0 + W_k bitwise.
    let (mut x, mut w, mut drift) = (x0, 0.0, 0.0);
    for &dw in &noise {
        drift += spec.eval(x) * dt;
        w += dw;
        x = x0 + w + drift;
        states.push(x);
        wiener.push(w);
    }
    PathSample {
        x0,
        dt,
        noise,
        states,
        wiener,
    }
}

pub fn simulate_path(
    spec: &DriftSpec,
    x0: f64,
    t: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    let steps = step_count(t, dt)?;
    let noise = sample_noise(&mut substream(seed, stream), steps, dt);
    Ok(run_scheme(spec, x0, dt, noise))
}

fn derivative_along(path: &PathSample, spec: &DriftSpec) -> Result<Vec<f64>> {
    if !spec.has_derivative {
        return Err(LabError::DerivativeUnavailable(spec.name().into()));
    }
    path.states.iter().map(|&x| spec.eval_prime(x)).collect()
}

/// `X'_{t,s_k} = exp(∫_{s_k}^t b'(X_θ) dθ)` for every grid time `s_k`, with
/// the exponent by the trapezoid rule.
pub fn transition_derivatives(path: &PathSample, spec: &DriftSpec) -> Result<Vec<f64>> {
    let bp = derivative_along(path, spec)?;
    let n = path.steps();
    let mut exponent = vec![0.0; n + 1];
    for k in (0..n).rev() {
        exponent[k] = exponent[k + 1] + 0.5 * path.dt * (bp[k] + bp[k + 1]);
    }
    Ok(exponent.into_iter().map(f64::exp).collect())
}

/// `X'_t = exp(∫_0^t b'(X_s) ds)`.
pub fn flow_derivative(path: &PathSample, spec: &DriftSpec) -> Result<f64> {
    let bp = derivative_along(path, spec)?;
    let mut exponent = 0.0;
    for w in bp.windows(2) {
        exponent += 0.5 * path.dt * (w[0] + w[1]);
    }
    Ok(exponent.exp())
}

/// `N_t = exp(−Σ b(X_k) ΔW_k − ½ Σ b(X_k)² dt)`.
pub fn girsanov_weight(path: &PathSample, spec: &DriftSpec) -> f64 {
    let mut log = 0.0;
    for (x, dw) in path.states.iter().zip(&path.noise) {
        let b = spec.eval(*x);
        log -= b * dw + 0.5 * b * b * path.dt;
    }
    log.exp()
}

/// `ḣ` on each step, after checking the breakpoints sit on the path grid.
fn slopes_on_grid(path: &PathSample, h: &CameronMartinVector<f64>) -> Result<Vec<f64>> {
    let horizon = path.horizon();
    for &b in h.breakpoints() {
        if b > horizon + 1e-12 {
            continue;
        }
        let k = b / path.dt;
        if (k - k.round()).abs() > 1e-8 * k.max(1.0) {
            return Err(LabError::BreakpointNotOnGrid(b));
        }
    }
    Ok((0..path.steps())
        .map(|k| h.slope_at(&((k as f64 + 0.5) * path.dt)))
        .collect())
}

/// `D_h X_t = ∫_0^t X'_{t,s} ḣ(s) ds`, trapezoid on each step.
pub fn malliavin_derivative_path(
    path: &PathSample,
    spec: &DriftSpec,
    h: &CameronMartinVector<f64>,
) -> Result<f64> {
    let slopes = slopes_on_grid(path, h)?;
    let trans = transition_derivatives(path, spec)?;
    Ok(slopes
        .iter()
        .enumerate()
        .map(|(k, s)| s * 0.5 * (trans[k] + trans[k + 1]) * path.dt)
        .sum())
}

/// The path driven by `w + εh`: increments shifted by `ε (h(t_{k+1}) − h(t_k))`.
pub fn wiener_shift(
    path: &PathSample,
    spec: &DriftSpec,
    h: &CameronMartinVector<f64>,
    eps: f64,
) -> Result<PathSample> {
    let slopes = slopes_on_grid(path, h)?;
    let noise = path
        .noise
        .iter()
        .zip(&slopes)
        .map(|(dw, s)| dw + eps * s * path.dt)
        .collect();
    Ok(run_scheme(spec, path.x0, path.dt, noise))
}

/// `(X_t(w + εh) − X_t(w − εh)) / 2ε`.
pub fn wiener_shift_difference(
    path: &PathSample,
    spec: &DriftSpec,
    h: &CameronMartinVector<f64>,
    eps: f64,
) -> Result<f64> {
    let up = wiener_shift(path, spec, h, eps)?.terminal();
    let down = wiener_shift(path, spec, h, -eps)?.terminal();
    Ok((up - down) / (2.0 * eps))
}

/// `|∇X_t|_H = √(∫_0^t |X'_{t,τ}|² dτ)`.
pub fn gradient_norm(path: &PathSample, spec: &DriftSpec) -> Result<f64> {
    let trans = transition_derivatives(path, spec)?;
    let sq: f64 = trans
        .windows(2)
        .map(|w| 0.5 * (w[0] * w[0] + w[1] * w[1]) * path.dt)
        .sum();
    Ok(sq.sqrt())
}

/// `X'_{s_j, s_i} = exp(∫_{s_i}^{s_j} b'(X_θ) dθ)` between grid indices `i ≤ j`.
pub fn segment_derivative(path: &PathSample, spec: &DriftSpec, i: usize, j: usize) -> Result<f64> {
    if i > j || j > path.steps() {
        return Err(LabError::IndexOutOfRange {
            index: j,
            len: path.steps() + 1,
        });
    }
    if !spec.has_derivative {
        return Err(LabError::DerivativeUnavailable(spec.name().into()));
    }
    let mut exponent = 0.0;
    let mut prev = spec.eval_prime(path.states[i])?;
    for k in i + 1..=j {
        let cur = spec.eval_prime(path.states[k])?;
        exponent += 0.5 * path.dt * (prev + cur);
        prev = cur;
    }
    Ok(exponent.exp())
}
