//! Ensemble experiments on the flow: exponential moments, Girsanov checks,
//! Sobolev norms over an initial-point lattice and time continuity.

use rand::Rng as _;

use super::path::{
    flow_derivative, girsanov_weight, gradient_norm, malliavin_derivative_path, run_scheme,
    sample_noise, simulate_path, transition_derivatives, wiener_shift_difference,
};
use crate::algebra::cameron_martin::CameronMartinVector;
use crate::algebra::integrability::least_squares_slope;
use crate::drift::DriftSpec;
use crate::error::{LabError, Result};
use crate::mc::{step_count, substream, Ensemble, EnsembleEstimate};

/// Relative half-width of the accepted band around `q/2`.
pub const SLOPE_BAND: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            paths: 100_000,
            dt: 1e-3,
            seed: 0,
            workers: None,
        }
    }
}

impl SimParams {
    fn ensemble(&self) -> Ensemble {
        Ensemble {
            samples: self.paths,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

fn require_derivative(spec: &DriftSpec) -> Result<()> {
    if spec.has_derivative {
        Ok(())
    } else {
        Err(LabError::DerivativeUnavailable(spec.name().into()))
    }
}

/// Runs the scheme from `x0` on `noise` and records `(X, X')` after each
/// step count in `marks` (ascending).
fn march(
    spec: &DriftSpec,
    x0: f64,
    dt: f64,
    noise: &[f64],
    marks: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(marks.len());
    let (mut x, mut w, mut drift, mut exponent) = (x0, 0.0, 0.0, 0.0);
    let mut bp = spec.eval_prime(x)?;
    let mut next = marks.iter().peekable();
    while next.peek() == Some(&&0) {
        out.push((x, 1.0));
        next.next();
    }
    for (k, dw) in noise.iter().enumerate() {
        drift += spec.eval(x) * dt;
        w += dw;
        x = x0 + w + drift;
        let cur = spec.eval_prime(x)?;
        exponent += 0.5 * dt * (bp + cur);
        bp = cur;
        while next.peek() == Some(&&(k + 1)) {
            out.push((x, exponent.exp()));
            next.next();
        }
        if next.peek().is_none() {
            break;
        }
    }
    Ok(out)
}

/// Equispaced points on `[−R, R]` and their trapezoid weights.
fn lattice(r: f64, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(r > 0.0 && r.is_finite()) || points < 2 {
        return Err(LabError::InvalidArgument(format!(
            "lattice needs R > 0 and at least two points, got R = {r}, {points} points"
        )));
    }
    let h = 2.0 * r / (points - 1) as f64;
    let xs = (0..points).map(|i| -r + h * i as f64).collect();
    let ws = (0..points)
        .map(|i| {
            if i == 0 || i == points - 1 {
                0.5 * h
            } else {
                h
            }
        })
        .collect();
    Ok((xs, ws))
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(format!("p must be ≥ 1, got {p}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpMomentReport {
    /// `E[exp(p∫_0^t b'(X_s) ds)]`.
    pub lhs: EnsembleEstimate,
    /// `E[exp(2p∫_0^t b'(W_s) ds)]` with `W` started at `x0`.
    pub inner: EnsembleEstimate,
    pub rhs: f64,
    pub rhs_se: f64,
    pub pass: bool,
}

/// Compares both sides of the exponential-moment inequality on shared noise.
pub fn exp_moment_check(
    spec: &DriftSpec,
    x0: f64,
    p: f64,
    t: f64,
    horizon: f64,
    params: &SimParams,
) -> Result<ExpMomentReport> {
    require_derivative(spec)?;
    check_exponent(p)?;
    if t > horizon {
        return Err(LabError::InvalidArgument(format!(
            "need t ≤ T, got t = {t}, T = {horizon}"
        )));
    }
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let acc = params.ensemble().run(2, |rng, out| {
        let noise = sample_noise(rng, steps, dt);
        let (mut x, mut w) = (x0, x0);
        let (mut bx, mut bw) = (spec.eval_prime(x)?, spec.eval_prime(w)?);
        let (mut ex, mut ew) = (0.0, 0.0);
        for dw in &noise {
            x += dw + spec.eval(x) * dt;
            w += dw;
            let (cx, cw) = (spec.eval_prime(x)?, spec.eval_prime(w)?);
            ex += 0.5 * dt * (bx + cx);
            ew += 0.5 * dt * (bw + cw);
            (bx, bw) = (cx, cw);
        }
        out[0] = (p * ex).exp();
        out[1] = (2.0 * p * ew).exp();
        Ok(())
    })?;
    let lhs = acc[0].estimate(params.seed);
    let inner = acc[1].estimate(params.seed);
    let factor = (0.5 * spec.bound * spec.bound * horizon).exp();
    let root = inner.mean.sqrt();
    let rhs = factor * root;
    let rhs_se = factor * inner.std_error / (2.0 * root);
    let pass = lhs.mean <= rhs + 3.0 * lhs.std_error.hypot(rhs_se);
    Ok(ExpMomentReport {
        lhs,
        inner,
        rhs,
        rhs_se,
        pass,
    })
}

/// Partial sum `Σ_{n<terms} xⁿ/⌊n/2⌋!` and the closed form `(1+x)e^{x²}`.
pub fn series_half_factorial(x: f64, terms: usize) -> Result<(f64, f64)> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(LabError::InvalidArgument(format!("x must be ≥ 0, got {x}")));
    }
    let x2 = x * x;
    let mut even = 1.0;
    let mut sum = 0.0;
    for n in 0..terms {
        let q = n / 2;
        if n % 2 == 0 {
            if q > 0 {
                even *= x2 / q as f64;
            }
            sum += even;
        } else {
            sum += x * even;
        }
    }
    Ok((sum, (1.0 + x) * x2.exp()))
}

/// `(1 + 2pM√t‖b‖)·exp((1 + 2p²M²)T‖b‖²)`.
pub fn moment_bound_value(p: f64, t: f64, horizon: f64, bnorm: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(LabError::NonPositiveConstant(m));
    }
    Ok((1.0 + 2.0 * p * m * t.sqrt() * bnorm)
        * ((1.0 + 2.0 * p * p * m * m) * horizon * bnorm * bnorm).exp())
}

/// `E[N_t]` and `E[X_t² N_t]`.
pub fn girsanov_moments(
    spec: &DriftSpec,
    x0: f64,
    t: f64,
    params: &SimParams,
) -> Result<[EnsembleEstimate; 2]> {
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let acc = params.ensemble().run(2, |rng, out| {
        let path = run_scheme(spec, x0, dt, sample_noise(rng, steps, dt));
        let n = girsanov_weight(&path, spec);
        let x = path.terminal();
        out[0] = n;
        out[1] = x * x * n;
        Ok(())
    })?;
    Ok([acc[0].estimate(params.seed), acc[1].estimate(params.seed)])
}

/// Ensemble mean of `X_t`.
pub fn terminal_mean(
    spec: &DriftSpec,
    x0: f64,
    t: f64,
    params: &SimParams,
) -> Result<EnsembleEstimate> {
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let acc = params.ensemble().run(1, |rng, out| {
        out[0] = run_scheme(spec, x0, dt, sample_noise(rng, steps, dt)).terminal();
        Ok(())
    })?;
    Ok(acc[0].estimate(params.seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowComparison {
    pub x0: f64,
    pub analytic: f64,
    pub finite_difference: f64,
}

impl FlowComparison {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.finite_difference).abs() / self.analytic.abs()
    }
}

/// `X'_t` against `(X_t(x+ε) − X_t(x−ε))/2ε` on the same noise, one path per
/// entry of `starts`.
pub fn flow_fd_check(
    spec: &DriftSpec,
    starts: &[f64],
    t: f64,
    eps: f64,
    params: &SimParams,
) -> Result<Vec<FlowComparison>> {
    require_derivative(spec)?;
    starts
        .iter()
        .enumerate()
        .map(|(i, &x0)| {
            let path = simulate_path(spec, x0, t, params.dt, params.seed, i as u64)?;
            let up = run_scheme(spec, x0 + eps, params.dt, path.noise.clone()).terminal();
            let down = run_scheme(spec, x0 - eps, params.dt, path.noise.clone()).terminal();
            Ok(FlowComparison {
                x0,
                analytic: flow_derivative(&path, spec)?,
                finite_difference: (up - down) / (2.0 * eps),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftComparison {
    pub duhamel: f64,
    pub shifted: f64,
    /// `∫_0^t X'_{t,s} |ḣ(s)| ds`, the size of the integrand.
    pub scale: f64,
}

impl ShiftComparison {
    pub fn relative_error(&self) -> f64 {
        (self.duhamel - self.shifted).abs() / self.scale
    }
}

/// Random piecewise-linear `h` with breakpoints on the path grid.
fn random_direction(
    rng: &mut crate::mc::Rng,
    steps: usize,
    dt: f64,
) -> Result<CameronMartinVector<f64>> {
    let pieces = rng.random_range(1..=4usize);
    let mut cuts: Vec<usize> = (0..pieces - 1)
        .map(|_| rng.random_range(1..steps))
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts.iter().map(|&k| k as f64 * dt));
    breakpoints.push(steps as f64 * dt);
    let slopes = (1..breakpoints.len())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    CameronMartinVector::new(breakpoints, slopes)
}

/// Duhamel `D_h X_t` against the Wiener-shift difference for `draws` random
/// `(x0, h, path)` triples.
pub fn duhamel_shift_check(
    spec: &DriftSpec,
    t: f64,
    eps: f64,
    draws: usize,
    params: &SimParams,
) -> Result<Vec<ShiftComparison>> {
    require_derivative(spec)?;
    let steps = step_count(t, params.dt)?;
    (0..draws)
        .map(|i| {
            let mut rng = substream(params.seed, i as u64);
            let x0 = rng.random_range(-2.0..2.0);
            let h = random_direction(&mut rng, steps, params.dt)?;
            let path = run_scheme(
                spec,
                x0,
                params.dt,
                sample_noise(&mut rng, steps, params.dt),
            );
            let trans = transition_derivatives(&path, spec)?;
            let scale = (0..steps)
                .map(|k| {
                    let s = h.slope_at(&((k as f64 + 0.5) * params.dt)).abs();
                    s * 0.5 * (trans[k] + trans[k + 1]) * params.dt
                })
                .sum();
            Ok(ShiftComparison {
                duhamel: malliavin_derivative_path(&path, spec, &h)?,
                shifted: wiener_shift_difference(&path, spec, &h, eps)?,
                scale,
            })
        })
        .collect()
}

/// `E|∇X_t|_H^2` and `E|∇X_t|_H^4`.
pub fn gradient_norm_moments(
    spec: &DriftSpec,
    x0: f64,
    t: f64,
    params: &SimParams,
) -> Result<[EnsembleEstimate; 2]> {
    require_derivative(spec)?;
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let acc = params.ensemble().run(2, |rng, out| {
        let path = run_scheme(spec, x0, dt, sample_noise(rng, steps, dt));
        let g2 = gradient_norm(&path, spec)?.powi(2);
        out[0] = g2;
        out[1] = g2 * g2;
        Ok(())
    })?;
    Ok([acc[0].estimate(params.seed), acc[1].estimate(params.seed)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevEstimate {
    /// `E[∫_{B_R} (|X_t|^p + |X'_t|^p) dx]`.
    pub total: EnsembleEstimate,
    pub function_part: EnsembleEstimate,
    pub derivative_part: EnsembleEstimate,
}

/// Common-noise simulation from every lattice point of `(−R, R)`, trapezoid in `x`.
pub fn sobolev_norm_estimate(
    spec: &DriftSpec,
    t: f64,
    r: f64,
    p: f64,
    x_points: usize,
    params: &SimParams,
) -> Result<SobolevEstimate> {
    require_derivative(spec)?;
    check_exponent(p)?;
    let (xs, ws) = lattice(r, x_points)?;
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let acc = params.ensemble().run(3, |rng, out| {
        let noise = sample_noise(rng, steps, dt);
        let (mut f, mut d) = (0.0, 0.0);
        for (&x0, &w) in xs.iter().zip(&ws) {
            let (x, xp) = march(spec, x0, dt, &noise, &[steps])?[0];
            f += w * x.abs().powf(p);
            d += w * xp.abs().powf(p);
        }
        out[0] = f + d;
        out[1] = f;
        out[2] = d;
        Ok(())
    })?;
    Ok(SobolevEstimate {
        total: acc[0].estimate(params.seed),
        function_part: acc[1].estimate(params.seed),
        derivative_part: acc[2].estimate(params.seed),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub gaps: Vec<f64>,
    /// `E‖X_{t1+gap} − X_{t1}‖^q` in `W_1^p(B_R)`, one per gap.
    pub moments: Vec<EnsembleEstimate>,
    pub slope: f64,
    pub target: f64,
    pub pass: bool,
}

/// Fits the log-log slope of the `q`-th moment of Sobolev-norm increments
/// against the gap, and checks it against `q/2`.
#[allow(clippy::too_many_arguments)]
pub fn time_continuity_check(
    spec: &DriftSpec,
    t1: f64,
    gaps: &[f64],
    q: f64,
    r: f64,
    p: f64,
    x_points: usize,
    params: &SimParams,
) -> Result<ContinuityReport> {
    require_derivative(spec)?;
    check_exponent(p)?;
    if !(q > 2.0) {
        return Err(LabError::InvalidArgument(format!(
            "q must exceed 2, got {q}"
        )));
    }
    if gaps.len() < 2 || gaps.windows(2).any(|w| w[0] >= w[1]) || gaps[0] <= 0.0 {
        return Err(LabError::InvalidArgument(
            "gaps must be positive, increasing and at least two".into(),
        ));
    }
    let (xs, ws) = lattice(r, x_points)?;
    let dt = params.dt;
    let start = step_count(t1, dt)?;
    let mut marks = vec![start];
    for &g in gaps {
        marks.push(start + step_count(g, dt)?);
    }
    let steps = *marks.last().expect("marks are non-empty");
    let acc = params.ensemble().run(gaps.len(), |rng, out| {
        let noise = sample_noise(rng, steps, dt);
        let mut sums = vec![0.0; gaps.len()];
        for (&x0, &w) in xs.iter().zip(&ws) {
            let at = march(spec, x0, dt, &noise, &marks)?;
            let (x1, d1) = at[0];
            for (s, &(x2, d2)) in sums.iter_mut().zip(&at[1..]) {
                *s += w * ((x2 - x1).abs().powf(p) + (d2 - d1).abs().powf(p));
            }
        }
        for (o, s) in out.iter_mut().zip(sums) {
            *o = s.powf(q / p);
        }
        Ok(())
    })?;
    let moments: Vec<EnsembleEstimate> = acc.iter().map(|a| a.estimate(params.seed)).collect();
    let lx: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let ly: Vec<f64> = moments.iter().map(|m| m.mean.ln()).collect();
    let slope = least_squares_slope(&lx, &ly);
    let target = q / 2.0;
    Ok(ContinuityReport {
        gaps: gaps.to_vec(),
        moments,
        slope,
        target,
        pass: (slope - target).abs() <= SLOPE_BAND * target,
    })
}
