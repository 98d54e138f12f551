//! `I_n(t) = ∫_{Δ_n} E[b'(W_{s_1})⋯b'(W_{s_n})] ds`.

use rand_distr::{Distribution, StandardNormal};

use super::volumes::factorial;
use super::{EstimateWithError, Method};
use crate::algebra::gaussian::iterated_divergence;
use crate::algebra::grid::TimeGrid;
use crate::drift::DriftSpec;
use crate::error::{LabError, Result};
use crate::mc::{step_count, Ensemble};
use crate::quadrature::{legendre_rule, NormalRule};

pub const HERMITE_NODES: usize = 40;
/// Gauss–Legendre nodes per collapsed simplex coordinate.
pub const TIME_NODES: usize = 12;
pub const QUADRATURE_MAX_N: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct InParams {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub hermite_nodes: usize,
    pub time_nodes: usize,
}

impl Default for InParams {
    fn default() -> Self {
        Self {
            paths: 100_000,
            dt: 1e-3,
            seed: 0,
            workers: None,
            hermite_nodes: HERMITE_NODES,
            time_nodes: TIME_NODES,
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

/// `E[f(W_{s_1}, …, W_{s_n})]` by a tensor Gauss–Hermite rule over the
/// independent increments.
fn gauss_tensor(
    times: &[f64],
    rule: &NormalRule,
    leaf: &mut dyn FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    fn rec(
        level: usize,
        times: &[f64],
        rule: &NormalRule,
        w: &mut Vec<f64>,
        leaf: &mut dyn FnMut(&[f64]) -> Result<f64>,
    ) -> Result<f64> {
        if level == times.len() {
            return leaf(w);
        }
        let prev_t = if level == 0 { 0.0 } else { times[level - 1] };
        let prev_w = if level == 0 { 0.0 } else { w[level - 1] };
        let sd = (times[level] - prev_t).sqrt();
        let mut acc = 0.0;
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            w.push(prev_w + sd * x);
            acc += wt * rec(level + 1, times, rule, w, leaf)?;
            w.pop();
        }
        Ok(acc)
    }
    rec(0, times, rule, &mut Vec::with_capacity(times.len()), leaf)
}

/// `E[Π b'(W_{s_i})]` with the product accumulated level by level.
fn derivative_product_expectation(
    spec: &DriftSpec,
    times: &[f64],
    rule: &NormalRule,
) -> Result<f64> {
    fn rec(
        spec: &DriftSpec,
        level: usize,
        times: &[f64],
        rule: &NormalRule,
        prev_t: f64,
        prev_w: f64,
    ) -> Result<f64> {
        if level == times.len() {
            return Ok(1.0);
        }
        let sd = (times[level] - prev_t).sqrt();
        let mut acc = 0.0;
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let w = prev_w + sd * x;
            let f = spec.eval_prime(w)?;
            if f != 0.0 {
                acc += wt * f * rec(spec, level + 1, times, rule, times[level], w)?;
            }
        }
        Ok(acc)
    }
    rec(spec, 0, times, rule, 0.0, 0.0)
}

/// `∫_{Δ_n(t)} g(s) ds` with the collapsed coordinates
/// `s_n = t u_n`, `s_k = s_{k+1} u_k`.
fn simplex_quadrature(
    n: usize,
    t: f64,
    nodes: usize,
    g: &mut dyn FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let rule: Vec<(f64, f64)> = legendre_rule(nodes)
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    fn rec(
        k: usize,
        upper: f64,
        weight: f64,
        rule: &[(f64, f64)],
        s: &mut [f64],
        g: &mut dyn FnMut(&[f64]) -> Result<f64>,
    ) -> Result<f64> {
        if k == 0 {
            return Ok(weight * g(s)?);
        }
        let mut acc = 0.0;
        for &(u, w) in rule {
            s[k - 1] = upper * u;
            acc += rec(k - 1, upper * u, weight * w * upper, rule, s, g)?;
        }
        Ok(acc)
    }
    let mut s = vec![0.0; n];
    rec(n, t, 1.0, &rule, &mut s, g)
}

/// `(1/k!)·E[(∫_0^t b'(W_s) ds)^k]` for `k = 1..=n_max` from one ensemble,
/// with the time integral by the trapezoid rule on the path grid.
pub fn moment_mc_all(
    spec: &DriftSpec,
    n_max: usize,
    t: f64,
    params: &InParams,
) -> Result<Vec<EstimateWithError>> {
    require_derivative(spec)?;
    let steps = step_count(t, params.dt)?;
    let dt = params.dt;
    let sd = dt.sqrt();
    let mut ensemble = Ensemble::new(params.paths, params.seed);
    ensemble.workers = params.workers;
    let facts: Vec<f64> = (1..=n_max as u32).map(factorial).collect();
    let acc = ensemble.run(n_max, |rng, out| {
        let mut w = 0.0;
        let mut integral = 0.5 * spec.eval_prime(0.0)?;
        for k in 1..=steps {
            let g: f64 = StandardNormal.sample(rng);
            w += sd * g;
            let f = spec.eval_prime(w)?;
            integral += if k == steps { 0.5 * f } else { f };
        }
        integral *= dt;
        let mut power = 1.0;
        for (slot, f) in out.iter_mut().zip(&facts) {
            power *= integral;
            *slot = power / f;
        }
        Ok(())
    })?;
    Ok(acc
        .iter()
        .map(|a| {
            EstimateWithError::stochastic(
                a.mean(),
                a.std_error(),
                "moment_mc",
                a.count(),
                params.seed,
            )
        })
        .collect())
}

pub fn estimate_in(
    spec: &DriftSpec,
    n: usize,
    t: f64,
    method: Method,
    params: &InParams,
) -> Result<EstimateWithError> {
    require_derivative(spec)?;
    if n == 0 {
        return Ok(EstimateWithError::exact(1.0, "closed"));
    }
    match method {
        Method::Quadrature => {
            if n > QUADRATURE_MAX_N {
                return Err(LabError::MethodMismatch {
                    method: method.to_string(),
                    reason: format!("quadrature is limited to n ≤ {QUADRATURE_MAX_N}, got {n}"),
                });
            }
            if !(t > 0.0) {
                return Err(LabError::NonPositiveTime(t));
            }
            let rule = NormalRule::new(params.hermite_nodes);
            let value = simplex_quadrature(n, t, params.time_nodes, &mut |s| {
                derivative_product_expectation(spec, s, &rule)
            })?;
            let nodes = (params.time_nodes * params.hermite_nodes).pow(n as u32) as u64;
            Ok(EstimateWithError::deterministic(value, "quadrature", nodes))
        }
        Method::MomentMc => Ok(moment_mc_all(spec, n, t, params)?.pop().expect("n ≥ 1")),
        other => Err(LabError::MethodMismatch {
            method: other.to_string(),
            reason: "I_n supports quadrature and moment_mc".into(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpReport {
    /// `E[Π b'(W_{s_i})]`.
    pub lhs: f64,
    /// `E[Π b(W_{s_i}) · Λ]`.
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of `E[Π b'(W_{s_i})] = E[Π b(W_{s_i}) Λ]` by the same
/// Gauss–Hermite tensor rule.
pub fn verify_ibp_pointwise(grid: &TimeGrid<f64>, spec: &DriftSpec) -> Result<IbpReport> {
    require_derivative(spec)?;
    if !spec.smooth {
        return Err(LabError::InvalidArgument(format!(
            "{} is not smooth",
            spec.name()
        )));
    }
    let n = grid.len();
    if n > QUADRATURE_MAX_N {
        return Err(LabError::CapExceeded {
            what: "pointwise integration-by-parts size",
            value: n,
            cap: QUADRATURE_MAX_N,
        });
    }
    let lambda = iterated_divergence(grid)?;
    let terms: Vec<(f64, Vec<i32>)> = lambda
        .polynomial()
        .terms()
        .map(|(e, c)| (*c, e.0.iter().map(|&p| p as i32).collect()))
        .collect();
    let rule = NormalRule::new(HERMITE_NODES);
    let times = grid.times();
    let lhs = derivative_product_expectation(spec, times, &rule)?;
    let rhs = gauss_tensor(times, &rule, &mut |w| {
        let lam: f64 = terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(w).map(|(&p, &x)| x.powi(p)).product::<f64>())
            .sum();
        Ok(w.iter().map(|&x| spec.eval(x)).product::<f64>() * lam)
    })?;
    Ok(IbpReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
