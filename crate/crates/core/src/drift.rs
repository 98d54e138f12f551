//! Named bounded drifts and their mollifications `b_n = b ∗ φ_n`.

use std::fmt;
use std::sync::{Arc, LazyLock};

use crate::error::{LabError, Result};
use crate::quadrature::{adaptive, legendre_rule};

pub const REGISTRY: [&str; 7] = [
    "zero",
    "const",
    "sin",
    "cos",
    "scaled_tanh",
    "sign",
    "linear_test",
];

/// Nodes per integration piece for the mollifier convolution.
pub const MOLLIFIER_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Zero,
    Const(f64),
    Sin(f64),
    Cos(f64),
    ScaledTanh { amp: f64, rate: f64 },
    Sign,
    Linear(f64),
    Mollified { base: Arc<DriftSpec>, level: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    name: String,
    kind: Kind,
    pub bound: f64,
    pub has_derivative: bool,
    pub smooth: bool,
    pub within_hypotheses: bool,
}

impl fmt::Display for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn param(name: &str, params: &[f64], i: usize, default: f64) -> Result<f64> {
    let v = params.get(i).copied().unwrap_or(default);
    if !v.is_finite() {
        return Err(LabError::InvalidDriftParams {
            name: name.into(),
            reason: format!("parameter {i} is not finite"),
        });
    }
    Ok(v)
}

fn max_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() > n {
        return Err(LabError::InvalidDriftParams {
            name: name.into(),
            reason: format!("takes at most {n} parameters, got {}", params.len()),
        });
    }
    Ok(())
}

/// Look up a registry drift. Missing parameters take their defaults:
/// `const(c=1)`, `sin(amp=1)`, `cos(amp=1)`, `scaled_tanh(amp=1, rate=1)`,
/// `linear_test(c=−1)`.
pub fn get_drift(name: &str, params: &[f64]) -> Result<DriftSpec> {
    let smooth = |kind, bound| DriftSpec {
        name: String::new(),
        kind,
        bound,
        has_derivative: true,
        smooth: true,
        within_hypotheses: true,
    };
    let (mut spec, arity) = match name {
        "zero" => (smooth(Kind::Zero, 0.0), 0),
        "const" => {
            let c = param(name, params, 0, 1.0)?;
            (smooth(Kind::Const(c), c.abs()), 1)
        }
        "sin" => {
            let a = param(name, params, 0, 1.0)?;
            (smooth(Kind::Sin(a), a.abs()), 1)
        }
        "cos" => {
            let a = param(name, params, 0, 1.0)?;
            (smooth(Kind::Cos(a), a.abs()), 1)
        }
        "scaled_tanh" => {
            let amp = param(name, params, 0, 1.0)?;
            let rate = param(name, params, 1, 1.0)?;
            (smooth(Kind::ScaledTanh { amp, rate }, amp.abs()), 2)
        }
        "sign" => (
            DriftSpec {
                name: String::new(),
                kind: Kind::Sign,
                bound: 1.0,
                has_derivative: false,
                smooth: false,
                within_hypotheses: true,
            },
            0,
        ),
        "linear_test" => {
            let c = param(name, params, 0, -1.0)?;
            let mut s = smooth(Kind::Linear(c), if c == 0.0 { 0.0 } else { f64::INFINITY });
            s.within_hypotheses = false;
            (s, 1)
        }
        other => return Err(LabError::UnknownDrift(other.into())),
    };
    max_params(name, params, arity)?;
    spec.name = if params.is_empty() {
        name.to_string()
    } else {
        let ps: Vec<String> = params.iter().map(|p| p.to_string()).collect();
        format!("{name}({})", ps.join(","))
    };
    Ok(spec)
}

impl DriftSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Jump locations of a piecewise-constant drift, `None` otherwise.
    fn jumps(&self) -> Option<Vec<f64>> {
        match self.kind {
            Kind::Zero | Kind::Const(_) => Some(vec![]),
            Kind::Sign => Some(vec![0.0]),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Const(c) => *c,
            Kind::Sin(a) => a * x.sin(),
            Kind::Cos(a) => a * x.cos(),
            Kind::ScaledTanh { amp, rate } => amp * (rate * x).tanh(),
            Kind::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Kind::Linear(c) => c * x,
            Kind::Mollified { base, level } => convolve(base, *level, x, false),
        }
    }

    pub fn eval_prime(&self, x: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Zero | Kind::Const(_) => 0.0,
            Kind::Sin(a) => a * x.cos(),
            Kind::Cos(a) => -a * x.sin(),
            Kind::ScaledTanh { amp, rate } => {
                let c = (rate * x).cosh();
                amp * rate / (c * c)
            }
            Kind::Sign => return Err(LabError::DerivativeUnavailable(self.name.clone())),
            Kind::Linear(c) => *c,
            Kind::Mollified { base, level } => convolve(base, *level, x, true),
        })
    }
}

pub fn eval_b(spec: &DriftSpec, x: f64) -> f64 {
    spec.eval(x)
}

pub fn eval_bprime(spec: &DriftSpec, x: f64) -> Result<f64> {
    spec.eval_prime(x)
}

/// `b_n = b ∗ φ_n` with `φ_n(x) = n φ(n x)`.
pub fn mollify(spec: &DriftSpec, n: u32) -> Result<DriftSpec> {
    if n == 0 {
        return Err(LabError::InvalidArgument(
            "mollification level must be ≥ 1".into(),
        ));
    }
    Ok(DriftSpec {
        name: format!("mollify({},{n})", spec.name),
        kind: Kind::Mollified {
            base: Arc::new(spec.clone()),
            level: n,
        },
        bound: spec.bound,
        has_derivative: true,
        smooth: true,
        within_hypotheses: spec.within_hypotheses,
    })
}

fn bump_raw(v: f64) -> f64 {
    if v.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - v * v)).exp()
    }
}

static BUMP_NORMALIZER: LazyLock<f64> =
    LazyLock::new(|| 1.0 / adaptive(bump_raw, -1.0, 1.0, 1e-16).expect("bump integral converges"));

static RULE: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| legendre_rule(MOLLIFIER_NODES));

/// The unit-mass bump `φ` on `(−1, 1)`.
pub fn bump(v: f64) -> f64 {
    *BUMP_NORMALIZER * bump_raw(v)
}

pub fn bump_prime(v: f64) -> f64 {
    if v.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - v * v;
    bump(v) * (-2.0 * v / (w * w))
}

const CDF_CELLS: usize = 8192;

/// `Φ(v) = ∫_{−1}^v φ` at the cell edges of a uniform grid on `[−1, 1]`.
static BUMP_CDF: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let h = 2.0 / CDF_CELLS as f64;
    let rule = legendre_rule(16);
    let mut out = Vec::with_capacity(CDF_CELLS + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..CDF_CELLS {
        let mid = -1.0 + h * (i as f64 + 0.5);
        acc += 0.5
            * h
            * rule
                .iter()
                .map(|&(x, w)| w * bump(mid + 0.5 * h * x))
                .sum::<f64>();
        out.push(acc);
    }
    out
});

/// `Φ(v)` by cubic Hermite interpolation of the tabulated values, with
/// `Φ' = φ` at the cell edges.
pub fn bump_cdf(v: f64) -> f64 {
    if v <= -1.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return 1.0;
    }
    let h = 2.0 / CDF_CELLS as f64;
    let p = (v + 1.0) / h;
    let i = (p.floor() as usize).min(CDF_CELLS - 1);
    let s = p - i as f64;
    let (a, b) = (-1.0 + h * i as f64, -1.0 + h * (i + 1) as f64);
    let table = &*BUMP_CDF;
    let (f0, f1) = (table[i], table[i + 1]);
    let (d0, d1) = (h * bump(a), h * bump(b));
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0
        + (s3 - 2.0 * s2 + s) * d0
        + (-2.0 * s3 + 3.0 * s2) * f1
        + (s3 - s2) * d1
}

/// `b_n` and `b_n'` for the sign function: `2Φ(nx) − 1` and `2nφ(nx)`.
fn sign_mollified(n: u32, x: f64, derivative: bool) -> f64 {
    let nf = n as f64;
    if derivative {
        2.0 * nf * bump(nf * x)
    } else {
        2.0 * bump_cdf(nf * x) - 1.0
    }
}

fn convolve(base: &DriftSpec, n: u32, x: f64, derivative: bool) -> f64 {
    if base.kind == Kind::Sign {
        return sign_mollified(n, x, derivative);
    }
    convolve_quadrature(base, n, x, derivative)
}

/// `∫ φ(v) b(x − v/n) dv`, or `n ∫ φ'(v) b(x − v/n) dv` for the derivative.
fn convolve_quadrature(base: &DriftSpec, n: u32, x: f64, derivative: bool) -> f64 {
    let nf = n as f64;
    let mut cuts = vec![-1.0];
    if let Some(jumps) = base.jumps() {
        let mut inside: Vec<f64> = jumps
            .iter()
            .map(|j| nf * (x - j))
            .filter(|v| v.abs() < 1.0)
            .collect();
        if inside.is_empty() {
            // Locally constant on the support.
            return if derivative { 0.0 } else { base.eval(x) };
        }
        inside.sort_by(f64::total_cmp);
        cuts.extend(inside);
    }
    cuts.push(1.0);
    let kernel: fn(f64) -> f64 = if derivative { bump_prime } else { bump };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        // Pair nodes symmetric about the midpoint before summing.
        let rule = &*RULE;
        let m = rule.len();
        let mut piece = 0.0;
        for i in 0..m / 2 {
            let (xi, wi) = rule[i];
            let lo = mid + half * xi;
            let hi = mid - half * xi;
            piece +=
                wi * (kernel(lo) * base.eval(x - lo / nf) + kernel(hi) * base.eval(x - hi / nf));
        }
        total += half * piece;
    }
    if derivative {
        nf * total
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn registry_examples() {
        let z = get_drift("zero", &[]).unwrap();
        assert_eq!(z.bound, 0.0);
        assert!(z.smooth);
        let s = get_drift("sin", &[]).unwrap();
        assert_eq!(s.bound, 1.0);
        assert_eq!(eval_b(&s, FRAC_PI_2), 1.0);
        assert_eq!(eval_bprime(&s, 0.0).unwrap(), 1.0);
        let sg = get_drift("sign", &[]).unwrap();
        assert_eq!(sg.bound, 1.0);
        assert!(!sg.has_derivative && !sg.smooth);
        assert!(matches!(
            eval_bprime(&sg, 1.0),
            Err(LabError::DerivativeUnavailable(_))
        ));
        let l = get_drift("linear_test", &[]).unwrap();
        assert!(!l.within_hypotheses);
        assert_eq!(l.eval_prime(3.0).unwrap(), -1.0);
        assert!(matches!(
            get_drift("tan", &[]),
            Err(LabError::UnknownDrift(_))
        ));
        assert!(get_drift("sin", &[1.0, 2.0]).is_err());
        assert_eq!(
            get_drift("scaled_tanh", &[2.0, 3.0]).unwrap().name(),
            "scaled_tanh(2,3)"
        );
    }

    #[test]
    fn bump_has_unit_mass() {
        let rule = legendre_rule(200);
        let m: f64 = rule.iter().map(|&(x, w)| w * bump(x)).sum();
        assert!((m - 1.0).abs() < 1e-10);
        assert_eq!(bump(1.0), 0.0);
    }

    #[test]
    fn mollified_sign() {
        let sg = get_drift("sign", &[]).unwrap();
        let m = mollify(&sg, 8).unwrap();
        assert_eq!(m.name(), "mollify(sign,8)");
        assert!(m.eval(0.0).abs() < 1e-15);
        assert_eq!(m.eval_prime(1.0).unwrap(), 0.0);
        assert_eq!(m.eval(1.0), 1.0);
        // b_n' = 2 φ_n for the sign function.
        for x in [0.01, -0.05, 0.1] {
            assert!((m.eval_prime(x).unwrap() - 16.0 * bump(8.0 * x)).abs() < 1e-8);
        }
    }

    #[test]
    fn sign_closed_form_matches_quadrature() {
        let sg = get_drift("sign", &[]).unwrap();
        assert!((bump_cdf(0.0) - 0.5).abs() < 1e-14);
        for n in [1, 4, 64] {
            for i in 0..=80 {
                let x = -1.1 + 2.2 * i as f64 / 80.0;
                let fast = sign_mollified(n, x, false);
                let slow = convolve_quadrature(&sg, n, x, false);
                assert!(
                    (fast - slow).abs() < 1e-12,
                    "n = {n}, x = {x}, {fast} {slow}"
                );
                let fast = sign_mollified(n, x, true);
                let slow = convolve_quadrature(&sg, n, x, true);
                assert!((fast - slow).abs() < 1e-8 * n as f64, "n = {n}, x = {x}");
            }
        }
    }

    #[test]
    fn mollified_sin_converges() {
        let s = get_drift("sin", &[]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2, 8, 32] {
            let m = mollify(&s, n).unwrap();
            let err = (0..=200)
                .map(|i| -5.0 + 0.05 * i as f64)
                .map(|x| (m.eval(x) - x.sin()).abs())
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
    }
}
