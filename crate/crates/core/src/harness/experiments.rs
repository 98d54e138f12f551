use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng as _;

use super::{experiment_index, ExperimentConfig, HarnessError, ReportRow, EXPERIMENTS, VERSION};
use crate::algebra::closed_forms::{lambda_three_point_wick, lambda_two_point};
use crate::algebra::integrability::{log_space, rate_study};
use crate::algebra::{iterated_divergence, CameronMartinVector, TimeGrid};
use crate::drift::{get_drift, mollify, DriftSpec};
use crate::error::{LabError, Result};
use crate::heat_kernel::{representation_residual, representation_residual_f64};
use crate::mc::{substream, Rng};
use crate::scalar::Scalar;
use crate::sde::{self, SimParams};
use crate::simplex::{
    self, a_alpha_quadrature, ball_volume, estimate_in, eta_quadrature_all, factorial, j5_scaling,
    j6_bound, probe_davie, volume_majorant, wallis, InParams, Method, TermParams, J6_PATTERN,
};

/// Collects rows for one experiment run.
struct Rows<'a> {
    cfg: &'a ExperimentConfig,
    name: &'a str,
    rows: Vec<ReportRow>,
}

impl Rows<'_> {
    fn push(
        &mut self,
        metric: impl Into<String>,
        value: f64,
        std_error: f64,
        tolerance: f64,
        pass: Option<bool>,
    ) {
        self.rows.push(ReportRow {
            experiment: self.name.to_string(),
            parameters: self.cfg.flattened(),
            metric: metric.into(),
            value,
            std_error,
            tolerance,
            pass,
            seed: self.cfg.seed,
            version: VERSION.to_string(),
            note: String::new(),
        });
    }

    /// `|value − target| ≤ tolerance`.
    fn near(&mut self, metric: impl Into<String>, value: f64, target: f64, tolerance: f64) {
        self.push(
            metric,
            value,
            0.0,
            tolerance,
            Some((value - target).abs() <= tolerance),
        );
    }

    fn info(&mut self, metric: impl Into<String>, value: f64, std_error: f64) {
        self.push(metric, value, std_error, f64::NAN, None);
    }

    fn failure(&mut self, err: &LabError) {
        self.push("error", f64::NAN, f64::NAN, f64::NAN, Some(false));
        if let Some(last) = self.rows.last_mut() {
            last.note = err.to_string();
        }
    }
}

fn drift(cfg: &ExperimentConfig, default: &str) -> Result<DriftSpec> {
    match &cfg.drift {
        Some(name) => get_drift(name, &cfg.drift_params),
        None => get_drift(default, &[]),
    }
}

fn sim(cfg: &ExperimentConfig) -> SimParams {
    SimParams {
        paths: cfg.paths,
        dt: cfg.dt,
        seed: cfg.seed,
        workers: cfg.workers,
    }
}

fn in_params(cfg: &ExperimentConfig) -> InParams {
    InParams {
        paths: cfg.paths,
        dt: cfg.dt,
        seed: cfg.seed,
        workers: cfg.workers,
        ..InParams::default()
    }
}

fn term_params(cfg: &ExperimentConfig) -> TermParams {
    TermParams {
        samples: cfg.samples,
        seed: cfg.seed,
        workers: cfg.workers,
    }
}

/// Sorted uniform times in `(0, 1)`, redrawn until the grid is non-degenerate.
pub(crate) fn random_grid(rng: &mut Rng, n: usize) -> Result<TimeGrid<f64>> {
    loop {
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        match TimeGrid::from_times(times) {
            Ok(g) => return Ok(g),
            Err(LabError::DegenerateGrid(..)) | Err(LabError::InvalidGrid(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn representation(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let tol = if cfg.n <= 3 { 1e-8 } else { 1e-6 };
    let mut rng = substream(cfg.seed, 0);
    let (mut worst, mut worst_relative) = (0.0f64, 0.0f64);
    for k in 0..cfg.draws {
        let grid = random_grid(&mut rng, cfg.n)?;
        let y: Vec<f64> = (0..cfg.n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let r = representation_residual(&grid, &y)?;
        out.near(format!("residual[{k}]"), r, 0.0, tol);
        let (f, scale) = representation_residual_f64(&grid, &y)?;
        worst = worst.max(f);
        worst_relative = worst_relative.max(f / scale.max(1.0));
    }
    out.info("max_float_residual", worst, 0.0);
    out.info("max_float_residual_relative", worst_relative, 0.0);
    Ok(())
}

fn ibp(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "sin")?;
    let mut rng = substream(cfg.seed, 0);
    for k in 0..cfg.draws {
        let grid = random_grid(&mut rng, cfg.n)?;
        let r = simplex::verify_ibp_pointwise(&grid, &spec)?;
        out.near(format!("residual[{k}]"), r.residual, 0.0, 1e-6);
    }
    Ok(())
}

fn closed_forms(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let two = TimeGrid::from_times(vec![rational(1, 3), rational(3, 4)])?;
    let diff = iterated_divergence(&two)?.sub(&lambda_two_point(&two)?);
    let m = diff.polynomial().term_count() as f64;
    out.near("two_point_mismatched_terms", m, 0.0, 0.0);
    for times in [[(1, 5), (1, 2), (7, 8)], [(1, 7), (2, 7), (3, 7)]] {
        let grid = TimeGrid::from_times(times.iter().map(|&(a, b)| rational(a, b)).collect())?;
        let diff = iterated_divergence(&grid)?.sub(&lambda_three_point_wick(&grid)?);
        let m = diff.polynomial().term_count() as f64;
        out.near(
            format!("three_point_mismatched_terms{times:?}"),
            m,
            0.0,
            0.0,
        );
    }
    for n in 1..=cfg.n.min(crate::algebra::MAX_DIVERGENCE_ORDER) {
        let grid =
            TimeGrid::from_times((1..=n as i64).map(|k| rational(k, n as i64 + 1)).collect())?;
        let e = iterated_divergence(&grid)?.expectation()?;
        out.push(
            format!("expectation_n{n}"),
            e.to_f64(),
            0.0,
            0.0,
            Some(e.is_zero()),
        );
    }
    Ok(())
}

fn eta_check(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let quad = eta_quadrature_all(cfg.n, cfg.t)?;
    for (i, q) in quad.iter().enumerate() {
        let n = i + 1;
        let exact = ball_volume(n as u32) * cfg.t.powf(n as f64 / 2.0);
        out.near(
            format!("relative_error_n{n}"),
            (q - exact).abs() / exact,
            0.0,
            1e-4,
        );
    }
    for q in [1u32, 2] {
        let formula = PI.powi(q as i32) / factorial(q);
        out.near(
            format!("v{}_vs_pi_power", 2 * q),
            ball_volume(2 * q),
            formula,
            1e-12,
        );
    }
    Ok(())
}

fn prop51_chain(_cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    for n in 1..=12u32 {
        let v = ball_volume(n);
        let bound = volume_majorant(n);
        out.push(format!("volume_n{n}"), v, 0.0, bound, Some(v <= bound));
    }
    for alpha in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let q = a_alpha_quadrature(alpha)?;
        out.near(
            format!("a_alpha_{alpha}"),
            q,
            2.0 * wallis((2.0 * alpha + 1.0) as u32),
            1e-12,
        );
    }
    Ok(())
}

fn sin_amplitude(spec: &DriftSpec) -> Result<f64> {
    // I_1 for a·sin is a·2(1 − e^{−t/2}); read a off b'(0).
    if spec.name() == "sin" || spec.name().starts_with("sin(") {
        spec.eval_prime(0.0)
    } else {
        Err(LabError::InvalidArgument(format!(
            "the closed form needs a sin drift, got {}",
            spec.name()
        )))
    }
}

fn i1_closed_form(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "sin")?;
    let exact = sin_amplitude(&spec)? * 2.0 * (1.0 - (-cfg.t / 2.0).exp());
    let params = in_params(cfg);
    let q = estimate_in(&spec, 1, cfg.t, Method::Quadrature, &params)?;
    out.near("quadrature", q.value, exact, 1e-6);
    let mc = estimate_in(&spec, 1, cfg.t, Method::MomentMc, &params)?;
    let tol = 3.0 * mc.std_error;
    out.push(
        "moment_mc",
        mc.value,
        mc.std_error,
        tol,
        Some((mc.value - exact).abs() <= tol),
    );
    out.info("closed_form", exact, 0.0);
    Ok(())
}

fn i2_bound(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    for (d, name) in cfg.drifts.iter().enumerate() {
        let spec = get_drift(name, &[])?;
        let params = InParams {
            seed: cfg.seed.wrapping_add(d as u64),
            ..in_params(cfg)
        };
        let e = estimate_in(&spec, 2, cfg.t, Method::MomentMc, &params)?;
        let bound = 8.0 * spec.bound * spec.bound * cfg.t;
        let pass = e.value.abs() - 3.0 * e.std_error <= bound;
        out.push(
            format!("i2[{name}]"),
            e.value,
            e.std_error,
            bound,
            Some(pass),
        );
    }
    Ok(())
}

fn j_terms(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "sin")?;
    let params = term_params(cfg);
    let j6 = simplex::estimate_term(&J6_PATTERN, &spec, cfg.t, &params)?;
    let bound = j6_bound(cfg.t, spec.bound);
    out.push(
        "j6",
        j6.value,
        j6.std_error,
        bound,
        Some(j6.value.abs() + 3.0 * j6.std_error <= bound),
    );
    let scaling = j5_scaling(&spec, &cfg.times, &params)?;
    for (t, (r, se)) in scaling.times.iter().zip(&scaling.ratios) {
        out.info(format!("j5_over_t2[t={t}]"), *r, *se);
    }
    out.push(
        "j5_ratio_bounded",
        scaling.bounded as u8 as f64,
        0.0,
        3.0,
        Some(scaling.bounded),
    );
    Ok(())
}

fn davie(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let drifts = cfg
        .drifts
        .iter()
        .map(|d| get_drift(d, &[]))
        .collect::<Result<Vec<_>>>()?;
    let probe = probe_davie(&drifts, cfg.n, cfg.t, &in_params(cfg))?;
    for row in &probe.rows {
        out.info(
            format!("m_hat[{},n={}]", row.drift, row.n),
            row.m_hat,
            row.m_hat_se,
        );
    }
    for (name, slope) in &probe.slopes {
        let s = slope.unwrap_or(f64::NAN);
        let pass = slope.is_none_or(|s| s <= simplex::TREND_TOLERANCE);
        out.push(
            format!("trend[{name}]"),
            s,
            0.0,
            simplex::TREND_TOLERANCE,
            Some(pass),
        );
    }
    for n in 1..=cfg.n as u32 {
        let bound = simplex::davie_bound(n, cfg.t, 1.0, cfg.m)?;
        out.info(format!("configured_bound[M={},n={n}]", cfg.m), bound, 0.0);
    }
    Ok(())
}

fn girsanov(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "cos")?;
    let [n, xn] = sde::girsanov_moments(&spec, cfg.x0, cfg.t, &sim(cfg))?;
    let target = cfg.x0 * cfg.x0 + cfg.t;
    out.push(
        "mean_weight",
        n.mean,
        n.std_error,
        3.0 * n.std_error,
        Some((n.mean - 1.0).abs() <= 3.0 * n.std_error),
    );
    out.push(
        "weighted_second_moment",
        xn.mean,
        xn.std_error,
        3.0 * xn.std_error,
        Some((xn.mean - target).abs() <= 3.0 * xn.std_error),
    );
    Ok(())
}

fn exp_moment(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "sin")?;
    let r = sde::exp_moment_check(&spec, cfg.x0, cfg.p, cfg.t, cfg.horizon, &sim(cfg))?;
    out.info("lhs", r.lhs.mean, r.lhs.std_error);
    out.push(
        "rhs",
        r.rhs,
        r.rhs_se,
        3.0 * r.lhs.std_error.hypot(r.rhs_se),
        Some(r.pass),
    );
    let m = sde::moment_bound_value(cfg.p, cfg.t, cfg.horizon, spec.bound, cfg.m)?;
    out.info(format!("moment_bound[M={}]", cfg.m), m, 0.0);
    Ok(())
}

fn series(_cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    for x in [0.5, 1.0, 2.0] {
        let (partial, closed) = sde::series_half_factorial(x, 120)?;
        out.near(format!("partial_sum[x={x}]"), partial, closed, 1e-10);
    }
    Ok(())
}

fn flow(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let linear = get_drift("linear_test", &[])?;
    let path = sde::simulate_path(&linear, cfg.x0, cfg.t, cfg.dt, cfg.seed, 0)?;
    let v = sde::flow_derivative(&path, &linear)?;
    out.near("linear_flow_derivative", v, (-cfg.t).exp(), 1e-4);
    let spec = drift(cfg, "sin")?;
    let starts = [-1.0, -0.3, 0.4, 1.2, 2.0];
    for c in sde::flow_fd_check(&spec, &starts, cfg.t, 1e-4, &sim(cfg))? {
        out.near(
            format!("fd_relative_error[x0={}]", c.x0),
            c.relative_error(),
            0.0,
            1e-3,
        );
    }
    Ok(())
}

fn duhamel(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let linear = get_drift("linear_test", &[])?;
    let path = sde::simulate_path(&linear, cfg.x0, cfg.t, cfg.dt, cfg.seed, 0)?;
    let h = CameronMartinVector::new(vec![0.0, cfg.t], vec![1.0])?;
    let d = sde::malliavin_derivative_path(&path, &linear, &h)?;
    out.near("linear_duhamel", d, 1.0 - (-cfg.t).exp(), 1e-3);
    let spec = drift(cfg, "sin")?;
    let checks = sde::duhamel_shift_check(&spec, cfg.t, 1e-3, cfg.draws, &sim(cfg))?;
    let worst = checks
        .iter()
        .map(|c| c.relative_error())
        .fold(0.0, f64::max);
    out.near("max_shift_relative_error", worst, 0.0, 1e-2);
    Ok(())
}

/// Relative slack allowed between moments at `dt` and `10·dt`, on top of
/// three combined standard errors.
const DT_STABILITY: f64 = 0.02;

fn gradient(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let zero = get_drift("zero", &[])?;
    let p = sde::simulate_path(&zero, cfg.x0, cfg.t, cfg.dt, cfg.seed, 0)?;
    out.near(
        "zero_drift",
        sde::gradient_norm(&p, &zero)?,
        cfg.t.sqrt(),
        1e-4,
    );
    let linear = get_drift("linear_test", &[])?;
    let p = sde::simulate_path(&linear, cfg.x0, cfg.t, cfg.dt, cfg.seed, 0)?;
    let exact = ((1.0 - (-2.0 * cfg.t).exp()) / 2.0).sqrt();
    out.near(
        "linear_drift",
        sde::gradient_norm(&p, &linear)?,
        exact,
        1e-4,
    );
    let spec = drift(cfg, "sin")?;
    let fine = sde::gradient_norm_moments(&spec, cfg.x0, cfg.t, &sim(cfg))?;
    let coarse_params = SimParams {
        dt: 10.0 * cfg.dt,
        ..sim(cfg)
    };
    let coarse = sde::gradient_norm_moments(&spec, cfg.x0, cfg.t, &coarse_params)?;
    for (k, (f, c)) in fine.iter().zip(&coarse).enumerate() {
        let p = 2 * (k + 1);
        let tol = 3.0 * f.std_error.hypot(c.std_error) + DT_STABILITY * f.mean.abs();
        let ok = f.mean.is_finite() && (f.mean - c.mean).abs() <= tol;
        out.info(
            format!("moment_p{p}[dt={}]", coarse_params.dt),
            c.mean,
            c.std_error,
        );
        out.push(
            format!("moment_p{p}[dt={}]", cfg.dt),
            f.mean,
            f.std_error,
            tol,
            Some(ok),
        );
    }
    Ok(())
}

/// Largest `dt·n²` used for mollification level `n`.
pub const LEVEL_RESOLUTION: f64 = 0.26;
pub const UNIFORMITY_RATIO: f64 = 1.5;

/// Step for level `n`: at most `cfg.dt`, at most `LEVEL_RESOLUTION/n²`, and
/// dividing `t`.
pub fn level_step(t: f64, dt: f64, n: u32) -> f64 {
    let cap = dt.min(LEVEL_RESOLUTION / (n as f64 * n as f64));
    t / (t / cap).ceil()
}

fn sobolev(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let base = drift(cfg, "sign")?;
    let first = *cfg
        .levels
        .first()
        .ok_or_else(|| LabError::InvalidArgument("no levels".into()))?;
    let mut means = Vec::new();
    for &n in &cfg.levels {
        let spec = mollify(&base, n)?;
        // Finer levels have heavier tails; scale paths by √(n/n_0).
        let scale = (n as f64 / first as f64).max(1.0).sqrt();
        let params = SimParams {
            paths: (cfg.paths as f64 * scale).round() as usize,
            dt: level_step(cfg.t, cfg.dt, n),
            ..sim(cfg)
        };
        let e = sde::sobolev_norm_estimate(&spec, cfg.t, cfg.r, cfg.p, cfg.x_points, &params)?;
        out.info(
            format!("norm[n={n},dt={}]", params.dt),
            e.total.mean,
            e.total.std_error,
        );
        means.push(e.total.mean);
    }
    let max = means.iter().cloned().fold(f64::MIN, f64::max);
    let min = means.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = max / min;
    out.push(
        "max_over_min",
        ratio,
        0.0,
        UNIFORMITY_RATIO,
        Some(ratio < UNIFORMITY_RATIO),
    );
    Ok(())
}

fn continuity(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let spec = drift(cfg, "sin")?;
    let r = sde::time_continuity_check(
        &spec,
        cfg.t,
        &cfg.gaps,
        cfg.q,
        cfg.r,
        cfg.p,
        cfg.x_points,
        &sim(cfg),
    )?;
    for (g, m) in r.gaps.iter().zip(&r.moments) {
        out.info(format!("moment[gap={g}]"), m.mean, m.std_error);
    }
    let tol = sde::SLOPE_BAND * r.target;
    out.push("slope", r.slope, 0.0, tol, Some(r.pass));
    Ok(())
}

fn lambda_rate(cfg: &ExperimentConfig, out: &mut Rows) -> Result<()> {
    let study = rate_study(cfg.t, &log_space(1e-3, 1e-1, 9))?;
    out.near("slope", study.slope, -1.0, 0.05);
    let rel = (study.scaled_limit - study.limit_constant).abs() / study.limit_constant;
    out.near("scaled_limit_relative_error", rel, 0.0, 0.01);
    out.info("limit_constant", study.limit_constant, 0.0);
    Ok(())
}

type Runner = fn(&ExperimentConfig, &mut Rows) -> Result<()>;

const RUNNERS: [Runner; 18] = [
    representation,
    ibp,
    closed_forms,
    eta_check,
    prop51_chain,
    i1_closed_form,
    i2_bound,
    j_terms,
    davie,
    girsanov,
    exp_moment,
    series,
    flow,
    duhamel,
    gradient,
    sobolev,
    continuity,
    lambda_rate,
];

/// Runs the experiment named in `cfg`. Module errors become a failed row;
/// only configuration problems are returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<Vec<ReportRow>, HarnessError> {
    cfg.validate()?;
    let name = cfg
        .experiment
        .as_deref()
        .ok_or(HarnessError::MissingExperiment)?;
    let idx = experiment_index(name)?;
    let mut rows = Rows {
        cfg,
        name: EXPERIMENTS[idx],
        rows: Vec::new(),
    };
    if let Err(e) = RUNNERS[idx](cfg, &mut rows) {
        rows.failure(&e);
    }
    Ok(rows.rows)
}
