//! Empirical constants `M̂_n = (|I_n(t)|·⌊n/2⌋!)^{1/n} / (‖b‖ √t)`.

use super::moments::{moment_mc_all, InParams};
use super::volumes::factorial;
use super::EstimateWithError;
use crate::algebra::integrability::least_squares_slope;
use crate::drift::DriftSpec;
use crate::error::{LabError, Result};

pub const MAX_PROBE_ORDER: usize = 6;
/// Largest acceptable least-squares slope of `M̂_n` against `n`.
pub const TREND_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct DavieRow {
    pub drift: String,
    pub n: usize,
    pub i_n: EstimateWithError,
    pub m_hat: f64,
    pub m_hat_se: f64,
    /// `false` when `|I_n|` is within three standard errors of zero; such
    /// rows carry no information about growth and are left out of the fit.
    pub resolved: bool,
}

#[derive(Debug, Clone)]
pub struct DavieProbe {
    pub rows: Vec<DavieRow>,
    /// Per drift: fitted slope of `M̂_n` over resolved rows, `None` when
    /// fewer than two rows are resolved.
    pub slopes: Vec<(String, Option<f64>)>,
    pub pass: bool,
}

impl DavieProbe {
    /// Largest `M̂_n` in the table.
    pub fn m_max(&self) -> f64 {
        self.rows.iter().map(|r| r.m_hat).fold(0.0, f64::max)
    }
}

pub fn probe_davie(
    drifts: &[DriftSpec],
    n_max: usize,
    t: f64,
    params: &InParams,
) -> Result<DavieProbe> {
    if n_max == 0 || n_max > MAX_PROBE_ORDER {
        return Err(LabError::CapExceeded {
            what: "probe order",
            value: n_max,
            cap: MAX_PROBE_ORDER,
        });
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut pass = true;
    for (d, spec) in drifts.iter().enumerate() {
        let p = InParams {
            seed: params.seed.wrapping_add(d as u64),
            ..*params
        };
        let estimates = moment_mc_all(spec, n_max, t, &p)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, e) in estimates.into_iter().enumerate() {
            let n = i + 1;
            let scale = spec.bound * t.sqrt();
            let (m_hat, m_hat_se) = if e.value == 0.0 || scale == 0.0 {
                (0.0, 0.0)
            } else {
                let m = (e.value.abs() * factorial(n as u32 / 2)).powf(1.0 / n as f64) / scale;
                (m, m * e.std_error / (n as f64 * e.value.abs()))
            };
            let resolved = e.value.abs() > 3.0 * e.std_error;
            if resolved {
                xs.push(n as f64);
                ys.push(m_hat);
            }
            rows.push(DavieRow {
                drift: spec.name().to_string(),
                n,
                i_n: e,
                m_hat,
                m_hat_se,
                resolved,
            });
        }
        let slope = (xs.len() >= 2).then(|| least_squares_slope(&xs, &ys));
        if slope.is_some_and(|s| s > TREND_TOLERANCE) {
            pass = false;
        }
        slopes.push((spec.name().to_string(), slope));
    }
    Ok(DavieProbe { rows, slopes, pass })
}
