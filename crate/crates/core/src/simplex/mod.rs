//! Integrals over the ordered simplex `0 < s_1 < ⋯ < s_n < t`.

mod davie;
mod moments;
mod terms;
mod volumes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LabError;

pub use davie::{probe_davie, DavieProbe, DavieRow, MAX_PROBE_ORDER, TREND_TOLERANCE};
pub use moments::{
    estimate_in, moment_mc_all, verify_ibp_pointwise, IbpReport, InParams, HERMITE_NODES,
    QUADRATURE_MAX_N, TIME_NODES,
};
pub use terms::{
    estimate_term, j5_scaling, j6_bound, J5Scaling, TermParams, J5_PATTERN, J6_PATTERN,
    MAX_TERM_ORDER, MAX_TERM_SIZE,
};
pub use volumes::{
    a_alpha, a_alpha_quadrature, ball_volume, ball_volume_exact, bound_in1, davie_bound, eta,
    eta_quadrature_all, factorial, volume_majorant, wallis, wallis_exact, ETA_GRID,
    ETA_QUADRATURE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Closed,
    Quadrature,
    MomentMc,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::Quadrature => "quadrature",
            Method::MomentMc => "moment_mc",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

impl FromStr for Method {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(Method::Closed),
            "quadrature" => Ok(Method::Quadrature),
            "moment_mc" => Ok(Method::MomentMc),
            "monte_carlo" => Ok(Method::MonteCarlo),
            other => Err(LabError::InvalidArgument(format!(
                "unknown method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub method: String,
    /// Sample count for Monte Carlo, node count for quadrature.
    pub count: u64,
    pub seed: Option<u64>,
}

impl EstimateWithError {
    pub fn exact(value: f64, method: &str) -> Self {
        Self {
            value,
            std_error: 0.0,
            method: method.into(),
            count: 0,
            seed: None,
        }
    }

    pub fn deterministic(value: f64, method: &str, nodes: u64) -> Self {
        Self {
            count: nodes,
            ..Self::exact(value, method)
        }
    }

    pub fn stochastic(value: f64, std_error: f64, method: &str, samples: u64, seed: u64) -> Self {
        Self {
            value,
            std_error,
            method: method.into(),
            count: samples,
            seed: Some(seed),
        }
    }

    /// `|a − b| ≤ k·√(se_a² + se_b²)`.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.std_error.hypot(other.std_error)
    }
}
