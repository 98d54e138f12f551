//! The one-dimensional flow `dX = dW + b(X) dt` under Euler–Maruyama.

mod experiments;
mod path;

pub use experiments::{
    duhamel_shift_check, exp_moment_check, flow_fd_check, girsanov_moments, gradient_norm_moments,
    moment_bound_value, series_half_factorial, sobolev_norm_estimate, terminal_mean,
    time_continuity_check, ContinuityReport, ExpMomentReport, FlowComparison, ShiftComparison,
    SimParams, SobolevEstimate, SLOPE_BAND,
};
pub use path::{
    flow_derivative, girsanov_weight, gradient_norm, malliavin_derivative_path, run_scheme,
    sample_noise, segment_derivative, simulate_path, transition_derivatives, wiener_shift,
    wiener_shift_difference, PathSample,
};
