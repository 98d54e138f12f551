use malliavin_lab::algebra::{
    build_covariance, build_h, divergence_of, dual_basis, invert_covariance, CameronMartinVector,
    GaussianPolynomial, Polynomial, TimeGrid,
};
use malliavin_lab::drift::{get_drift, REGISTRY};
use malliavin_lab::heat_kernel::{
    kernel, kernel_derivative, kernel_ratio, log_product_q, mixed_partial_q, product_q,
};
use malliavin_lab::mc::{substream, Ensemble};
use malliavin_lab::quadrature::NormalRule;
use malliavin_lab::scalar::rational;
use malliavin_lab::sde::{girsanov_moments, moment_bound_value, SimParams};
use nalgebra::DMatrix;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

/// Strictly increasing times in (0, 1] with gaps of at least `1e-3`.
fn arb_times(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1.0, 1..=max).prop_map(|gaps| {
        let total: f64 = gaps.iter().sum::<f64>() * 1.05;
        let mut acc = 0.0;
        gaps.iter()
            .map(|g| {
                acc += g / total;
                acc
            })
            .collect()
    })
}

/// Strictly increasing rational times `k_i / 64`.
fn arb_rational_times(max: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::btree_set(1i64..64, 1..=max)
        .prop_map(|set| set.into_iter().map(|k| rational(k, 64)).collect())
}

fn dense_inverse_check(times: &[f64]) -> f64 {
    let grid = TimeGrid::from_times(times.to_vec()).unwrap();
    let n = grid.len();
    let inv = invert_covariance(&grid).unwrap();
    let cov = DMatrix::from_fn(n, n, |i, j| times[i.min(j)]);
    let dense = cov.clone().try_inverse().unwrap();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let scale = dense[(i, i)].abs().max(1.0);
            worst = worst.max((inv.get(i, j) - dense[(i, j)]).abs() / scale);
        }
    }
    worst
}

#[test]
fn five_hundred_point_inverse_matches_dense_solve() {
    let times: Vec<f64> = (1..=500).map(|k| k as f64 / 500.0).collect();
    assert!(dense_inverse_check(&times) < 1e-9);
    let mut rng = substream(3, 0);
    let mut times: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let grid = TimeGrid::from_times(times.clone()).unwrap();
    let inv = invert_covariance(&grid).unwrap();
    let cov = build_covariance(&grid);
    let a = DMatrix::from_fn(times.len(), times.len(), |i, j| *cov.get(i, j));
    let b = DMatrix::from_fn(times.len(), times.len(), |i, j| *inv.get(i, j));
    let residual = (&a * &b - DMatrix::identity(times.len(), times.len())).amax();
    // Random gaps can be tiny, so only the product is checked here.
    assert!(residual < 1e-6, "{residual}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_matches_dense_solve(times in arb_times(40)) {
        prop_assert!(dense_inverse_check(&times) < 1e-8);
    }

    #[test]
    fn dual_basis_is_kronecker(times in arb_rational_times(6)) {
        let grid = TimeGrid::from_times(times.clone()).unwrap();
        let hs = dual_basis(&grid).unwrap();
        for (j, h) in hs.iter().enumerate() {
            for (i, s) in times.iter().enumerate() {
                let ind = CameronMartinVector::indicator(s.clone()).unwrap();
                let want = if i == j { rational(1, 1) } else { rational(0, 1) };
                prop_assert_eq!(h.inner_product(&ind), want);
            }
        }
    }

    /// `E[D_h F] = E[F δ(h)]` for random polynomials, exactly.
    #[test]
    fn integration_by_parts_is_exact(
        times in arb_rational_times(4),
        coeffs in prop::collection::vec(-5i64..=5, 15),
        pick in 0usize..4,
    ) {
        let grid = TimeGrid::from_times(times).unwrap();
        let n = grid.len();
        let mut terms = Vec::new();
        for (k, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0u16; n];
            e[k % n] += (k / n % 3) as u16;
            e[(k * 7 + 1) % n] += (k % 2) as u16;
            terms.push((e, rational(c, 1)));
        }
        let poly = Polynomial::from_terms(n, terms).unwrap();
        let f = GaussianPolynomial::new(grid.clone(), poly).unwrap();
        let h = build_h(&grid, pick % n + 1).unwrap();
        let lhs = f.directional_derivative(&h).expectation().unwrap();
        let rhs = f.mul(&divergence_of(&grid, &h).unwrap()).expectation().unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// `∂_t q = ½ ∂²_x q`.
    #[test]
    fn kernel_solves_heat_equation(t in 0.05f64..3.0, x in -4.0f64..4.0) {
        let h = 1e-4 * t;
        let dt = (kernel(t + h, x).unwrap() - kernel(t - h, x).unwrap()) / (2.0 * h);
        let rhs = 0.5 * kernel_derivative(t, x, 2).unwrap();
        prop_assert!((dt - rhs).abs() < 1e-6 * (1.0 + rhs.abs()) / t);
    }

    #[test]
    fn kernel_derivatives_chain(t in 0.1f64..3.0, x in -4.0f64..4.0, k in 0u32..8) {
        let h = 1e-4 * t.sqrt();
        let fd = (kernel_derivative(t, x + h, k).unwrap()
            - kernel_derivative(t, x - h, k).unwrap())
            / (2.0 * h);
        let exact = kernel_derivative(t, x, k + 1).unwrap();
        let scale = kernel_derivative(t, 0.0, k + 1 + (k + 1) % 2).unwrap().abs()
            + exact.abs();
        prop_assert!((fd - exact).abs() < 1e-5 * scale);
    }

    /// `∫ q_s(x − z) q_t(z) dz = q_{s+t}(x)`.
    #[test]
    fn chapman_kolmogorov(s in 0.05f64..2.0, t in 0.05f64..2.0, x in -3.0f64..3.0) {
        // Weight by the narrower kernel so the integrand stays smooth.
        let (narrow, wide) = (s.min(t), s.max(t));
        let rule = NormalRule::new(60);
        let conv = rule.expectation(|z| kernel(wide, x - narrow.sqrt() * z).unwrap());
        let want = kernel(s + t, x).unwrap();
        prop_assert!((conv - want).abs() < 1e-12 * kernel(s + t, 0.0).unwrap());
    }

    /// Mixed partial of `Q` against nested central differences with one
    /// Richardson step, `n ≤ 3`.
    #[test]
    fn mixed_partial_matches_nested_differences(
        times in arb_times(3),
        seed in 0u64..1000,
    ) {
        prop_assume!(times.windows(2).all(|w| w[1] - w[0] > 0.05) && times[0] > 0.05);
        let grid = TimeGrid::from_times(times.clone()).unwrap();
        let mut rng = substream(seed, 0);
        let y: Vec<f64> = times.iter().map(|s| s.sqrt() * rng.random_range(-1.5..1.5)).collect();
        let exact = mixed_partial_q(&grid, &y).unwrap().value;
        let nested = |h: f64| {
            let n = y.len();
            let mut sum = 0.0;
            for mask in 0..(1u32 << n) {
                let mut p = y.clone();
                let mut sign = 1.0;
                for (i, v) in p.iter_mut().enumerate() {
                    if mask & (1 << i) != 0 {
                        *v += h;
                    } else {
                        *v -= h;
                        sign = -sign;
                    }
                }
                sum += sign * product_q(&grid, &p).unwrap();
            }
            sum / (2.0 * h).powi(n as i32)
        };
        let h = 2e-3;
        let richardson = (4.0 * nested(h / 2.0) - nested(h)) / 3.0;
        let scale = product_q(&grid, &vec![0.0; y.len()]).unwrap()
            / times.iter().fold(1.0, |acc, s| acc * s.sqrt());
        prop_assert!((richardson - exact).abs() < 1e-5 * scale, "{} vs {}", richardson, exact);
    }

    #[test]
    fn moment_bound_is_monotone(
        p in 1.0f64..4.0, t in 0.01f64..2.0, horizon in 0.01f64..2.0,
        b in 0.0f64..1.5, m in 0.1f64..2.0, step in 0.01f64..0.5,
    ) {
        let base = moment_bound_value(p, t, horizon, b, m).unwrap();
        prop_assert!(base >= 1.0);
        for bumped in [
            moment_bound_value(p + step, t, horizon, b, m).unwrap(),
            moment_bound_value(p, t + step, horizon, b, m).unwrap(),
            moment_bound_value(p, t, horizon + step, b, m).unwrap(),
            moment_bound_value(p, t, horizon, b + step, m).unwrap(),
            moment_bound_value(p, t, horizon, b, m + step).unwrap(),
        ] {
            prop_assert!(bumped >= base);
        }
    }
}

/// `∫ Q dy = 1`, by importance sampling from a wider Gaussian.
#[test]
fn joint_density_integrates_to_one() {
    for times in [
        vec![0.3],
        vec![0.2, 0.9],
        vec![0.1, 0.4, 0.5],
        vec![0.25, 0.5, 0.75, 1.0],
    ] {
        let grid = TimeGrid::from_times(times.clone()).unwrap();
        let sigma = 1.5;
        let est = Ensemble::new(1_000_000, 9)
            .run(1, |rng, out| {
                let mut log_g = 0.0;
                let mut y = Vec::with_capacity(times.len());
                for s in &times {
                    let z: f64 = StandardNormal.sample(rng);
                    let sd = sigma * s.sqrt();
                    y.push(sd * z);
                    log_g += -0.5 * z * z - (sd * (2.0 * std::f64::consts::PI).sqrt()).ln();
                }
                out[0] = product_q(&grid, &y)? / log_g.exp();
                Ok(())
            })
            .unwrap()[0]
            .estimate(9);
        assert!(
            (est.mean - 1.0).abs() < 4.0 * est.std_error,
            "{times:?}: {} ± {}",
            est.mean,
            est.std_error
        );
    }
}

/// `E[N_t] = 1` for every bounded registry drift.
#[test]
fn girsanov_weight_has_unit_mean() {
    let params = SimParams {
        paths: 20_000,
        dt: 0.01,
        seed: 4,
        workers: None,
    };
    for name in REGISTRY {
        if name == "linear_test" {
            continue;
        }
        let spec = get_drift(name, &[]).unwrap();
        let [n, _] = girsanov_moments(&spec, 0.3, 1.0, &params).unwrap();
        assert!(
            (n.mean - 1.0).abs() <= 3.0 * n.std_error.max(1e-12),
            "{name}: {} ± {}",
            n.mean,
            n.std_error
        );
    }
}

fn lattice(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

#[test]
fn heat_equation_on_lattice() {
    for t in lattice(0.05, 4.0, 20) {
        for x in lattice(-5.0, 5.0, 20) {
            // Keep h small against the time scale of ln q, which is t²/x².
            let h = 1e-4 * t / (1.0 + x * x / t);
            let fd = (kernel(t + h, x).unwrap() - kernel(t - h, x).unwrap()) / (2.0 * h);
            let rhs = 0.5 * kernel_derivative(t, x, 2).unwrap();
            let scale = rhs.abs() + kernel(t, x).unwrap() / t;
            assert!((2.0 * fd - 2.0 * rhs).abs() <= 1e-7 * scale, "t={t} x={x}");
        }
    }
}

/// `|q'_t(x)| < 2/√(te) · q_{2t}(x)`; equality only at `x² = 2t`.
#[test]
fn derivative_tail_inequality_on_lattice() {
    for t in lattice(0.01, 4.0, 100) {
        for x in lattice(-6.0, 6.0, 100) {
            // Logs, since both sides underflow for small t and large |x|.
            let ln_q =
                |s: f64| log_product_q(&TimeGrid::from_times(vec![s]).unwrap(), &[x]).unwrap();
            let lhs = kernel_ratio(t, x, 1).unwrap().abs().ln() + ln_q(t);
            let rhs = (2.0 / (t * std::f64::consts::E).sqrt()).ln() + ln_q(2.0 * t);
            assert!(lhs < rhs, "t={t} x={x}: {lhs} vs {rhs}");
        }
    }
}
