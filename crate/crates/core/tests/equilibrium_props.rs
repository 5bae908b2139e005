//! Property tests of the equilibrium solution on randomized economies.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use uirp_core::equilibrium::{
    expected_uninformed_holdings, solve_equilibrium, theoretical_proxy_er, EconomyParams,
    ProxyVariant,
};
use uirp_core::monte_carlo::{mc_market_clearing, sample_draws};

/// Random SPD matrix with eigenvalues bounded away from zero.
fn spd_matrix(n: usize, seeds: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            let raw = seeds[idx % seeds.len()];
            idx += 1;
            l[(i, j)] = if i == j { 0.6 + raw.abs() } else { 0.4 * raw };
        }
    }
    let mut m = &l * l.transpose();
    m += DMatrix::identity(n, n) * 0.1;
    m
}

fn economy_strategy() -> impl Strategy<Value = EconomyParams> {
    (
        1usize..=3,
        0.05f64..0.5,
        0.1f64..=1.0,
        prop::collection::vec(-1.0f64..1.0, 18),
        prop::collection::vec(-1.0f64..1.0, 6),
    )
        .prop_map(|(n, a, lambda, seeds, means)| {
            let t = spd_matrix(n, &seeds[0..6]);
            let u = spd_matrix(n, &seeds[6..12]);
            let z = spd_matrix(n, &seeds[12..18]);
            let mean_info = DVector::from_fn(n, |i, _| means[i]);
            let mean_supply = DVector::from_fn(n, |i, _| 1.0 + 0.5 * means[3 + i]);
            EconomyParams::new(a, lambda, t, u, z, mean_info, mean_supply).unwrap()
        })
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solution_matrices_are_symmetric_psd(params in economy_strategy()) {
        let sol = solve_equilibrium(&params).unwrap();
        for (m, name) in [
            (&sol.asymmetry, "N"),
            (&sol.avg_cov, "Vm"),
            (&sol.total_return_cov, "Var(P1-P0)"),
            (&sol.price_cov, "Var(P0)"),
        ] {
            let asym = (m - m.transpose()).norm() / m.norm();
            prop_assert!(asym < 1e-12, "{} not symmetric: {}", name, asym);
            prop_assert!(
                min_eigenvalue(m) > -1e-10 * m.norm(),
                "{} not PSD", name
            );
        }
        // Conditioning on prices cannot increase signal variance.
        let gap = params.info_cov() - &sol.asymmetry;
        prop_assert!(min_eigenvalue(&gap) > -1e-10 * params.info_cov().norm());
    }

    #[test]
    fn avg_cov_satisfies_harmonic_identity(params in economy_strategy()) {
        let sol = solve_equilibrium(&params).unwrap();
        let lambda = params.informed_fraction();
        let u_inv = params.residual_cov().clone().try_inverse().unwrap();
        let nu_inv = (&sol.asymmetry + params.residual_cov()).try_inverse().unwrap();
        let lhs = sol.avg_cov.clone().try_inverse().unwrap();
        let rhs = u_inv * lambda + nu_inv * (1.0 - lambda);
        prop_assert!(rel_err(&lhs, &rhs) < 1e-10, "harmonic identity err {}", rel_err(&lhs, &rhs));
    }

    #[test]
    fn covariance_fields_agree_with_moment_algebra(params in economy_strategy()) {
        // Independent route: Var(P1-P0) = Var(P1) + Var(P0) - A1 T - T A1'
        // and Cov(P0, P1-P0) = A1 T - Var(P0), using Cov(P1, P0) = T A1'.
        let sol = solve_equilibrium(&params).unwrap();
        let t = params.info_cov();
        let u = params.residual_cov();
        let a1t = &sol.price_slope * t;
        let total = t + u + &sol.price_cov - &a1t - a1t.transpose();
        prop_assert!(rel_err(&sol.total_return_cov, &total) < 1e-10);
        let prc = &a1t - &sol.price_cov;
        prop_assert!(
            (&sol.price_return_cov - &prc).norm() / sol.total_return_cov.norm() < 1e-10
        );
    }

    #[test]
    fn market_clears_on_random_economies(params in economy_strategy()) {
        let sol = solve_equilibrium(&params).unwrap();
        let draws = sample_draws(&params, &sol, 77, 200);
        let resid = mc_market_clearing(&params, &sol, &draws).unwrap();
        prop_assert!(resid <= 1e-8, "clearing residual {}", resid);
    }

    #[test]
    fn proxies_stay_in_unit_interval(params in economy_strategy()) {
        let sol = solve_equilibrium(&params).unwrap();
        for variant in [ProxyVariant::CondU, ProxyVariant::CondN, ProxyVariant::CondNPlusU] {
            for v in theoretical_proxy_er(&sol, variant) {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{variant}: {v}");
            }
        }
    }

    #[test]
    fn diagonal_grid_monotone_in_noise(
        z_lo in 0.5f64..5.0,
        bump in 0.2f64..5.0,
    ) {
        // The published grid's pattern on the diagonal family: more supply
        // noise on asset 1 raises its relative asymmetry and lowers both
        // weight ratios.
        let build = |z11: f64| {
            let params =
                EconomyParams::diagonal(0.1, 0.4, &[1.0, 1.0], &[1.0, 1.0], &[z11, 1.0]).unwrap();
            let sol = solve_equilibrium(&params).unwrap();
            let h = expected_uninformed_holdings(&sol, &params).unwrap();
            let proxy = theoretical_proxy_er(&sol, ProxyVariant::CondU);
            (
                sol.asymmetry[(0, 0)] / sol.asymmetry[(1, 1)],
                h.quantities[0] / h.quantities[1],
                (1.0 - proxy[0]) / (1.0 - proxy[1]),
            )
        };
        let (a0, w0, p0) = build(z_lo);
        let (a1, w1, p1) = build(z_lo + bump);
        prop_assert!(a1 > a0);
        prop_assert!(w1 < w0);
        prop_assert!(p1 < p0);
    }
}
