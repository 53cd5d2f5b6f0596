//! Calculus checks on the equilibrium evaluators: finite-difference
//! consistency of wages with the marginal product, the unit gap between
//! value and wage derivatives, and cutoff continuity.

use teameq_core::dist::TypeDistribution;
use teameq_core::equilibrium::{solve, AssumptionMode, SolveError, SolveOptions};

#[test]
fn wage_derivative_matches_marginal_product_at_second_order() {
    for dist in [
        TypeDistribution::uniform(0.0, 1.0).unwrap(),
        TypeDistribution::beta(2.0, 1.0).unwrap(),
    ] {
        let eq = solve(&dist, &SolveOptions::default()).unwrap();
        let x_low = dist.quantile(eq.p_low()).unwrap();
        let x_high = dist.quantile(eq.p_high()).unwrap();
        let mut checked = 0;
        for i in 1..20 {
            let x = i as f64 / 20.0;
            // Keep clear of the branch kinks where m is not differentiable.
            if (x - x_low).abs() < 0.02 || (x - x_high).abs() < 0.02 || x < 0.02 || x > 0.98 {
                continue;
            }
            let fd = |h: f64| ((eq.wage(x + h) - eq.wage(x - h)) / (2.0 * h)
                - eq.marginal_product_level(x))
            .abs();
            let e3 = fd(1e-3);
            let e4 = fd(1e-4);
            // Second-order decay: shrinking h tenfold cuts the error by
            // about a hundred; require at least fifty, with an absolute
            // floor for points where m is locally almost linear.
            assert!(
                e4 <= e3 / 50.0 || e4 < 5e-13,
                "x = {x}: errors {e3:.3e} -> {e4:.3e}"
            );
            checked += 1;
        }
        assert!(checked >= 10);
    }
}

#[test]
fn value_minus_wage_derivative_is_unity() {
    let dist = TypeDistribution::beta(2.0, 1.0).unwrap();
    let eq = solve(&dist, &SolveOptions::default()).unwrap();
    let h = 1e-4;
    for i in 1..=100 {
        let z = i as f64 / 101.0;
        let dv = (eq.firm_value(z + h) - eq.firm_value(z - h)) / (2.0 * h);
        let dw = (eq.wage(z + h) - eq.wage(z - h)) / (2.0 * h);
        assert!(
            (dv - dw - 1.0).abs() <= 1e-10,
            "v' - w' = {} at z = {z}",
            dv - dw
        );
    }
}

#[test]
fn cutoff_continuity_for_all_families_and_team_sizes() {
    for dist in [
        TypeDistribution::uniform(0.0, 1.0).unwrap(),
        TypeDistribution::beta(2.0, 1.0).unwrap(),
    ] {
        for n in [2usize, 3] {
            let eq = solve(
                &dist,
                &SolveOptions {
                    n_workers: n,
                    ..SolveOptions::default()
                },
            )
            .unwrap();
            let eps = 1e-12;
            let below = eq.marginal_product(eq.p_low() - eps);
            let above = eq.marginal_product(eq.p_low() + eps);
            assert!((below - above).abs() < 1e-8, "n={n}: jump at p_low");
            let below = eq.marginal_product(eq.p_high() - eps);
            let above = eq.marginal_product(eq.p_high() + eps);
            assert!((below - above).abs() < 1e-8, "n={n}: jump at p_high");
        }
    }
}

#[test]
fn no_root_reports_diagnostic_curve() {
    // A quantile function that is exponential in the percentile makes the
    // branch loss exceed the mixed-set mean everywhere, so the cutoff
    // equation has no root in (0, 1/3]; the solver must say so and attach
    // the scanned curve.
    // I(p) = 0.05 * exp(p ln 20): log-linear quantile on support [0.05, 1].
    let k = libm::log(20.0);
    let knots: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let p = i as f64 / 40.0;
            (p, 0.05 * libm::exp(k * p))
        })
        .collect();
    let dist = TypeDistribution::piecewise_from_knots(&knots).unwrap();
    match solve(
        &dist,
        &SolveOptions {
            assumption_mode: AssumptionMode::Warn,
            ..SolveOptions::default()
        },
    ) {
        Err(SolveError::NoRoot { curve }) => {
            assert!(curve.len() >= 500);
            assert!(curve.iter().all(|&(p, _)| p > 0.0 && p < 1.0 / 3.0));
        }
        other => panic!("expected NoRoot, got {other:?}"),
    }
}

#[test]
fn exported_grid_is_consistent() {
    let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let eq = solve(
        &dist,
        &SolveOptions {
            wage_constant: 1.0,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let grid = eq.grid(101);
    assert_eq!(grid.len(), 101);
    assert_eq!(grid[0].p, 0.0);
    assert_eq!(grid[100].p, 1.0);
    for row in &grid {
        assert!((row.level - dist.quantile(row.p).unwrap()).abs() < 1e-14);
        assert!((row.w - eq.wage(row.level)).abs() < 1e-14);
        assert!((row.v - eq.firm_value(row.level)).abs() < 1e-14);
        assert!((row.m - eq.marginal_product(row.p)).abs() < 1e-14);
    }
}
