//! Property tests for the distribution layer: quantile/CDF round trips,
//! density normalization, and the implication between the regularity
//! assumptions.

use proptest::prelude::*;
use teameq_core::dist::TypeDistribution;
use teameq_core::num::adaptive_simpson;

fn grid_round_trip(dist: &TypeDistribution, tol: f64) {
    for i in 1..100 {
        let p = i as f64 / 100.0;
        let x = dist.quantile(p).unwrap();
        let back = dist.cdf(x).unwrap();
        assert!(
            (back - p).abs() <= tol,
            "F(I({p})) = {back}, off by {}",
            (back - p).abs()
        );
    }
}

#[test]
fn round_trips_on_standard_families() {
    grid_round_trip(&TypeDistribution::uniform(0.0, 1.0).unwrap(), 1e-10);
    grid_round_trip(&TypeDistribution::beta(2.0, 1.0).unwrap(), 1e-10);
    grid_round_trip(&TypeDistribution::beta(2.0, 3.0).unwrap(), 1e-10);
    grid_round_trip(&TypeDistribution::beta(5.0, 2.0).unwrap(), 1e-10);
}

#[test]
fn densities_integrate_to_one() {
    for dist in [
        TypeDistribution::uniform(0.25, 0.75).unwrap(),
        TypeDistribution::beta(2.0, 3.0).unwrap(),
        TypeDistribution::piecewise_from_knots(&[(0.0, 0.1), (0.3, 0.2), (1.0, 0.9)]).unwrap(),
    ] {
        let (lo, hi) = dist.support();
        let mass = adaptive_simpson(|x| dist.pdf(x.clamp(lo, hi)).unwrap(), lo, hi, 1e-10);
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }
}

#[test]
fn nondecreasing_xfx_implies_concave_log_loss() {
    // The simpler monotonicity condition implies concavity of the branch
    // log-loss; assert the implication on every tested distribution.
    let dists = [
        TypeDistribution::uniform(0.0, 1.0).unwrap(),
        TypeDistribution::beta(1.0, 1.0).unwrap(),
        TypeDistribution::beta(2.0, 1.0).unwrap(),
        TypeDistribution::beta(2.0, 3.0).unwrap(),
        TypeDistribution::beta(5.0, 2.0).unwrap(),
        TypeDistribution::beta(1.0, 2.0).unwrap(),
        TypeDistribution::piecewise_from_knots(&[(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]).unwrap(),
    ];
    for dist in &dists {
        let report = dist.check_assumptions(None);
        if report.xfx_monotone {
            assert!(
                report.l_concave_on_third,
                "monotone x f(x) but non-concave L: {report:?}"
            );
        }
    }
}

proptest! {
    #[test]
    fn uniform_round_trip(a in 0.0..0.5f64, width in 0.1..0.5f64, p in 0.0..1.0f64) {
        let dist = TypeDistribution::uniform(a, (a + width).min(1.0)).unwrap();
        let x = dist.quantile(p).unwrap();
        prop_assert!((dist.cdf(x).unwrap() - p).abs() <= 1e-10);
    }

    #[test]
    fn beta_round_trip(alpha in 0.5..5.0f64, beta in 0.5..5.0f64, p in 0.001..0.999f64) {
        let dist = TypeDistribution::beta(alpha, beta).unwrap();
        let x = dist.quantile(p).unwrap();
        prop_assert!((dist.cdf(x).unwrap() - p).abs() <= 1e-10);
    }

    #[test]
    fn piecewise_quantile_nondecreasing(
        raw in proptest::collection::vec(0.01..1.0f64, 2..8),
        p0 in 0.0..1.0f64,
        p1 in 0.0..1.0f64,
    ) {
        // Build strictly increasing knots from positive increments.
        let total: f64 = raw.iter().sum();
        let mut acc = 0.0;
        let mut knots = vec![(0.0, 0.0)];
        for (i, r) in raw.iter().enumerate() {
            acc += r / total;
            let p = (i + 1) as f64 / raw.len() as f64;
            knots.push((p, acc.min(1.0)));
        }
        knots.last_mut().unwrap().1 = 1.0;
        let dist = TypeDistribution::piecewise_from_knots(&knots).unwrap();
        let (lo, hi) = (p0.min(p1), p0.max(p1));
        prop_assert!(dist.quantile(lo).unwrap() <= dist.quantile(hi).unwrap() + 1e-15);
        // Exact inverse at knots.
        for &(p, v) in &knots {
            prop_assert!((dist.quantile(p).unwrap() - v).abs() < 1e-14);
            prop_assert!((dist.cdf(v).unwrap() - p).abs() < 1e-12);
        }
    }
}
