//! End-to-end checks across the sampler, verifier, and panel machinery:
//! Karamata dominance over random rearrangements, weak duality for feasible
//! assignments, and the counterfactual consistency limit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use teameq_core::discrete::{rearrangement_from_matchset, DiscreteProblem};
use teameq_core::dist::TypeDistribution;
use teameq_core::empirics::{
    counterfactual, simulate_panel, variance_decomposition, CounterfactualOptions,
};
use teameq_core::equilibrium::{solve, SolveOptions};
use teameq_core::matchset::sample_assignment;
use teameq_core::verify::{dual_objective, karamata_curve, KaramataCurve};

fn shuffled(rng: &mut ChaCha8Rng, xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    for i in (1..v.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
    v
}

/// Equal-weight stratified discretization matched by the matching-set
/// pattern, plus the loss list of a feasible rearrangement.
fn matched_atoms(n: usize) -> (DiscreteProblem, Vec<Vec<f64>>) {
    let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let eq = solve(&dist, &SolveOptions::default()).unwrap();
    let col: Vec<f64> = (0..n)
        .map(|i| dist.quantile((i as f64 + 0.5) / n as f64).unwrap())
        .collect();
    let prob = DiscreteProblem::pairs(col.clone(), col.clone(), col).unwrap();
    let assignment = rearrangement_from_matchset(&prob, eq.p_low(), 400);
    let rows = assignment.rows(&prob);
    (prob, rows)
}

fn curve_of(losses: &[f64]) -> KaramataCurve {
    let w = 1.0 / losses.len() as f64;
    let pairs: Vec<(f64, f64)> = losses.iter().map(|&l| (l, w)).collect();
    karamata_curve(&pairs).unwrap()
}

#[test]
fn karamata_dominance_over_random_rearrangements() {
    let n = 1500;
    let (prob, star_rows) = matched_atoms(n);
    let star_losses: Vec<f64> = star_rows.iter().map(|r| r.iter().product()).collect();
    let star = curve_of(&star_losses);

    let x1 = prob.workers()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    for _ in 0..50 {
        let x2 = shuffled(&mut rng, &x1);
        let z = shuffled(&mut rng, &x1);
        let losses: Vec<f64> = (0..n).map(|s| x1[s] * x2[s] * z[s]).collect();
        let gamma = curve_of(&losses);
        for &t in &grid {
            assert!(
                star.eval(t) >= gamma.eval(t) - 1e-9,
                "dominance fails at t = {t}: {} < {}",
                star.eval(t),
                gamma.eval(t)
            );
        }
        // Aggregate log losses are invariant across feasible rearrangements.
        assert!(
            (star.eval(1.0) - gamma.eval(1.0)).abs() <= 1e-6,
            "endpoint mismatch: {} vs {}",
            star.eval(1.0),
            gamma.eval(1.0)
        );
    }
}

#[test]
fn karamata_curves_are_convex_in_rank() {
    let (_, rows) = matched_atoms(800);
    let losses: Vec<f64> = rows.iter().map(|r| r.iter().product()).collect();
    let curve = curve_of(&losses);
    let mut prev = None;
    for i in 0..=200 {
        let t = i as f64 / 200.0;
        let v = curve.eval(t);
        if let Some((t0, v0, slope0)) = prev {
            let slope = (v - v0) / (t - t0);
            assert!(slope >= slope0 - 1e-9, "slope dipped at t = {t}");
            prev = Some((t, v, slope));
        } else {
            prev = Some((t, v, f64::NEG_INFINITY));
        }
    }
}

#[test]
fn weak_duality_for_feasible_assignments() {
    let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let eq = solve(&dist, &SolveOptions::default()).unwrap();
    let dual = dual_objective(&eq);
    let n = 900;
    let col: Vec<f64> = (0..n)
        .map(|i| dist.quantile((i as f64 + 0.5) / n as f64).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x2 = shuffled(&mut rng, &col);
        let z = shuffled(&mut rng, &col);
        let output: f64 = (0..n)
            .map(|s| teameq_core::discrete::output(col[s], x2[s], z[s]))
            .sum::<f64>()
            / n as f64;
        assert!(
            output <= dual + 1e-3,
            "feasible assignment beats the dual: {output} > {dual}"
        );
    }
}

#[test]
fn sampled_assignment_attains_the_dual_value() {
    let dist = TypeDistribution::beta(2.0, 1.0).unwrap();
    let eq = solve(&dist, &SolveOptions::default()).unwrap();
    let sample = sample_assignment(&eq, 3000, 1).unwrap();
    let dual = dual_objective(&eq);
    assert!(
        (sample.aggregate_output() - dual).abs() <= 1e-3,
        "gap {}",
        (sample.aggregate_output() - dual).abs()
    );
}

#[test]
fn counterfactual_identical_marginals_matches_closed_form() {
    let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let c_w = 1.0;
    let eq = solve(
        &dist,
        &SolveOptions {
            wage_constant: c_w,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let sample = sample_assignment(&eq, 2000, 3).unwrap();
    let closed = variance_decomposition(&simulate_panel(&eq, &sample).unwrap()).unwrap();

    let cf = counterfactual(
        &dist,
        &dist,
        &CounterfactualOptions {
            n_points: 2000,
            seed: 3,
            wage_constant: c_w,
            ..CounterfactualOptions::default()
        },
    )
    .unwrap();
    assert!(cf.stable, "heuristic assignment not stable");
    let d = cf.decomposition;
    assert!(
        (d.within_share() - closed.within_share()).abs() < 0.05,
        "within share {} vs closed form {}",
        d.within_share(),
        closed.within_share()
    );
    assert!((d.total - closed.total).abs() / closed.total < 0.1);
}

#[test]
fn tight_firm_distribution_shrinks_between_share() {
    let workers = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let firms = TypeDistribution::uniform(0.49, 0.51).unwrap();
    let cf = counterfactual(
        &workers,
        &firms,
        &CounterfactualOptions {
            n_points: 1200,
            seed: 5,
            wage_constant: 1.0,
            ..CounterfactualOptions::default()
        },
    )
    .unwrap();
    let d = cf.decomposition;
    assert!(
        d.between <= d.within,
        "between {} should not exceed within {}",
        d.between,
        d.within
    );
}
