//! Oracle-dominance and bound properties of the discrete solvers.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use teameq_core::discrete::{
    amgm_bound, brute_force_oracle, check_complete_mixing, check_stability,
    rearrangement_heuristic, DiscreteProblem,
};
use teameq_core::dist::TypeDistribution;

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, dist: &TypeDistribution) -> DiscreteProblem {
    let mut col = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| dist.quantile(uniform01(rng)).unwrap())
            .collect()
    };
    DiscreteProblem::pairs(col(rng), col(rng), col(rng)).unwrap()
}

fn random_permutation_output(rng: &mut ChaCha8Rng, prob: &DiscreteProblem) -> f64 {
    let n = prob.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    let mut perm2: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm2.swap(i, j);
    }
    let mut total = 0.0;
    for s in 0..n {
        total += teameq_core::discrete::output(
            prob.workers()[0][perm[s]],
            prob.workers()[1][perm2[s]],
            prob.firms()[s],
        );
    }
    total
}

#[test]
fn oracle_dominates_heuristic_dominates_random() {
    let uniform = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let beta = TypeDistribution::beta(2.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let n = 3 + (case % 4); // 3..=6
        let dist = if case % 2 == 0 { &uniform } else { &beta };
        let prob = random_problem(&mut rng, n, dist);
        let oracle = brute_force_oracle(&prob).unwrap();
        let heuristic = rearrangement_heuristic(&prob, 200, case as u64);
        assert!(
            oracle.aggregate_output >= heuristic.aggregate_output - 1e-12,
            "case {case}: heuristic beat the oracle"
        );
        let mut best_random = f64::NEG_INFINITY;
        for _ in 0..50 {
            best_random = best_random.max(random_permutation_output(&mut rng, &prob));
        }
        assert!(
            heuristic.aggregate_output >= best_random - 1e-12,
            "case {case}: random permutation beat the heuristic"
        );
    }
}

#[test]
fn oracle_is_always_stable_and_respects_amgm() {
    let uniform = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let n = 2 + (case % 5);
        let prob = random_problem(&mut rng, n, &uniform);
        let oracle = brute_force_oracle(&prob).unwrap();
        let rows = oracle.rows(&prob);
        assert!(
            check_stability(&rows, 1e-12).is_empty(),
            "optimal assignment must be stable"
        );
        let bound = amgm_bound(&prob);
        let mean_loss = oracle.aggregate_loss / n as f64;
        assert!(
            mean_loss >= bound - 1e-12,
            "AM-GM violated: mean {mean_loss} < bound {bound}"
        );
        // Equality exactly when the optimal assignment is completely mixed.
        let mixing = check_complete_mixing(&rows, 1e-12);
        if mixing.mixed {
            assert!((mean_loss - bound).abs() < 1e-12);
        } else {
            assert!(mean_loss > bound);
        }
    }
}

#[test]
fn three_worker_oracle_agrees_with_pair_logic() {
    // Appendix-style sanity at team size 3: enumeration stays exact and the
    // optimum is stable.
    let vals = vec![0.2, 0.5, 0.8];
    let prob = DiscreteProblem::new(
        vec![vals.clone(), vals.clone(), vals.clone()],
        vals.clone(),
    )
    .unwrap();
    let oracle = brute_force_oracle(&prob).unwrap();
    let rows = oracle.rows(&prob);
    assert!(check_stability(&rows, 1e-12).is_empty());
    let total_z: f64 = vals.iter().sum();
    assert!(oracle.aggregate_output <= total_z);
    assert!(oracle.aggregate_loss / 3.0 >= amgm_bound(&prob) - 1e-15);
}
