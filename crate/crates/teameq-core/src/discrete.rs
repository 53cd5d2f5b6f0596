//! Finite sample assignment problems.
//!
//! A problem holds `n_w` worker columns and one firm column of equal length;
//! an assignment is one permutation per worker slot applied against the
//! identity firm order. The exact oracle enumerates permutations (capacity
//! limited), the rearrangement heuristic cycles countermonotone re-sorts
//! until stable, and the checkers test the pairwise-exchange stability
//! inequalities, product countermonotonicity, and complete mixing.

use alloc::vec;
use alloc::vec::Vec;

use crate::num::fmath::FloatExt;
use crate::num::kahan::KahanSum;
use crate::num::rng;

/// Expected output of a two-worker team: `z (1 - x1 x2)`.
#[inline]
pub fn output(x1: f64, x2: f64, z: f64) -> f64 {
    z * (1.0 - x1 * x2)
}

/// Expected output loss of a two-worker team: `x1 x2 z`.
#[inline]
pub fn loss(x1: f64, x2: f64, z: f64) -> f64 {
    x1 * x2 * z
}

/// Team output for any team size: `z (1 - prod x_i)`.
pub fn output_n(workers: &[f64], z: f64) -> f64 {
    z * (1.0 - workers.iter().product::<f64>())
}

/// Team loss for any team size: `z prod x_i`.
pub fn loss_n(workers: &[f64], z: f64) -> f64 {
    z * workers.iter().product::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteError {
    Invalid(&'static str),
    /// Sample too large for exhaustive enumeration; the limit names the
    /// largest admissible sample for the given team size.
    Capacity {
        n_samples: usize,
        team_size: usize,
        limit: usize,
    },
}

impl core::fmt::Display for DiscreteError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DiscreteError::Invalid(msg) => write!(f, "invalid discrete problem: {msg}"),
            DiscreteError::Capacity {
                n_samples,
                team_size,
                limit,
            } => write!(
                f,
                "sample size {n_samples} exceeds exhaustive-search limit {limit} for teams of {team_size}"
            ),
        }
    }
}

impl core::error::Error for DiscreteError {}

/// Sampled worker skills (one column per slot) and project values.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    workers: Vec<Vec<f64>>,
    firms: Vec<f64>,
}

impl DiscreteProblem {
    pub fn new(workers: Vec<Vec<f64>>, firms: Vec<f64>) -> Result<Self, DiscreteError> {
        if workers.len() < 2 {
            return Err(DiscreteError::Invalid("need at least two worker slots"));
        }
        if firms.is_empty() {
            return Err(DiscreteError::Invalid("empty sample"));
        }
        for col in workers.iter().chain(core::iter::once(&firms)) {
            if col.len() != firms.len() {
                return Err(DiscreteError::Invalid("column lengths differ"));
            }
            if col.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(DiscreteError::Invalid("entries must lie in [0, 1]"));
            }
        }
        Ok(Self { workers, firms })
    }

    /// Two-worker convenience constructor.
    pub fn pairs(x1: Vec<f64>, x2: Vec<f64>, z: Vec<f64>) -> Result<Self, DiscreteError> {
        Self::new(vec![x1, x2], z)
    }

    pub fn team_size(&self) -> usize {
        self.workers.len()
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }

    pub fn workers(&self) -> &[Vec<f64>] {
        &self.workers
    }

    pub fn firms(&self) -> &[f64] {
        &self.firms
    }

    fn total_project_value(&self) -> f64 {
        self.firms.iter().copied().collect::<KahanSum>().value()
    }
}

/// One permutation per worker slot against the identity firm order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAssignment {
    pub perms: Vec<Vec<usize>>,
    pub aggregate_output: f64,
    pub aggregate_loss: f64,
    /// Heuristic runs set this to false when they hit the sweep budget
    /// before a full sweep left the assignment unchanged.
    pub converged: bool,
}

impl DiscreteAssignment {
    /// Materializes the matched rows `(x_1, ..., x_n, z)`.
    pub fn rows(&self, prob: &DiscreteProblem) -> Vec<Vec<f64>> {
        (0..prob.len())
            .map(|s| {
                let mut row: Vec<f64> = self
                    .perms
                    .iter()
                    .enumerate()
                    .map(|(i, p)| prob.workers[i][p[s]])
                    .collect();
                row.push(prob.firms[s]);
                row
            })
            .collect()
    }

    fn from_perms(prob: &DiscreteProblem, perms: Vec<Vec<usize>>, converged: bool) -> Self {
        let mut total_loss = KahanSum::new();
        for s in 0..prob.len() {
            let mut l = prob.firms[s];
            for (i, p) in perms.iter().enumerate() {
                l *= prob.workers[i][p[s]];
            }
            total_loss.add(l);
        }
        let aggregate_loss = total_loss.value();
        DiscreteAssignment {
            perms,
            aggregate_output: prob.total_project_value() - aggregate_loss,
            aggregate_loss,
            converged,
        }
    }

    /// The identity assignment.
    pub fn identity(prob: &DiscreteProblem) -> Self {
        let id: Vec<usize> = (0..prob.len()).collect();
        Self::from_perms(prob, vec![id; prob.team_size()], true)
    }
}

/// Direction of the exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimize aggregate loss (submodular production).
    MinLoss,
    /// Maximize aggregate loss; equivalent to the supermodular technology
    /// where both workers must solve the problem, so positive sorting wins.
    MaxLoss,
}

/// Largest sample size whose exhaustive enumeration stays around 2.5e7
/// permutation evaluations for the given team size.
pub fn enumeration_limit(team_size: usize) -> usize {
    let mut limit = 1usize;
    for k in 2..=12usize {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        if FloatExt::powi(fact, team_size as i32) <= 2.6e7 {
            limit = k;
        } else {
            break;
        }
    }
    limit
}

/// Exhaustive global optimum by permutation enumeration.
///
/// The firm order stays fixed; permutations for slots 2..n are enumerated in
/// lexicographic order and slot 1 is scanned innermost. Ties in the objective
/// are broken toward the lexicographically smallest `(sigma_1, ..., sigma_n)`.
pub fn brute_force_oracle(prob: &DiscreteProblem) -> Result<DiscreteAssignment, DiscreteError> {
    brute_force_oracle_with(prob, Objective::MinLoss)
}

/// [`brute_force_oracle`] with an explicit search direction.
pub fn brute_force_oracle_with(
    prob: &DiscreteProblem,
    objective: Objective,
) -> Result<DiscreteAssignment, DiscreteError> {
    let n = prob.len();
    let d = prob.team_size();
    let limit = enumeration_limit(d);
    if n > limit {
        return Err(DiscreteError::Capacity {
            n_samples: n,
            team_size: d,
            limit,
        });
    }
    if n == 1 {
        return Ok(DiscreteAssignment::identity(prob));
    }

    let mut outer: Vec<Vec<usize>> = vec![(0..n).collect(); d - 1];
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut rest = vec![0.0f64; n];
    loop {
        // Loss contribution of everything except slot 1.
        for s in 0..n {
            let mut r = prob.firms[s];
            for (i, p) in outer.iter().enumerate() {
                r *= prob.workers[i + 1][p[s]];
            }
            rest[s] = r;
        }
        let mut sigma1: Vec<usize> = (0..n).collect();
        loop {
            let mut total = 0.0f64;
            for s in 0..n {
                total += prob.workers[0][sigma1[s]] * rest[s];
            }
            let better = match &best {
                None => true,
                Some((b, perms)) => {
                    let improves = match objective {
                        Objective::MinLoss => total < *b,
                        Objective::MaxLoss => total > *b,
                    };
                    improves
                        || (total == *b && lex_less(&sigma1, &outer, perms))
                }
            };
            if better {
                let mut perms = Vec::with_capacity(d);
                perms.push(sigma1.clone());
                perms.extend(outer.iter().cloned());
                best = Some((total, perms));
            }
            if !next_permutation(&mut sigma1) {
                break;
            }
        }
        if !advance_odometer(&mut outer) {
            break;
        }
    }
    let (_, perms) = best.unwrap();
    Ok(DiscreteAssignment::from_perms(prob, perms, true))
}

fn lex_less(sigma1: &[usize], outer: &[Vec<usize>], best: &[Vec<usize>]) -> bool {
    match sigma1.cmp(&best[0][..]) {
        core::cmp::Ordering::Less => return true,
        core::cmp::Ordering::Greater => return false,
        core::cmp::Ordering::Equal => {}
    }
    for (cand, b) in outer.iter().zip(best[1..].iter()) {
        match cand[..].cmp(&b[..]) {
            core::cmp::Ordering::Less => return true,
            core::cmp::Ordering::Greater => return false,
            core::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Steps `perm` to its lexicographic successor; false once exhausted.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn advance_odometer(perms: &mut [Vec<usize>]) -> bool {
    for p in perms.iter_mut().rev() {
        if next_permutation(p) {
            return true;
        }
        let n = p.len();
        p.clear();
        p.extend(0..n);
    }
    false
}

/// Column state carried through rearrangement sweeps: matched values plus
/// the original sample index of each value, so permutations can be recovered
/// even with duplicate values.
struct RaState {
    /// `cols[c][row]`, worker slots first, firm column last.
    cols: Vec<Vec<f64>>,
    idx: Vec<Vec<usize>>,
}

impl RaState {
    fn total_loss(&self) -> f64 {
        let n = self.cols[0].len();
        let mut acc = KahanSum::new();
        for s in 0..n {
            acc.add(self.cols.iter().map(|c| c[s]).product());
        }
        acc.value()
    }

    /// Re-sorts column `c` countermonotonically against the elementwise
    /// product of the remaining columns. Stable in row order on product
    /// ties, so the sweep is deterministic. Returns true if anything moved.
    fn resort_column(&mut self, c: usize) -> bool {
        let n = self.cols[0].len();
        let mut complement: Vec<(f64, usize)> = (0..n)
            .map(|s| {
                let mut prod = 1.0;
                for (j, col) in self.cols.iter().enumerate() {
                    if j != c {
                        prod *= col[s];
                    }
                }
                (prod, s)
            })
            .collect();
        complement.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut vals: Vec<(f64, usize)> = self.cols[c]
            .iter()
            .copied()
            .zip(self.idx[c].iter().copied())
            .collect();
        vals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut new_col = vec![0.0; n];
        let mut new_idx = vec![0usize; n];
        for (rank, &(_, row)) in complement.iter().enumerate() {
            new_col[row] = vals[rank].0;
            new_idx[row] = vals[rank].1;
        }
        let changed = new_idx != self.idx[c];
        self.cols[c] = new_col;
        self.idx[c] = new_idx;
        changed
    }

    /// Extracts slot permutations against the identity firm order.
    fn into_assignment(self, prob: &DiscreteProblem, converged: bool) -> DiscreteAssignment {
        let n = self.cols[0].len();
        let d = self.cols.len() - 1;
        // Row r currently holds firm index idx[d][r]; reorder rows so firms
        // are back in identity order.
        let mut row_of_firm = vec![0usize; n];
        for r in 0..n {
            row_of_firm[self.idx[d][r]] = r;
        }
        let perms: Vec<Vec<usize>> = (0..d)
            .map(|c| (0..n).map(|s| self.idx[c][row_of_firm[s]]).collect())
            .collect();
        DiscreteAssignment::from_perms(prob, perms, converged)
    }
}

/// Stable assignment by cyclic countermonotone re-sorting.
///
/// Worker slots are cycled in fixed order and the firm column last; a sweep
/// that changes nothing ends the search. Each re-sort weakly lowers
/// aggregate loss. Different starts can land on different stable points, so
/// the search restarts from the given pairing plus a few seeded shuffles and
/// keeps the best stable result; deterministic given the seed.
pub fn rearrangement_heuristic(
    prob: &DiscreteProblem,
    max_sweeps: usize,
    seed: u64,
) -> DiscreteAssignment {
    let n = prob.len();
    let restarts = (2 * n).clamp(4, 16);
    let mut best: Option<DiscreteAssignment> = None;
    for attempt in 0..restarts {
        let start = if attempt == 0 {
            None
        } else {
            Some(seed.wrapping_add(attempt as u64 - 1))
        };
        let cand = ra_single_run(prob, max_sweeps, start);
        let better = match &best {
            None => true,
            Some(b) => cand.aggregate_output > b.aggregate_output,
        };
        if better {
            best = Some(cand);
        }
    }
    best.unwrap()
}

fn ra_single_run(prob: &DiscreteProblem, max_sweeps: usize, shuffle_seed: Option<u64>) -> DiscreteAssignment {
    let n = prob.len();
    let d = prob.team_size();
    let mut cols = Vec::with_capacity(d + 1);
    let mut idx = Vec::with_capacity(d + 1);
    match shuffle_seed {
        None => {
            for c in 0..d {
                cols.push(prob.workers[c].clone());
                idx.push((0..n).collect());
            }
        }
        Some(seed) => {
            let mut r = rng::rng_from_seed(seed);
            for c in 0..d {
                let perm = rng::random_permutation(&mut r, n);
                cols.push(perm.iter().map(|&s| prob.workers[c][s]).collect());
                idx.push(perm);
            }
        }
    }
    cols.push(prob.firms.clone());
    idx.push((0..n).collect());
    run_sweeps(RaState { cols, idx }, prob, max_sweeps)
}

/// Rearrangement sweeps started from a matching-set-shaped initial pairing.
///
/// Columns are rank-sorted; the lowest `round(p_low * n)` ranks of each
/// column are paired with the nearest free top ranks, mirroring the
/// countermonotonic branches, and the middle is left rank-aligned for the
/// sweeps to mix.
pub fn rearrangement_from_matchset(
    prob: &DiscreteProblem,
    p_low: f64,
    max_sweeps: usize,
) -> DiscreteAssignment {
    let n = prob.len();
    let d = prob.team_size();
    // Ascending rank -> original index, per column.
    let orders: Vec<Vec<usize>> = (0..=d)
        .map(|c| {
            let col: &[f64] = if c < d { &prob.workers[c] } else { &prob.firms };
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap().then(a.cmp(&b)));
            o
        })
        .collect();

    let k = ((p_low * n as f64).round() as usize).min(n / (d + 1));
    let mut free: Vec<Vec<bool>> = vec![vec![true; n]; d + 1];
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n); // ranks per column
    for fam in 0..=d {
        for j in 0..k {
            let own = take_nearest(&mut free[fam], j);
            let want = n - 1 - d * j;
            let mut row = vec![0usize; d + 1];
            for c in 0..=d {
                if c == fam {
                    row[c] = own;
                } else {
                    row[c] = take_nearest(&mut free[c], want);
                }
            }
            rows.push(row);
        }
    }
    // Mixed middle: remaining ranks, aligned ascending.
    let remaining: Vec<Vec<usize>> = (0..=d)
        .map(|c| (0..n).filter(|&r| free[c][r]).collect())
        .collect();
    for j in 0..remaining[0].len() {
        rows.push((0..=d).map(|c| remaining[c][j]).collect());
    }

    let mut cols = vec![vec![0.0; n]; d + 1];
    let mut idx = vec![vec![0usize; n]; d + 1];
    for (r, row) in rows.iter().enumerate() {
        for c in 0..=d {
            let original = orders[c][row[c]];
            idx[c][r] = original;
            cols[c][r] = if c < d {
                prob.workers[c][original]
            } else {
                prob.firms[original]
            };
        }
    }
    run_sweeps(RaState { cols, idx }, prob, max_sweeps)
}

fn take_nearest(free: &mut [bool], want: usize) -> usize {
    let n = free.len();
    for offset in 0..n {
        if want >= offset && free[want - offset] {
            free[want - offset] = false;
            return want - offset;
        }
        if want + offset < n && free[want + offset] {
            free[want + offset] = false;
            return want + offset;
        }
    }
    unreachable!("rank pool exhausted");
}

fn run_sweeps(mut state: RaState, prob: &DiscreteProblem, max_sweeps: usize) -> DiscreteAssignment {
    let d = prob.team_size();
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut changed = false;
        for c in 0..=d {
            changed |= state.resort_column(c);
        }
        if !changed {
            converged = true;
            break;
        }
    }
    debug_assert!(state.total_loss().is_finite());
    state.into_assignment(prob, converged)
}

/// A pairwise-exchange improvement opportunity: swapping the `split` subset
/// of coordinates between the two rows raises output by `slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityViolation {
    pub rows: (usize, usize),
    /// Bitmask over columns (bit d is the firm column) naming the exchanged
    /// subset; bit 0 is always set.
    pub split: u32,
    pub slack: f64,
}

/// Evaluates every pairwise-exchange inequality over all unordered row pairs
/// and subset splits; returns the violations with their slack.
pub fn check_stability(rows: &[Vec<f64>], tol: f64) -> Vec<StabilityViolation> {
    let mut out = Vec::new();
    let Some(first) = rows.first() else {
        return out;
    };
    let d = first.len();
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            for split in subset_splits(d) {
                let (pa, ca) = split_products(&rows[a], split);
                let (pb, cb) = split_products(&rows[b], split);
                let slack = (pa - pb) * (ca - cb);
                if slack > tol {
                    out.push(StabilityViolation {
                        rows: (a, b),
                        split,
                        slack,
                    });
                }
            }
        }
    }
    out
}

/// Product countermonotonicity: for every subset split, the product of the
/// subset's coordinates sorts weakly against the complementary product.
/// Ties count as satisfying the definition.
#[derive(Debug, Clone, PartialEq)]
pub struct CountermonotonicityReport {
    pub holds: bool,
    /// First failing `(row_a, row_b, split)` when it does not hold.
    pub witness: Option<(usize, usize, u32)>,
}

pub fn check_product_countermonotonic(rows: &[Vec<f64>], tol: f64) -> CountermonotonicityReport {
    let Some(first) = rows.first() else {
        return CountermonotonicityReport {
            holds: true,
            witness: None,
        };
    };
    let d = first.len();
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            for split in subset_splits(d) {
                let (pa, ca) = split_products(&rows[a], split);
                let (pb, cb) = split_products(&rows[b], split);
                if (pa - pb) * (ca - cb) > tol {
                    return CountermonotonicityReport {
                        holds: false,
                        witness: Some((a, b, split)),
                    };
                }
            }
        }
    }
    CountermonotonicityReport {
        holds: true,
        witness: None,
    }
}

fn subset_splits(d: usize) -> impl Iterator<Item = u32> {
    // Masks containing column 0 and missing at least one other column; each
    // unordered split appears exactly once.
    (0..(1u32 << (d - 1))).map(|m| (m << 1) | 1).filter(move |m| *m != (1u32 << d) - 1)
}

fn split_products(row: &[f64], mask: u32) -> (f64, f64) {
    let mut inside = 1.0;
    let mut outside = 1.0;
    for (i, v) in row.iter().enumerate() {
        if mask & (1 << i) != 0 {
            inside *= v;
        } else {
            outside *= v;
        }
    }
    (inside, outside)
}

/// Loss spread across rows; completely mixed when it stays within `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    pub mixed: bool,
    pub spread: f64,
    /// Mean loss across rows (the mixing constant when `mixed`).
    pub constant: f64,
}

pub fn check_complete_mixing(rows: &[Vec<f64>], tol: f64) -> MixingReport {
    if rows.is_empty() {
        return MixingReport {
            mixed: true,
            spread: 0.0,
            constant: 0.0,
        };
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut acc = KahanSum::new();
    for row in rows {
        let l: f64 = row.iter().product();
        min = min.min(l);
        max = max.max(l);
        acc.add(l);
    }
    let spread = max - min;
    MixingReport {
        mixed: spread <= tol,
        spread,
        constant: acc.value() / rows.len() as f64,
    }
}

/// Geometric-mean lower bound on per-team loss: every feasible assignment
/// has mean loss at least `(prod over all samples and columns)^(1/n)`, with
/// equality exactly when losses are completely mixed. Any zero entry makes
/// the bound exactly zero.
pub fn amgm_bound(prob: &DiscreteProblem) -> f64 {
    let n = prob.len() as f64;
    let mut log_sum = KahanSum::new();
    for col in prob.workers.iter().chain(core::iter::once(&prob.firms)) {
        for &v in col {
            if v == 0.0 {
                return 0.0;
            }
            log_sum.add(FloatExt::ln(v));
        }
    }
    FloatExt::exp(log_sum.value() / n)
}

/// General submodular technology with interaction coefficients, reducible to
/// the canonical product-loss form by a change of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechnologySpec {
    /// Coefficients on `x2 z`, `x1 z`, `x1 x2`, `x1`, `x2`, `z`, `1`.
    pub phi: [f64; 7],
}

/// Canonical form: `y = (z + s_z)(1 - (x1 + s_x1)(x2 + s_x2)) + c_x1*(x1+s_x1)
/// + c_x2*(x2+s_x2) + c_z*(z+s_z) + c_y`, pointwise equal to the general
/// technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalTechnology {
    pub shift_x1: f64,
    pub shift_x2: f64,
    pub shift_z: f64,
    pub coeff_x1: f64,
    pub coeff_x2: f64,
    pub coeff_z: f64,
    pub coeff_y: f64,
}

impl TechnologySpec {
    /// Output of the general technology.
    pub fn output(&self, x1: f64, x2: f64, z: f64) -> f64 {
        let p = &self.phi;
        z * (1.0 - x1 * x2)
            - p[0] * x2 * z
            - p[1] * x1 * z
            - p[2] * x1 * x2
            - p[3] * x1
            - p[4] * x2
            - p[5] * z
            - p[6]
    }
}

impl CanonicalTechnology {
    /// Output of the canonical form on original coordinates.
    pub fn output(&self, x1: f64, x2: f64, z: f64) -> f64 {
        let (u, v, w) = (x1 + self.shift_x1, x2 + self.shift_x2, z + self.shift_z);
        w * (1.0 - u * v) + self.coeff_x1 * u + self.coeff_x2 * v + self.coeff_z * w + self.coeff_y
    }
}

/// Change of variables from the general interaction form into canonical
/// product-loss coordinates. Requires the three interaction coefficients to
/// be nonnegative (submodularity).
pub fn normalize_technology(spec: &TechnologySpec) -> Result<CanonicalTechnology, DiscreteError> {
    let p = &spec.phi;
    if p[0] < 0.0 || p[1] < 0.0 || p[2] < 0.0 {
        return Err(DiscreteError::Invalid(
            "interaction coefficients phi_1..phi_3 must be nonnegative",
        ));
    }
    let coeff_x1 = p[1] * p[2] - p[3];
    let coeff_x2 = p[0] * p[2] - p[4];
    let coeff_z = p[0] * p[1] - p[5];
    let coeff_y = p[0] * p[1] * p[2]
        - p[0] * coeff_x1
        - p[1] * coeff_x2
        - p[2] * coeff_z
        - p[2]
        - p[6];
    Ok(CanonicalTechnology {
        shift_x1: p[0],
        shift_x2: p[1],
        shift_z: p[2],
        coeff_x1,
        coeff_x2,
        coeff_z,
        coeff_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn footnote_sample() -> DiscreteProblem {
        let v = vec![0.1, 0.2, 0.4];
        DiscreteProblem::pairs(v.clone(), v.clone(), v).unwrap()
    }

    #[test]
    fn output_loss_identities() {
        assert!((output(0.4, 0.2, 0.1) - 0.092).abs() < 1e-15);
        assert!((loss(0.4, 0.2, 0.1) - 0.008).abs() < 1e-15);
        assert_eq!(output(0.0, 0.7, 0.3), 0.3);
        assert_eq!(loss(0.0, 0.7, 0.3), 0.0);
        assert_eq!(output(1.0, 1.0, 0.9), 0.0);
        assert_eq!(loss(1.0, 1.0, 0.9), 0.9);
        // output + loss == z exactly.
        let (x1, x2, z) = (0.3127, 0.771, 0.456);
        assert_eq!(output(x1, x2, z) + loss(x1, x2, z), z);
    }

    #[test]
    fn oracle_on_three_point_sample() {
        let a = brute_force_oracle(&footnote_sample()).unwrap();
        assert!((a.aggregate_output - 0.676).abs() < 1e-12);
        assert!((a.aggregate_loss - 0.024).abs() < 1e-12);
        let rows = a.rows(&footnote_sample());
        let mix = check_complete_mixing(&rows, 1e-12);
        assert!(mix.mixed);
        assert!((mix.constant - 0.008).abs() < 1e-15);
        assert!(check_stability(&rows, 1e-12).is_empty());
    }

    #[test]
    fn alternative_assignment_is_stable_but_suboptimal() {
        let rows = vec![
            vec![0.1, 0.4, 0.4],
            vec![0.2, 0.2, 0.2],
            vec![0.4, 0.1, 0.1],
        ];
        assert!(check_stability(&rows, 1e-12).is_empty());
        assert!(check_product_countermonotonic(&rows, 1e-12).holds);
        let total_loss: f64 = rows.iter().map(|r| r.iter().product::<f64>()).sum();
        assert!((0.7 - total_loss - 0.672).abs() < 1e-12);
    }

    #[test]
    fn oracle_size_one_and_capacity() {
        let p = DiscreteProblem::pairs(vec![0.5], vec![0.5], vec![0.5]).unwrap();
        let a = brute_force_oracle(&p).unwrap();
        assert_eq!(a.perms, vec![vec![0], vec![0]]);

        let big = vec![0.1; 8];
        let p = DiscreteProblem::pairs(big.clone(), big.clone(), big).unwrap();
        match brute_force_oracle(&p) {
            Err(DiscreteError::Capacity { limit, .. }) => assert_eq!(limit, 7),
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert_eq!(enumeration_limit(3), 5);
    }

    #[test]
    fn symmetric_duplicates() {
        let p = DiscreteProblem::pairs(vec![0.3, 0.3], vec![0.3, 0.3], vec![0.3, 0.3]).unwrap();
        let a = brute_force_oracle(&p).unwrap();
        assert!((a.aggregate_output - 2.0 * 0.3 * (1.0 - 0.09)).abs() < 1e-15);
    }

    #[test]
    fn oring_objective_returns_positive_sorting() {
        let x: Vec<f64> = vec![0.1, 0.3, 0.5, 0.9];
        let p = DiscreteProblem::pairs(x.clone(), x.clone(), x).unwrap();
        let a = brute_force_oracle_with(&p, Objective::MaxLoss).unwrap();
        let id: Vec<usize> = (0..4).collect();
        assert_eq!(a.perms, vec![id.clone(), id]);
    }

    #[test]
    fn heuristic_reaches_stability() {
        let prob = footnote_sample();
        for seed in 0..6 {
            let a = rearrangement_heuristic(&prob, 100, seed);
            assert!(a.converged);
            assert!(a.aggregate_output >= 0.672 - 1e-12);
            let rows = a.rows(&prob);
            assert!(check_stability(&rows, 1e-9).is_empty());
        }
    }

    #[test]
    fn heuristic_keeps_countermonotone_pair() {
        let p = DiscreteProblem::pairs(vec![0.2, 0.8], vec![0.8, 0.2], vec![0.9, 0.1]).unwrap();
        let a = rearrangement_heuristic(&p, 10, 0);
        let rows = a.rows(&p);
        assert!(check_product_countermonotonic(&rows, 1e-12).holds);
        assert!(a.converged);
    }

    #[test]
    fn stability_catches_double_swap_gain() {
        // Comonotone pairing: swapping both workers between the two firms
        // raises output from 0.27 to 0.91.
        let rows = vec![vec![0.1, 0.1, 0.1], vec![0.9, 0.9, 0.9]];
        let violations = check_stability(&rows, 1e-12);
        assert!(!violations.is_empty());
        assert!(violations.iter().any(|v| v.split == 0b011));
        // The post-swap configuration is stable.
        let fixed = vec![vec![0.1, 0.1, 0.9], vec![0.9, 0.9, 0.1]];
        assert!(check_stability(&fixed, 1e-12).is_empty());
        // A single triplet is vacuously stable.
        assert!(check_stability(&rows[..1], 1e-12).is_empty());
    }

    #[test]
    fn countermonotonicity_matrix() {
        let optimal = vec![
            vec![0.1, 0.4, 0.2],
            vec![0.2, 0.1, 0.4],
            vec![0.4, 0.2, 0.1],
        ];
        assert!(check_product_countermonotonic(&optimal, 1e-12).holds);
        let sorted = vec![vec![0.1, 0.1, 0.1], vec![0.2, 0.2, 0.2]];
        let r = check_product_countermonotonic(&sorted, 1e-12);
        assert!(!r.holds);
        assert!(r.witness.is_some());
        assert!(check_product_countermonotonic(&sorted[..1], 1e-12).holds);
    }

    #[test]
    fn mixing_and_amgm() {
        let prob = footnote_sample();
        let bound = amgm_bound(&prob);
        assert!((bound - 0.008).abs() < 1e-15);
        let a = brute_force_oracle(&prob).unwrap();
        assert!((a.aggregate_loss / 3.0 - bound).abs() < 1e-15);

        let zero = DiscreteProblem::pairs(vec![0.0, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert_eq!(amgm_bound(&zero), 0.0);

        let single = DiscreteProblem::pairs(vec![0.3], vec![0.5], vec![0.7]).unwrap();
        assert!((amgm_bound(&single) - 0.3 * 0.5 * 0.7).abs() < 1e-16);

        let sub = vec![
            vec![0.1, 0.4, 0.4],
            vec![0.2, 0.2, 0.2],
            vec![0.4, 0.1, 0.1],
        ];
        let r = check_complete_mixing(&sub, 1e-9);
        assert!(!r.mixed);
        assert!((r.spread - 0.012).abs() < 1e-15);
        assert!(check_complete_mixing(&[], 1e-9).mixed);
    }

    #[test]
    fn technology_normalization() {
        let id = normalize_technology(&TechnologySpec { phi: [0.0; 7] }).unwrap();
        assert_eq!(
            (id.coeff_x1, id.coeff_x2, id.coeff_z, id.coeff_y),
            (0.0, 0.0, 0.0, 0.0)
        );

        let spec = TechnologySpec {
            phi: [0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0],
        };
        let c = normalize_technology(&spec).unwrap();
        assert!((c.coeff_x1 - 0.01).abs() < 1e-15);
        assert!((c.coeff_x2 - 0.01).abs() < 1e-15);
        assert!((c.coeff_z - 0.01).abs() < 1e-15);

        let spec = TechnologySpec {
            phi: [0.0, 0.0, 0.0, 0.02, 0.0, 0.0, 0.0],
        };
        let c = normalize_technology(&spec).unwrap();
        assert!((c.coeff_x1 + 0.02).abs() < 1e-15);
        assert_eq!(c.coeff_y, 0.0);

        assert!(normalize_technology(&TechnologySpec {
            phi: [-0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        })
        .is_err());
    }

    #[test]
    fn technology_pointwise_equality() {
        let spec = TechnologySpec {
            phi: [0.13, 0.05, 0.21, 0.02, 0.07, 0.011, 0.4],
        };
        let canon = normalize_technology(&spec).unwrap();
        let mut r = crate::num::rng::rng_from_seed(42);
        for _ in 0..1000 {
            let u = |r: &mut _| (crate::num::rng::gen_below(r, 1_000_001) as f64) / 1e6;
            let (x1, x2, z) = (u(&mut r), u(&mut r), u(&mut r));
            let a = spec.output(x1, x2, z);
            let b = canon.output(x1, x2, z);
            assert!((a - b).abs() <= 1e-12, "mismatch at ({x1},{x2},{z}): {a} vs {b}");
        }
    }
}
