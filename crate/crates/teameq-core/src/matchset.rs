//! The support of an optimal assignment and a constructive sampler for it.
//!
//! The support unions `n + 1` one-parameter countermonotonic branches (one
//! per worker slot, one for the firm) with a completely mixed middle where
//! the loss is pinned at the equilibrium constant. The mixed middle is known
//! to carry a measure under the joint-mixability condition; no closed-form
//! coupling exists, so the sampler discretizes each marginal into
//! equal-mass atoms and mixes them with rearrangement sweeps until the
//! row-loss spread meets tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::equilibrium::EquilibriumSolution;
use crate::num::kahan::KahanSum;
use crate::num::rng;

/// Which piece of the matching set a triplet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Countermonotonic branch for worker slot `i` (0-based).
    Worker(usize),
    /// Countermonotonic branch for low-value firms.
    Firm,
    /// Completely mixed middle.
    Mixed,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Worker(0) => "Mx1",
            Branch::Worker(1) => "Mx2",
            Branch::Worker(2) => "Mx3",
            Branch::Worker(_) => "Mx*",
            Branch::Firm => "Mz",
            Branch::Mixed => "Mixed",
        }
    }
}

/// One point of the matching set: percentile and level coordinates for the
/// worker slots (in order) and the firm (last).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchTriplet {
    pub percentiles: Vec<f64>,
    pub levels: Vec<f64>,
    pub branch: Branch,
    pub weight: f64,
}

impl MatchTriplet {
    /// Expected output loss `x_1 ... x_n z`.
    pub fn loss(&self) -> f64 {
        self.levels.iter().product()
    }

    /// Team output `z (1 - x_1 ... x_n)`.
    pub fn output(&self) -> f64 {
        let z = *self.levels.last().unwrap();
        let workers: f64 = self.levels[..self.levels.len() - 1].iter().product();
        z * (1.0 - workers)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchSetError {
    /// Percentile outside `[0, p_low]` on a countermonotonic branch.
    OutsideBranch { p: f64, p_low: f64 },
    /// The mixed middle is not a one-parameter family.
    MixedNotParametric,
    /// Level outside the mixed range `[I(p_low), I(p_high)]`.
    OutsideMixedRange { z: f64, lo: f64, hi: f64 },
    /// Bounds are stated for two-worker teams only.
    TeamSizeUnsupported { n_workers: usize },
    /// Not enough sample points requested.
    TooFewPoints,
}

impl core::fmt::Display for MatchSetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MatchSetError::OutsideBranch { p, p_low } => {
                write!(f, "percentile {p} outside the branch range [0, {p_low}]")
            }
            MatchSetError::MixedNotParametric => {
                write!(f, "the mixed middle is not a one-parameter family")
            }
            MatchSetError::OutsideMixedRange { z, lo, hi } => {
                write!(f, "level {z} outside the mixed range [{lo}, {hi}]")
            }
            MatchSetError::TeamSizeUnsupported { n_workers } => {
                write!(f, "operation defined for two-worker teams, got {n_workers}")
            }
            MatchSetError::TooFewPoints => write!(f, "too few sample points requested"),
        }
    }
}

impl core::error::Error for MatchSetError {}

/// The branch point at percentile `p ∈ [0, p_low]`: the branch coordinate
/// sits at `p`, every other coordinate at `1 - n p`.
pub fn matching_set_point(
    eq: &EquilibriumSolution,
    branch: Branch,
    p: f64,
) -> Result<MatchTriplet, MatchSetError> {
    let n = eq.n_workers();
    let slot = match branch {
        Branch::Worker(i) if i < n => i,
        Branch::Worker(_) => {
            return Err(MatchSetError::TeamSizeUnsupported { n_workers: n });
        }
        Branch::Firm => n,
        Branch::Mixed => return Err(MatchSetError::MixedNotParametric),
    };
    if !(0.0..=eq.p_low()).contains(&p) {
        return Err(MatchSetError::OutsideBranch { p, p_low: eq.p_low() });
    }
    let partner = 1.0 - n as f64 * p;
    let percentiles: Vec<f64> = (0..=n).map(|c| if c == slot { p } else { partner }).collect();
    let levels: Vec<f64> = percentiles
        .iter()
        .map(|&q| eq.dist().quantile_unchecked(q))
        .collect();
    Ok(MatchTriplet {
        percentiles,
        levels,
        branch,
        weight: 0.0,
    })
}

/// Skill interval a mixed-range firm can employ: `[I(p_low) I(p_high) / z,
/// I(p_high)]`. Two-worker teams only.
pub fn employable_bounds(eq: &EquilibriumSolution, z: f64) -> Result<(f64, f64), MatchSetError> {
    if eq.n_workers() != 2 {
        return Err(MatchSetError::TeamSizeUnsupported {
            n_workers: eq.n_workers(),
        });
    }
    let lo = eq.dist().quantile_unchecked(eq.p_low());
    let hi = eq.dist().quantile_unchecked(eq.p_high());
    if !(lo..=hi).contains(&z) {
        return Err(MatchSetError::OutsideMixedRange { z, lo, hi });
    }
    Ok((lo * hi / z, hi))
}

/// Joint-mixability certificate for the mixed middle in log coordinates.
///
/// Each marginal restricted to the middle maps to `-ln x` on the interval
/// `[-ln I(p_high), -ln I(p_low)]`; a constant-sum dependence structure
/// exists iff the mean vector clears both support-length inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    /// True when the mixed set is empty, making the check moot.
    pub vacuous: bool,
    /// Sum of support lower bounds plus the longest support.
    pub lower_bound: f64,
    /// Sum of the marginal means.
    pub mean_sum: f64,
    /// Sum of support upper bounds minus the longest support.
    pub upper_bound: f64,
    pub slack_lower: f64,
    pub slack_upper: f64,
    pub holds: bool,
}

pub fn check_existence(eq: &EquilibriumSolution) -> ExistenceReport {
    let n1 = (eq.n_workers() + 1) as f64;
    if eq.is_degenerate() {
        return ExistenceReport {
            vacuous: true,
            lower_bound: 0.0,
            mean_sum: 0.0,
            upper_bound: 0.0,
            slack_lower: 0.0,
            slack_upper: 0.0,
            holds: true,
        };
    }
    let dist = eq.dist();
    let (log_i_low, _) = dist.log_quantile_floored(eq.p_low());
    let (log_i_high, _) = dist.log_quantile_floored(eq.p_high());
    let a = -log_i_high;
    let b = -log_i_low;
    let len = b - a;
    let width = eq.p_high() - eq.p_low();
    let mu = -dist.integral_log_quantile(eq.p_low(), eq.p_high()) / width;
    let lower_bound = n1 * a + len;
    let mean_sum = n1 * mu;
    let upper_bound = n1 * b - len;
    let slack_lower = mean_sum - lower_bound;
    let slack_upper = upper_bound - mean_sum;
    ExistenceReport {
        vacuous: false,
        lower_bound,
        mean_sum,
        upper_bound,
        slack_lower,
        slack_upper,
        holds: slack_lower >= -1e-8 && slack_upper >= -1e-8,
    }
}

/// Sampler tuning knobs.
#[derive(Debug, Clone)]
pub struct SampleOptions {
    /// Relative loss-spread tolerance on the mixed middle.
    pub tol_mix: f64,
    /// Sweep budget per refinement level.
    pub max_sweeps: usize,
    /// Refinement ladder for the mixed-grid atom count; the sampler climbs
    /// it until the spread meets tolerance.
    pub refine_ladder: Vec<usize>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            tol_mix: 1e-3,
            max_sweeps: 200,
            refine_ladder: vec![1, 2, 4, 8],
        }
    }
}

/// Mixing diagnostics attached to a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MixDiagnostics {
    /// Relative loss spread achieved on the mixed middle.
    pub spread: f64,
    pub sweeps: usize,
    /// Refinement factor the sampler settled on.
    pub refine: usize,
    pub mixed_atoms: usize,
    pub existence: ExistenceReport,
}

/// Weighted triplets approximating an optimal assignment measure.
#[derive(Debug, Clone)]
pub struct AssignmentSample {
    pub triplets: Vec<MatchTriplet>,
    pub seed: u64,
    /// False when the mixed middle missed the spread tolerance.
    pub mixed_clean: bool,
    pub diagnostics: MixDiagnostics,
}

impl AssignmentSample {
    pub fn total_weight(&self) -> f64 {
        self.triplets.iter().map(|t| t.weight).collect::<KahanSum>().value()
    }

    /// Aggregate output `∫ y dπ` of the sampled measure.
    pub fn aggregate_output(&self) -> f64 {
        self.triplets
            .iter()
            .map(|t| t.weight * t.output())
            .collect::<KahanSum>()
            .value()
    }

    /// Kolmogorov–Smirnov distance between the weighted empirical marginal
    /// `coord` (workers first, firm last) and the type distribution.
    pub fn ks_distance(&self, eq: &EquilibriumSolution, coord: usize) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .triplets
            .iter()
            .map(|t| (t.levels[coord], t.weight))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = self.total_weight();
        let mut cum = 0.0;
        let mut worst: f64 = 0.0;
        for &(x, w) in &pts {
            let f = eq.dist().cdf_clamped(x);
            worst = worst.max((cum / total - f).abs());
            cum += w;
            worst = worst.max((cum / total - f).abs());
        }
        worst
    }

    /// Rows `(x_1, ..., x_n, z)` for the stability/mixing checkers.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.triplets.iter().map(|t| t.levels.clone()).collect()
    }
}

/// Samples an assignment concentrated on the matching set: stratified
/// percentile atoms on each countermonotonic branch plus a rearrangement-
/// mixed middle. Deterministic given the seed.
pub fn sample_assignment(
    eq: &EquilibriumSolution,
    m_points: usize,
    seed: u64,
) -> Result<AssignmentSample, MatchSetError> {
    sample_assignment_with(eq, m_points, seed, &SampleOptions::default())
}

pub fn sample_assignment_with(
    eq: &EquilibriumSolution,
    m_points: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<AssignmentSample, MatchSetError> {
    if m_points < 8 {
        return Err(MatchSetError::TooFewPoints);
    }
    let n = eq.n_workers();
    let p_low = eq.p_low();
    let p_high = eq.p_high();
    let existence = check_existence(eq);

    let mut triplets: Vec<MatchTriplet> = Vec::new();

    // Countermonotonic branches: stratified midpoints on [0, p_low), mass
    // p_low per branch family.
    if p_low > 0.0 {
        let k_b = libm::ceil(m_points as f64 * p_low) as usize;
        let w = p_low / k_b as f64;
        for slot in 0..=n {
            let branch = if slot < n { Branch::Worker(slot) } else { Branch::Firm };
            for j in 0..k_b {
                let p = (j as f64 + 0.5) * p_low / k_b as f64;
                let mut t = matching_set_point(eq, branch, p)?;
                t.weight = w;
                triplets.push(t);
            }
        }
    }

    // Mixed middle: equal-mass quantile atoms mixed by rearrangement
    // sweeps, refining the grid until the loss spread meets tolerance.
    let width = p_high - p_low;
    let mut diagnostics = MixDiagnostics {
        spread: 0.0,
        sweeps: 0,
        refine: 1,
        mixed_atoms: 0,
        existence: existence.clone(),
    };
    let mut mixed_clean = true;
    if !eq.is_degenerate() && width > 0.0 {
        let base = libm::ceil(m_points as f64 * width) as usize;
        let mut best: Option<(f64, usize, usize, Vec<Vec<usize>>, Vec<f64>)> = None;
        for &refine in &opts.refine_ladder {
            let k = base * refine;
            let atom_p: Vec<f64> = (0..k)
                .map(|j| p_low + (j as f64 + 0.5) * width / k as f64)
                .collect();
            let atom_log: Vec<f64> = atom_p
                .iter()
                .map(|&p| eq.dist().log_quantile_floored(p).0)
                .collect();
            let (cols, sweeps, spread) =
                mix_columns(&atom_log, n + 1, seed, opts.max_sweeps, opts.tol_mix);
            let better = match &best {
                None => true,
                Some((s, ..)) => spread < *s,
            };
            if better {
                best = Some((spread, sweeps, refine, cols, atom_p.clone()));
            }
            if spread <= opts.tol_mix {
                break;
            }
        }
        let (spread, sweeps, refine, cols, atom_p) = best.unwrap();
        mixed_clean = spread <= opts.tol_mix;
        let k = atom_p.len();
        let w = width / k as f64;
        for row in 0..k {
            let percentiles: Vec<f64> = cols.iter().map(|col| atom_p[col[row]]).collect();
            let levels: Vec<f64> = percentiles
                .iter()
                .map(|&q| eq.dist().quantile_unchecked(q))
                .collect();
            triplets.push(MatchTriplet {
                percentiles,
                levels,
                branch: Branch::Mixed,
                weight: w,
            });
        }
        diagnostics = MixDiagnostics {
            spread,
            sweeps,
            refine,
            mixed_atoms: k,
            existence,
        };
    }

    Ok(AssignmentSample {
        triplets,
        seed,
        mixed_clean,
        diagnostics,
    })
}

/// Rearrangement mixing of `d` identical columns of `values`: returns the
/// atom-index columns, the sweeps used, and the achieved row-sum spread.
fn mix_columns(
    values: &[f64],
    d: usize,
    seed: u64,
    max_sweeps: usize,
    tol: f64,
) -> (Vec<Vec<usize>>, usize, f64) {
    let k = values.len();
    let mut r = rng::rng_from_seed(seed);
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(d);
    cols.push((0..k).collect());
    for _ in 1..d {
        cols.push(rng::random_permutation(&mut r, k));
    }
    let spread_of = |cols: &[Vec<usize>]| -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in 0..k {
            let s: f64 = cols.iter().map(|c| values[c[row]]).sum();
            min = min.min(s);
            max = max.max(s);
        }
        max - min
    };
    let mut sweeps = 0;
    for sweep in 0..max_sweeps {
        let mut changed = false;
        for c in 0..d {
            // Complement sums, ascending; ties broken by row to stay
            // deterministic.
            let mut rest: Vec<(f64, usize)> = (0..k)
                .map(|row| {
                    let mut s = 0.0;
                    for (j, col) in cols.iter().enumerate() {
                        if j != c {
                            s += values[col[row]];
                        }
                    }
                    (s, row)
                })
                .collect();
            rest.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut ids = core::mem::take(&mut cols[c]);
            ids.sort_by(|&a, &b| {
                values[b]
                    .partial_cmp(&values[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut new_col = vec![0usize; k];
            for (rank, &(_, row)) in rest.iter().enumerate() {
                new_col[row] = ids[rank];
            }
            if new_col != cols[c] {
                changed = true;
            }
            cols[c] = new_col;
        }
        sweeps = sweep + 1;
        if !changed || spread_of(&cols) <= tol {
            break;
        }
    }
    let spread = spread_of(&cols);
    (cols, sweeps, spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::TypeDistribution;
    use crate::equilibrium::{solve, SolveOptions};

    fn uniform_eq() -> EquilibriumSolution {
        let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
        solve(&dist, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn branch_points() {
        let eq = uniform_eq();
        let t = matching_set_point(&eq, Branch::Worker(0), 0.0).unwrap();
        assert_eq!(t.percentiles, alloc::vec![0.0, 1.0, 1.0]);

        let t = matching_set_point(&eq, Branch::Worker(0), eq.p_low()).unwrap();
        assert_eq!(t.percentiles[1], eq.p_high());
        assert_eq!(t.percentiles[2], eq.p_high());
        assert!((t.loss() - eq.mixing_constant()).abs() < 1e-9);

        assert!(matches!(
            matching_set_point(&eq, Branch::Worker(0), eq.p_low() + 0.01),
            Err(MatchSetError::OutsideBranch { .. })
        ));
        assert!(matches!(
            matching_set_point(&eq, Branch::Mixed, 0.01),
            Err(MatchSetError::MixedNotParametric)
        ));
    }

    #[test]
    fn branch_coordinates_exact() {
        let eq = uniform_eq();
        for j in 0..20 {
            let p = eq.p_low() * j as f64 / 20.0;
            let t = matching_set_point(&eq, Branch::Worker(0), p).unwrap();
            assert_eq!(t.percentiles[1], 1.0 - 2.0 * p);
            assert_eq!(t.percentiles[2], 1.0 - 2.0 * p);
            let t = matching_set_point(&eq, Branch::Firm, p).unwrap();
            assert_eq!(t.percentiles[0], 1.0 - 2.0 * p);
            assert_eq!(t.percentiles[2], p);
        }
    }

    #[test]
    fn existence_holds_with_zero_lower_slack() {
        let eq = uniform_eq();
        let r = check_existence(&eq);
        assert!(!r.vacuous);
        assert!(r.holds);
        // The first inequality binds at the cutoff by construction.
        assert!(r.slack_lower.abs() < 1e-8, "slack_lower = {}", r.slack_lower);
        assert!(r.slack_upper >= r.slack_lower - 1e-12);
    }

    #[test]
    fn sample_weights_and_feasibility() {
        let eq = uniform_eq();
        let s = sample_assignment(&eq, 1500, 1).unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-9);
        assert!(s.mixed_clean, "spread = {}", s.diagnostics.spread);
        for c in 0..3 {
            let ks = s.ks_distance(&eq, c);
            assert!(ks <= 2.0 / libm::sqrt(1500.0), "KS({c}) = {ks}");
        }
        // Branch rows are exactly product countermonotonic; mixed rows can
        // deviate pairwise by up to C * spread^2 / 4 at mixing tolerance
        // spread, so test against that bound with slack 2.
        let branch_rows: alloc::vec::Vec<_> = s
            .triplets
            .iter()
            .filter(|t| t.branch != Branch::Mixed)
            .map(|t| t.levels.clone())
            .collect();
        assert!(crate::discrete::check_product_countermonotonic(&branch_rows, 1e-12).holds);
        let rows = s.rows();
        let tol_pc = eq.mixing_constant() * s.diagnostics.spread * s.diagnostics.spread / 2.0;
        assert!(crate::discrete::check_product_countermonotonic(&rows, tol_pc.max(1e-9)).holds);
        assert!(crate::discrete::check_stability(&rows, tol_pc.max(1e-9)).is_empty());
    }

    #[test]
    fn mixed_rows_respect_employable_bounds() {
        let eq = uniform_eq();
        let s = sample_assignment(&eq, 800, 3).unwrap();
        for t in s.triplets.iter().filter(|t| t.branch == Branch::Mixed) {
            let z = *t.levels.last().unwrap();
            let (lo, hi) = employable_bounds(&eq, z).unwrap();
            let tol = 2.0 * eq.mixing_constant();
            assert!(t.levels[0] >= lo - tol && t.levels[0] <= hi + 1e-9);
        }
    }

    #[test]
    fn branch_losses_increase_to_the_constant() {
        let eq = uniform_eq();
        let mut prev = -1.0;
        for j in 0..=50 {
            let p = eq.p_low() * j as f64 / 50.0;
            let t = matching_set_point(&eq, Branch::Firm, p).unwrap();
            let l = t.loss();
            assert!(l >= prev - 1e-12);
            prev = l;
        }
        assert!((prev - eq.mixing_constant()).abs() < 1e-9);
    }
}
