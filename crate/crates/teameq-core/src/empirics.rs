//! Matched worker–firm panels, the within/between-firm variance
//! decomposition of log earnings, coworker tables, and distribution-swap
//! counterfactuals.
//!
//! A "firm" here is one matched team: the model firm employs exactly one
//! team, so panel records are sampled triplets priced by the equilibrium
//! wage schedule. The decomposition is the employment-weighted law of total
//! variance, which makes it invariant to splitting a firm into replicas.

use alloc::vec;
use alloc::vec::Vec;

use crate::discrete::{self, DiscreteError, DiscreteProblem};
use crate::dist::TypeDistribution;
use crate::equilibrium::EquilibriumSolution;
use crate::matchset::AssignmentSample;
use crate::num::fmath::FloatExt;
use crate::num::kahan::KahanSum;

#[derive(Debug, Clone, PartialEq)]
pub enum EmpiricsError {
    EmptyPanel,
    ZeroTotalWeight,
    /// Wages must stay positive to take logs; reports the smallest wage
    /// constant that would clear zero.
    NonPositiveEarnings { min_wage_constant: f64 },
    Discrete(DiscreteError),
}

impl core::fmt::Display for EmpiricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EmpiricsError::EmptyPanel => write!(f, "panel has no records"),
            EmpiricsError::ZeroTotalWeight => write!(f, "panel weights sum to zero"),
            EmpiricsError::NonPositiveEarnings { min_wage_constant } => write!(
                f,
                "nonpositive earnings; wage constant must exceed {min_wage_constant:.6}"
            ),
            EmpiricsError::Discrete(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EmpiricsError {}

impl From<DiscreteError> for EmpiricsError {
    fn from(e: DiscreteError) -> Self {
        EmpiricsError::Discrete(e)
    }
}

/// One firm: its project value, its workers' earnings, and its employment
/// share.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmRecord {
    pub firm_id: usize,
    pub z: f64,
    pub earnings: Vec<f64>,
    pub weight: f64,
}

/// Weighted matched panel with cached log earnings.
#[derive(Debug, Clone)]
pub struct MatchedPanel {
    records: Vec<FirmRecord>,
    log_earnings: Vec<Vec<f64>>,
}

impl MatchedPanel {
    /// Builds a panel, normalizing employment weights to unit mass.
    pub fn new(mut records: Vec<FirmRecord>) -> Result<Self, EmpiricsError> {
        if records.is_empty() {
            return Err(EmpiricsError::EmptyPanel);
        }
        let total: f64 = records.iter().map(|r| r.weight).collect::<KahanSum>().value();
        if !(total > 0.0) {
            return Err(EmpiricsError::ZeroTotalWeight);
        }
        let mut min_earning = f64::INFINITY;
        for r in &records {
            for &e in &r.earnings {
                min_earning = min_earning.min(e);
            }
        }
        if !(min_earning > 0.0) {
            return Err(EmpiricsError::NonPositiveEarnings {
                min_wage_constant: -min_earning,
            });
        }
        for r in records.iter_mut() {
            r.weight /= total;
        }
        let log_earnings = records
            .iter()
            .map(|r| r.earnings.iter().map(|&e| FloatExt::ln(e)).collect())
            .collect();
        Ok(Self {
            records,
            log_earnings,
        })
    }

    pub fn records(&self) -> &[FirmRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Prices every sampled triplet with the equilibrium wage schedule; one firm
/// record per triplet.
pub fn simulate_panel(
    eq: &EquilibriumSolution,
    sample: &AssignmentSample,
) -> Result<MatchedPanel, EmpiricsError> {
    let n = eq.n_workers();
    // The wage schedule is decreasing, so the least skilled worker pins the
    // minimum; report the admissible constant directly.
    let w_min = eq.wage(1.0);
    if !(w_min > 0.0) {
        return Err(EmpiricsError::NonPositiveEarnings {
            min_wage_constant: eq.wage_constant() - w_min,
        });
    }
    let records: Vec<FirmRecord> = sample
        .triplets
        .iter()
        .enumerate()
        .map(|(id, t)| FirmRecord {
            firm_id: id,
            z: t.levels[n],
            earnings: t.levels[..n].iter().map(|&x| eq.wage(x)).collect(),
            weight: t.weight,
        })
        .collect();
    MatchedPanel::new(records)
}

/// Within/between split of the variance of log earnings (log points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionResult {
    pub total: f64,
    pub between: f64,
    pub within: f64,
}

impl DecompositionResult {
    pub fn within_share(&self) -> f64 {
        self.within / self.total
    }

    pub fn between_share(&self) -> f64 {
        self.between / self.total
    }
}

/// Employment-weighted law-of-total-variance split: `Var(w_ij) =
/// Var(mean_j) + Σ_j θ_j Var(w_ij | j)`. The identity holds to rounding by
/// construction.
pub fn variance_decomposition(panel: &MatchedPanel) -> Result<DecompositionResult, EmpiricsError> {
    if panel.is_empty() {
        return Err(EmpiricsError::EmptyPanel);
    }
    let mut mean = KahanSum::new();
    for (r, logs) in panel.records.iter().zip(&panel.log_earnings) {
        let fbar: f64 = logs.iter().sum::<f64>() / logs.len() as f64;
        mean.add(r.weight * fbar);
    }
    let grand = mean.value();
    let mut between = KahanSum::new();
    let mut within = KahanSum::new();
    for (r, logs) in panel.records.iter().zip(&panel.log_earnings) {
        let nw = logs.len() as f64;
        let fbar: f64 = logs.iter().sum::<f64>() / nw;
        between.add(r.weight * (fbar - grand) * (fbar - grand));
        let var_in: f64 = logs.iter().map(|&l| (l - fbar) * (l - fbar)).sum::<f64>() / nw;
        within.add(r.weight * var_in);
    }
    let between = between.value();
    let within = within.value();
    Ok(DecompositionResult {
        total: between + within,
        between,
        within,
    })
}

/// Row of the coworker-earnings table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoworkerRow {
    /// Requested percentile of the individual earnings distribution, in
    /// `[0, 1]`, ascending rank (high percentile = high earner).
    pub percentile: f64,
    /// Mean log earnings of coworkers of workers in the band.
    pub mean_coworker_log: f64,
    /// Band half-width actually used (auto-widened when empty).
    pub half_width: f64,
    pub widened: bool,
}

/// Mean log coworker earnings around selected percentiles of the individual
/// earnings distribution; band of ±0.5 percentile, widened when empty.
pub fn coworker_table(
    panel: &MatchedPanel,
    percentiles: &[f64],
) -> Result<Vec<CoworkerRow>, EmpiricsError> {
    if panel.is_empty() {
        return Err(EmpiricsError::EmptyPanel);
    }
    // Worker-level view: own earnings, mean coworker log, weight.
    let mut workers: Vec<(f64, f64, f64)> = Vec::new();
    for (r, logs) in panel.records.iter().zip(&panel.log_earnings) {
        let nw = logs.len();
        let w = r.weight / nw as f64;
        for i in 0..nw {
            let coworker_mean = if nw == 1 {
                logs[0]
            } else {
                (logs.iter().sum::<f64>() - logs[i]) / (nw - 1) as f64
            };
            workers.push((r.earnings[i], coworker_mean, w));
        }
    }
    workers.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = workers.iter().map(|w| w.2).collect::<KahanSum>().value();
    // Midpoint percentile rank per worker.
    let mut ranks = Vec::with_capacity(workers.len());
    let mut cum = 0.0;
    for w in &workers {
        ranks.push((cum + 0.5 * w.2) / total);
        cum += w.2;
    }
    let mut rows = Vec::with_capacity(percentiles.len());
    for &q in percentiles {
        let mut half = 0.005;
        let mut widened = false;
        let (mut acc, mut mass) = (KahanSum::new(), 0.0);
        loop {
            for ((_, cw, w), &rank) in workers.iter().zip(&ranks) {
                if (rank - q).abs() <= half {
                    acc.add(w * cw);
                    mass += w;
                }
            }
            if mass > 0.0 || half >= 1.0 {
                break;
            }
            half *= 2.0;
            widened = true;
            acc = KahanSum::new();
            mass = 0.0;
        }
        rows.push(CoworkerRow {
            percentile: q,
            mean_coworker_log: if mass > 0.0 { acc.value() / mass } else { f64::NAN },
            half_width: half,
            widened,
        });
    }
    Ok(rows)
}

/// Options for the discrete counterfactual pipeline.
#[derive(Debug, Clone)]
pub struct CounterfactualOptions {
    /// Stratified atoms per marginal.
    pub n_points: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Wage constant anchoring the top earner.
    pub wage_constant: f64,
}

impl Default for CounterfactualOptions {
    fn default() -> Self {
        Self {
            n_points: 2000,
            seed: 0,
            max_sweeps: 500,
            wage_constant: 1.0,
        }
    }
}

/// Counterfactual outcome; optimality is heuristic-certified only, because
/// the closed form needs identical marginals while swaps mix distributions
/// from different years.
#[derive(Debug, Clone)]
pub struct CounterfactualResult {
    pub decomposition: DecompositionResult,
    /// True when the rearrangement converged and the assignment passed the
    /// stability check.
    pub stable: bool,
    pub heuristic_converged: bool,
    pub panel: MatchedPanel,
}

/// Matches two-worker teams drawn from `dist_workers` with firms drawn from
/// `dist_firms` through the rearrangement heuristic, prices workers by the
/// discrete analogue of the wage integral (anchored at the top earner), and
/// decomposes the resulting panel.
pub fn counterfactual(
    dist_workers: &TypeDistribution,
    dist_firms: &TypeDistribution,
    opts: &CounterfactualOptions,
) -> Result<CounterfactualResult, EmpiricsError> {
    let k = opts.n_points;
    if k < 10 {
        return Err(EmpiricsError::Discrete(DiscreteError::Invalid(
            "need at least 10 sample points",
        )));
    }
    let draw = |dist: &TypeDistribution| -> Vec<f64> {
        (0..k)
            .map(|i| dist.quantile_unchecked((i as f64 + 0.5) / k as f64))
            .collect()
    };
    let x = draw(dist_workers);
    let z = draw(dist_firms);
    let prob = DiscreteProblem::pairs(x.clone(), x, z)?;
    let assignment = discrete::rearrangement_heuristic(&prob, opts.max_sweeps, opts.seed);
    let rows = assignment.rows(&prob);
    let stable = discrete::check_stability(&rows, 1e-9).is_empty();

    // Discrete wage construction: each worker's marginal product is the
    // negative product of the other coordinates in its row; wages integrate
    // those marginal products along the pooled skill order, anchored at the
    // top (most skilled) worker.
    let mut pool: Vec<(f64, f64)> = Vec::with_capacity(2 * k); // (skill, m)
    for row in &rows {
        let (x1, x2, z) = (row[0], row[1], row[2]);
        pool.push((x1, -x2 * z));
        pool.push((x2, -x1 * z));
    }
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut wage_at = vec![0.0f64; pool.len()];
    wage_at[0] = opts.wage_constant;
    for i in 1..pool.len() {
        let (x0, m0) = pool[i - 1];
        let (x1, m1) = pool[i];
        wage_at[i] = wage_at[i - 1] + 0.5 * (m0 + m1) * (x1 - x0);
    }
    let lookup = |skill: f64| -> f64 {
        let i = pool.partition_point(|&(s, _)| s < skill);
        // Exact skill values come from the pool itself.
        wage_at[i.min(wage_at.len() - 1)]
    };

    let records: Vec<FirmRecord> = rows
        .iter()
        .enumerate()
        .map(|(id, row)| FirmRecord {
            firm_id: id,
            z: row[2],
            earnings: vec![lookup(row[0]), lookup(row[1])],
            weight: 1.0 / k as f64,
        })
        .collect();
    let panel = MatchedPanel::new(records)?;
    let decomposition = variance_decomposition(&panel)?;
    Ok(CounterfactualResult {
        decomposition,
        stable,
        heuristic_converged: assignment.converged,
        panel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel_from_logs(firms: &[(&[f64], f64)]) -> MatchedPanel {
        let records: Vec<FirmRecord> = firms
            .iter()
            .enumerate()
            .map(|(id, (logs, w))| FirmRecord {
                firm_id: id,
                z: 0.5,
                earnings: logs.iter().map(|&l| FloatExt::exp(l)).collect(),
                weight: *w,
            })
            .collect();
        MatchedPanel::new(records).unwrap()
    }

    #[test]
    fn decomposition_hand_computations() {
        // Two firms, equal weight, log earnings (1,1) and (3,3).
        let p = panel_from_logs(&[(&[1.0, 1.0], 0.5), (&[3.0, 3.0], 0.5)]);
        let d = variance_decomposition(&p).unwrap();
        assert!((d.between - 1.0).abs() < 1e-12);
        assert!(d.within.abs() < 1e-12);
        assert!((d.total - 1.0).abs() < 1e-12);

        // One firm with logs (1,3).
        let p = panel_from_logs(&[(&[1.0, 3.0], 1.0)]);
        let d = variance_decomposition(&p).unwrap();
        assert!(d.between.abs() < 1e-12);
        assert!((d.within - 1.0).abs() < 1e-12);

        // Identical earnings everywhere.
        let p = panel_from_logs(&[(&[2.0, 2.0], 0.3), (&[2.0, 2.0], 0.7)]);
        let d = variance_decomposition(&p).unwrap();
        assert!(d.total.abs() < 1e-15 && d.between.abs() < 1e-15 && d.within.abs() < 1e-15);
    }

    #[test]
    fn decomposition_identity_and_split_invariance() {
        let p = panel_from_logs(&[
            (&[1.0, 2.5], 0.2),
            (&[0.4, 0.9], 0.5),
            (&[2.0, 2.0], 0.3),
        ]);
        let d = variance_decomposition(&p).unwrap();
        assert!((d.total - (d.between + d.within)).abs() < 1e-12);

        // Split the middle firm into two half-weight replicas.
        let p2 = panel_from_logs(&[
            (&[1.0, 2.5], 0.2),
            (&[0.4, 0.9], 0.25),
            (&[0.4, 0.9], 0.25),
            (&[2.0, 2.0], 0.3),
        ]);
        let d2 = variance_decomposition(&p2).unwrap();
        assert!((d.total - d2.total).abs() < 1e-12);
        assert!((d.between - d2.between).abs() < 1e-12);
        assert!((d.within - d2.within).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_earnings_rejected_with_bound() {
        let records = vec![FirmRecord {
            firm_id: 0,
            z: 0.5,
            earnings: vec![-0.25, 1.0],
            weight: 1.0,
        }];
        match MatchedPanel::new(records) {
            Err(EmpiricsError::NonPositiveEarnings { min_wage_constant }) => {
                assert!((min_wage_constant - 0.25).abs() < 1e-15);
            }
            other => panic!("expected earnings error, got {other:?}"),
        }
    }

    #[test]
    fn coworker_table_degenerate_self_match() {
        // Every firm employs two identical workers: coworker mean equals own
        // log earnings at every percentile.
        let p = panel_from_logs(&[(&[1.0, 1.0], 0.5), (&[2.0, 2.0], 0.5)]);
        let rows = coworker_table(&p, &[0.25, 0.75]).unwrap();
        assert!((rows[0].mean_coworker_log - 1.0).abs() < 1e-12);
        assert!((rows[1].mean_coworker_log - 2.0).abs() < 1e-12);
    }
}
