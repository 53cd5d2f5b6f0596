//! Dual certificates: surplus sweeps, duality gaps, and cumulative log-loss
//! curves.
//!
//! The wage/value pair certifies an assignment when the surplus
//! `S = y - Σ w(x_i) - v(z)` is nonpositive everywhere on the cube and zero
//! on the support of the assignment, and the primal and dual objectives
//! agree. Cumulative sorted log-loss (Karamata) curves give the comparison
//! argument: the optimal assignment's curve dominates every feasible
//! rearrangement pointwise while sharing its endpoint.

use alloc::vec::Vec;

use crate::equilibrium::EquilibriumSolution;
use crate::matchset::AssignmentSample;
use crate::num::fmath::FloatExt;
use crate::num::kahan::KahanSum;
use crate::num::quad::adaptive_simpson_split;

/// Surplus of a candidate match: output minus all payments.
pub fn surplus(eq: &EquilibriumSolution, workers: &[f64], z: f64) -> f64 {
    debug_assert_eq!(workers.len(), eq.n_workers());
    let product: f64 = workers.iter().product();
    let mut paid = KahanSum::new();
    for &x in workers {
        paid.add(eq.wage(x));
    }
    paid.add(eq.firm_value(z));
    z * (1.0 - product) - paid.value()
}

/// Certificate tolerances.
#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    /// Surplus tolerance; defaults to `1e-6 * max(1, |C_w|)`.
    pub tol_surplus: Option<f64>,
    /// Sampling duality-gap tolerance.
    pub tol_gap: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            tol_surplus: None,
            tol_gap: 1e-3,
        }
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub grid_per_axis: usize,
    /// Largest surplus over the level-space lattice (should be <= tol).
    pub max_surplus_on_grid: f64,
    /// Lattice point attaining it, workers first then firm.
    pub argmax_grid: Vec<f64>,
    /// Largest |surplus| over the sample triplets (complementary slackness).
    pub max_abs_surplus_on_support: f64,
    /// |primal - dual| with the primal integrated from the sampled measure.
    pub duality_gap_sampling: f64,
    /// |primal - dual| with the primal integrated in closed form over the
    /// branches and the constant-loss middle; isolates dual error from
    /// sampler construction error.
    pub duality_gap_quadrature: f64,
    pub dual_value: f64,
    pub tol_surplus: f64,
    pub tol_gap: f64,
    pub pass: bool,
}

/// Evaluates the dual certificate on a `grid_per_axis^(n+1)` level lattice
/// plus all sample triplets, and computes both duality gaps.
pub fn verify_certificate(
    eq: &EquilibriumSolution,
    sample: &AssignmentSample,
    grid_per_axis: usize,
    opts: &CertificateOptions,
) -> CertificateReport {
    let n = eq.n_workers();
    let tol_surplus = opts
        .tol_surplus
        .unwrap_or_else(|| 1e-6 * eq.wage_constant().abs().max(1.0));

    // Payments repeat along lattice axes; precompute per-axis tables.
    let axis: Vec<f64> = (0..grid_per_axis)
        .map(|i| i as f64 / (grid_per_axis - 1) as f64)
        .collect();
    let w_axis: Vec<f64> = axis.iter().map(|&x| eq.wage(x)).collect();
    let v_axis: Vec<f64> = axis.iter().map(|&z| eq.firm_value(z)).collect();

    let mut max_surplus = f64::NEG_INFINITY;
    let mut argmax = alloc::vec![0.0; n + 1];
    let mut idx = alloc::vec![0usize; n + 1];
    loop {
        let z = axis[idx[n]];
        let mut product = 1.0;
        let mut paid = v_axis[idx[n]];
        for &i in &idx[..n] {
            product *= axis[i];
            paid += w_axis[i];
        }
        let s = z * (1.0 - product) - paid;
        if s > max_surplus {
            max_surplus = s;
            for (slot, &i) in idx.iter().enumerate() {
                argmax[slot] = axis[i];
            }
        }
        // Odometer over the lattice.
        let mut carry = 0;
        while carry <= n {
            idx[carry] += 1;
            if idx[carry] < grid_per_axis {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry > n {
            break;
        }
    }

    let mut max_abs_support: f64 = 0.0;
    for t in &sample.triplets {
        let s = surplus(eq, &t.levels[..n], t.levels[n]);
        max_abs_support = max_abs_support.max(s.abs());
    }

    let dual_value = dual_objective(eq);
    let primal_sample = sample.aggregate_output();
    let primal_quadrature = primal_objective_quadrature(eq);
    let duality_gap_sampling = (primal_sample - dual_value).abs();
    let duality_gap_quadrature = (primal_quadrature - dual_value).abs();

    let pass = max_surplus <= tol_surplus
        && max_abs_support <= tol_surplus
        && duality_gap_sampling <= opts.tol_gap;
    CertificateReport {
        grid_per_axis,
        max_surplus_on_grid: max_surplus,
        argmax_grid: argmax,
        max_abs_surplus_on_support: max_abs_support,
        duality_gap_sampling,
        duality_gap_quadrature,
        dual_value,
        tol_surplus,
        tol_gap: opts.tol_gap,
        pass,
    }
}

/// Dual objective `n ∫ w dF + ∫ v dF` integrated in percentile space.
pub fn dual_objective(eq: &EquilibriumSolution) -> f64 {
    let mut breaks = eq.dist().percentile_breakpoints();
    breaks.push(eq.p_low());
    breaks.push(eq.p_high());
    let w_int = adaptive_simpson_split(
        |p| eq.wage(eq.dist().quantile_unchecked(p)),
        0.0,
        1.0,
        &breaks,
        1e-12,
    );
    let v_int = adaptive_simpson_split(
        |p| eq.firm_value(eq.dist().quantile_unchecked(p)),
        0.0,
        1.0,
        &breaks,
        1e-12,
    );
    eq.n_workers() as f64 * w_int + v_int
}

/// Primal objective `∫ y dπ` integrated in closed form over the matching
/// set: exact branch parameterization plus the constant-loss middle.
pub fn primal_objective_quadrature(eq: &EquilibriumSolution) -> f64 {
    let n = eq.n_workers() as f64;
    let dist = eq.dist();
    let p_low = eq.p_low();
    let p_high = eq.p_high();

    // Branch loss is identical across the n+1 families; output differs only
    // through the firm coordinate: I(1-np) on worker branches, I(p) on the
    // firm branch.
    let branch_output = adaptive_simpson_split(
        |p| {
            let own = dist.quantile_unchecked(p);
            let other = dist.quantile_unchecked(1.0 - n * p);
            let loss = own * FloatExt::powf(other, n);
            let z_workers = other * n;
            let z_firm = own;
            z_workers + z_firm - (n + 1.0) * loss
        },
        0.0,
        p_low,
        &dist.percentile_breakpoints(),
        1e-12,
    );
    let mixed_z = adaptive_simpson_split(
        |p| dist.quantile_unchecked(p),
        p_low,
        p_high,
        &dist.percentile_breakpoints(),
        1e-12,
    );
    let mixed_output = mixed_z - eq.mixing_constant() * (p_high - p_low);
    branch_output + mixed_output
}

#[derive(Debug, Clone, PartialEq)]
pub enum KaramataError {
    /// Every loss was zero; the log-loss curve is unbounded below.
    DegenerateCurve,
    Empty,
}

impl core::fmt::Display for KaramataError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KaramataError::DegenerateCurve => write!(f, "all losses are zero"),
            KaramataError::Empty => write!(f, "no losses supplied"),
        }
    }
}

impl core::error::Error for KaramataError {}

/// Cumulative integral of sorted log losses: `S(t) = ∫_0^t ln I_γ(p) dp`
/// where `I_γ` is the quantile function of the weighted loss distribution.
/// Piecewise linear in `t` with slope `ln(loss)` on each atom.
#[derive(Debug, Clone)]
pub struct KaramataCurve {
    /// `(t, S(t))` at atom boundaries, starting at `(0, 0)`.
    pub breakpoints: Vec<(f64, f64)>,
    /// Log-loss slope on each segment.
    slopes: Vec<f64>,
    /// Mass dropped because the loss was exactly zero.
    pub excluded_mass: f64,
}

impl KaramataCurve {
    /// Total retained mass (the curve's domain endpoint).
    pub fn total_mass(&self) -> f64 {
        self.breakpoints.last().unwrap().0
    }

    /// `S(t)`, clamped to the retained-mass domain.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_mass());
        let i = match self
            .breakpoints
            .binary_search_by(|probe| probe.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.breakpoints[i].1,
            Err(i) => i.clamp(1, self.breakpoints.len() - 1) - 1,
        };
        let (t0, s0) = self.breakpoints[i];
        s0 + (t - t0) * self.slopes[i.min(self.slopes.len() - 1)]
    }
}

/// Builds the curve from weighted losses. Zero-loss atoms are excluded and
/// their mass recorded; an all-zero input is an error.
pub fn karamata_curve(losses: &[(f64, f64)]) -> Result<KaramataCurve, KaramataError> {
    if losses.is_empty() {
        return Err(KaramataError::Empty);
    }
    let mut excluded = KahanSum::new();
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(losses.len());
    for &(loss, w) in losses {
        if loss == 0.0 {
            excluded.add(w);
        } else {
            atoms.push((loss, w));
        }
    }
    if atoms.is_empty() {
        return Err(KaramataError::DegenerateCurve);
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut breakpoints = Vec::with_capacity(atoms.len() + 1);
    let mut slopes = Vec::with_capacity(atoms.len());
    breakpoints.push((0.0, 0.0));
    let mut t = KahanSum::new();
    let mut s = KahanSum::new();
    for &(loss, w) in &atoms {
        let slope = FloatExt::ln(loss);
        t.add(w);
        s.add(w * slope);
        slopes.push(slope);
        breakpoints.push((t.value(), s.value()));
    }
    Ok(KaramataCurve {
        breakpoints,
        slopes,
        excluded_mass: excluded.value(),
    })
}
