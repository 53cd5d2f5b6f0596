//! Closed-form equilibrium: cutoff percentiles, the constant mixed-set loss,
//! marginal products, wages, and firm values.
//!
//! With a common type distribution for workers and firms, the optimal
//! assignment pairs the top percentile `[0, p_low)` of each marginal
//! countermonotonically and mixes the middle `[p_low, p_high]` at constant
//! loss `C = I(p_high)^n I(p_low)`, with `p_high = 1 - n p_low`. The lower
//! cutoff is the root of
//!
//! ```text
//! G(p) = n ln I(1-np) + ln I(p) - (n+1)/(1-(n+1)p) * ∫_p^{1-np} ln I(t) dt
//! ```
//!
//! on `(0, 1/(n+1)]`; the endpoint itself is always a root and corresponds
//! to a degenerate equilibrium with an empty mixed set. Wages integrate the
//! marginal product, `w(x) = C_w + ∫_0^x m`, and firm values integrate
//! `m + 1` with the constant `C_v` pinned by zero surplus at the triplet
//! pairing the least skilled workers with the least valuable project.

use alloc::vec::Vec;

use crate::dist::{AssumptionReport, DistError, TypeDistribution};
use crate::num::fmath::FloatExt;
use crate::num::quad::{adaptive_simpson_split, CumulativeTable};
use crate::num::roots;

/// How to treat regularity-check failures in [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssumptionMode {
    /// Fail with [`SolveError::AssumptionsViolated`].
    #[default]
    Enforce,
    /// Record the report on the solution and continue.
    Warn,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub n_workers: usize,
    /// Additive wage constant `C_w` (top earnings when inferred from data).
    pub wage_constant: f64,
    pub assumption_mode: AssumptionMode,
    /// Points in the log-spaced bracket scan of `G`.
    pub scan_points: usize,
    /// Bisection interval tolerance on the cutoff percentile.
    pub bisect_xtol: f64,
    /// Residual tolerance `|G| <= g_tol` at the accepted root.
    pub g_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n_workers: 2,
            wage_constant: 0.0,
            assumption_mode: AssumptionMode::Enforce,
            scan_points: 512,
            bisect_xtol: 1e-14,
            g_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveError {
    Dist(DistError),
    InvalidOptions(&'static str),
    /// Regularity checks failed under [`AssumptionMode::Enforce`].
    AssumptionsViolated {
        worst_violation: f64,
        location: f64,
    },
    /// No interior sign change and the endpoint is not a credible degenerate
    /// root; carries the scanned `(p, G(p))` curve for diagnosis.
    NoRoot { curve: Vec<(f64, f64)> },
}

impl core::fmt::Display for SolveError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolveError::Dist(e) => write!(f, "distribution error: {e}"),
            SolveError::InvalidOptions(msg) => write!(f, "invalid solver options: {msg}"),
            SolveError::AssumptionsViolated {
                worst_violation,
                location,
            } => write!(
                f,
                "regularity assumptions violated (worst {worst_violation:.3e} at p = {location:.6})"
            ),
            SolveError::NoRoot { curve } => write!(
                f,
                "cutoff equation has no bracketed root ({} scan points)",
                curve.len()
            ),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<DistError> for SolveError {
    fn from(e: DistError) -> Self {
        SolveError::Dist(e)
    }
}

/// A solved equilibrium; immutable, so concurrent evaluation is safe.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    dist: TypeDistribution,
    n_workers: usize,
    p_low: f64,
    p_high: f64,
    /// Constant loss on the mixed set.
    c_const: f64,
    c_w: f64,
    c_v: f64,
    mu_z: f64,
    degenerate: bool,
    assumptions: AssumptionReport,
    /// Cumulative `∫_0^x m(s) ds` in level space.
    m_cum: CumulativeTable,
}

/// Number of uniform quadrature panels for the wage integral table.
const WAGE_PANELS: usize = 4096;
/// Lower end of the bracket scan.
const SCAN_FLOOR: f64 = 1e-6;

/// Convenience wrapper returning `(p_low, p_high, C)` for the default
/// two-worker solve.
pub fn solve_cutoff(
    dist: &TypeDistribution,
    n_workers: usize,
) -> Result<(f64, f64, f64), SolveError> {
    let eq = solve(
        dist,
        &SolveOptions {
            n_workers,
            ..SolveOptions::default()
        },
    )?;
    Ok((eq.p_low(), eq.p_high(), eq.mixing_constant()))
}

/// Solves the cutoff equation and assembles the full equilibrium.
pub fn solve(dist: &TypeDistribution, opts: &SolveOptions) -> Result<EquilibriumSolution, SolveError> {
    if opts.n_workers < 2 {
        return Err(SolveError::InvalidOptions("team size must be at least 2"));
    }
    if opts.scan_points < 8 {
        return Err(SolveError::InvalidOptions("scan_points too small"));
    }
    let n = opts.n_workers as f64;
    let ub = 1.0 / (n + 1.0);

    let pre_report = dist.check_assumptions(None);
    if opts.assumption_mode == AssumptionMode::Enforce && !pre_report.l_concave_on_third {
        let v = pre_report.l_concavity_violation;
        return Err(SolveError::AssumptionsViolated {
            worst_violation: v.violation,
            location: v.location,
        });
    }

    let g_tol = |p: f64, tol: f64| -> f64 {
        let (log_own, _) = dist.log_quantile_floored(p);
        let (log_other, _) = dist.log_quantile_floored(1.0 - n * p);
        let l_branch = n * log_other + log_own;
        let width = 1.0 - n * p - p;
        let integral = dist.integral_log_quantile_tol(p, 1.0 - n * p, tol);
        l_branch - (n + 1.0) * integral / width
    };
    // Loose quadrature suffices for bracketing; the bisection refines with a
    // tight integral.
    let g_scan = |p: f64| g_tol(p, 1e-9);
    let g = |p: f64| g_tol(p, 1e-13);

    // Log-spaced scan for the first sign change from below; G tends to
    // minus infinity at the origin when I(0) = 0 and returns to zero at the
    // degenerate endpoint.
    let hi_scan = ub * (1.0 - 1e-9);
    let log_lo = FloatExt::ln(SCAN_FLOOR);
    let log_hi = FloatExt::ln(hi_scan);
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(opts.scan_points);
    for i in 0..opts.scan_points {
        let t = i as f64 / (opts.scan_points - 1) as f64;
        let p = FloatExt::exp(log_lo + t * (log_hi - log_lo));
        curve.push((p, g_scan(p)));
    }
    let mut bracket = None;
    for w in curve.windows(2) {
        let (p0, g0) = w[0];
        let (p1, g1) = w[1];
        if g0 < 0.0 && g1 >= 0.0 {
            bracket = Some((p0, p1));
            break;
        }
    }

    let (p_low, degenerate) = match bracket {
        Some((a, b)) => {
            let root = roots::bisect(g, a, b, opts.bisect_xtol, opts.g_tol)
                .map_err(|_| SolveError::NoRoot { curve: curve.clone() })?;
            (root, false)
        }
        None => {
            // All-negative scan means the interior root collapsed into the
            // endpoint, which is always a root of G: the mixed set is empty.
            if curve.iter().all(|&(_, gv)| gv < 0.0 || gv.is_nan()) {
                (ub, true)
            } else {
                return Err(SolveError::NoRoot { curve });
            }
        }
    };

    let p_high = 1.0 - n * p_low;
    let c_const = if degenerate {
        FloatExt::powi(dist.quantile_unchecked(p_low), opts.n_workers as i32 + 1)
    } else {
        let width = p_high - p_low;
        let integral = dist.integral_log_quantile(p_low, p_high);
        FloatExt::exp((n + 1.0) * integral / width)
    };

    let mut assumptions = dist.check_assumptions(Some((p_low, p_high)));
    assumptions.xfx_monotone_on_middle = assumptions
        .xfx_monotone_on_middle
        .or(Some(true));
    if opts.assumption_mode == AssumptionMode::Enforce {
        if let Some(false) = assumptions.xfx_monotone_on_middle {
            let v = assumptions.xfx_middle_violation.unwrap();
            return Err(SolveError::AssumptionsViolated {
                worst_violation: v.violation,
                location: v.location,
            });
        }
    }

    // Mean project value by parts: ∫ I dp = hi - ∫ F(x) dx, which keeps the
    // integrand in cheap CDF evaluations.
    let (lo, hi) = dist.support();
    let mu_z = hi
        - adaptive_simpson_split(
            |x| dist.cdf_clamped(x),
            lo,
            hi,
            &dist.level_breakpoints(),
            1e-13,
        );

    let m_level = |x: f64| marginal_product_level_raw(dist, opts.n_workers, p_low, p_high, c_const, x);
    let x_low = dist.quantile_unchecked(p_low);
    let x_high = dist.quantile_unchecked(p_high);
    let mut breaks = dist.level_breakpoints();
    breaks.extend_from_slice(&[x_low, x_high, lo, hi]);
    // Quantile derivatives can be singular at the support edges (beta-type
    // densities vanishing at 0 or 1), dragging m's higher derivatives with
    // them; geometrically graded panels keep the tabulated integral accurate
    // there.
    let mut scale = 0.25;
    while scale > 1e-13 {
        breaks.push(lo + scale);
        breaks.push(hi - scale);
        scale *= 0.25;
    }
    let m_cum = CumulativeTable::build(m_level, 0.0, 1.0, WAGE_PANELS, &breaks);

    // C_v makes the surplus vanish at the anchor match pairing the least
    // skilled workers (level hi) with the least valuable project (level lo).
    let y_anchor = lo * (1.0 - FloatExt::powi(hi, opts.n_workers as i32));
    let w_hi = opts.wage_constant + m_cum.eval(m_level, hi);
    let k_cum_lo = m_cum.eval(m_level, lo) + lo;
    let c_v = y_anchor - n * w_hi - k_cum_lo;

    Ok(EquilibriumSolution {
        dist: dist.clone(),
        n_workers: opts.n_workers,
        p_low,
        p_high,
        c_const,
        c_w: opts.wage_constant,
        c_v,
        mu_z,
        degenerate,
        assumptions,
        m_cum,
    })
}

fn marginal_product_level_raw(
    dist: &TypeDistribution,
    n_workers: usize,
    p_low: f64,
    p_high: f64,
    c_const: f64,
    x: f64,
) -> f64 {
    let p = dist.cdf_clamped(x.clamp(0.0, 1.0));
    marginal_product_raw(dist, n_workers, p_low, p_high, c_const, p)
}

fn marginal_product_raw(
    dist: &TypeDistribution,
    n_workers: usize,
    p_low: f64,
    p_high: f64,
    c_const: f64,
    p: f64,
) -> f64 {
    let n = n_workers as f64;
    if p <= p_low {
        let other = dist.quantile_unchecked(1.0 - n * p);
        -FloatExt::powi(other, n_workers as i32)
    } else if p < p_high {
        let own = dist.quantile_unchecked(p);
        if own <= 0.0 {
            0.0
        } else {
            -c_const / own
        }
    } else {
        let own = dist.quantile_unchecked(p);
        let firm = dist.quantile_unchecked((1.0 - p) / n);
        -FloatExt::powi(own, n_workers as i32 - 1) * firm
    }
}

impl EquilibriumSolution {
    pub fn dist(&self) -> &TypeDistribution {
        &self.dist
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    /// Lower percentile cutoff of the mixed middle.
    pub fn p_low(&self) -> f64 {
        self.p_low
    }

    /// Upper percentile cutoff, `1 - n p_low`.
    pub fn p_high(&self) -> f64 {
        self.p_high
    }

    /// Constant loss on the completely mixed set.
    pub fn mixing_constant(&self) -> f64 {
        self.c_const
    }

    pub fn wage_constant(&self) -> f64 {
        self.c_w
    }

    pub fn value_constant(&self) -> f64 {
        self.c_v
    }

    /// Mean project value.
    pub fn mean_project_value(&self) -> f64 {
        self.mu_z
    }

    /// True when the mixed set is empty (`p_low = 1/(n+1)`).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn assumption_report(&self) -> &AssumptionReport {
        &self.assumptions
    }

    /// Marginal worker product as a function of the percentile rank.
    pub fn marginal_product(&self, p: f64) -> f64 {
        marginal_product_raw(
            &self.dist,
            self.n_workers,
            self.p_low,
            self.p_high,
            self.c_const,
            p.clamp(0.0, 1.0),
        )
    }

    /// Marginal worker product at a skill level in `[0, 1]`.
    pub fn marginal_product_level(&self, x: f64) -> f64 {
        marginal_product_level_raw(
            &self.dist,
            self.n_workers,
            self.p_low,
            self.p_high,
            self.c_const,
            x,
        )
    }

    /// `∫_0^x m(s) ds`.
    pub fn marginal_product_integral(&self, x: f64) -> f64 {
        let m = |t: f64| self.marginal_product_level(t);
        self.m_cum.eval(m, x.clamp(0.0, 1.0))
    }

    /// Equilibrium wage `w(x) = C_w + ∫_0^x m`.
    pub fn wage(&self, x: f64) -> f64 {
        self.c_w + self.marginal_product_integral(x)
    }

    /// Equilibrium firm value `v(z) = C_v + ∫_0^z (m + 1)`.
    pub fn firm_value(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        self.c_v + self.marginal_product_integral(z) + z
    }

    /// Export grid: percentile, level, marginal product, wage, firm value.
    pub fn grid(&self, points: usize) -> Vec<GridRow> {
        (0..points)
            .map(|i| {
                let p = i as f64 / (points - 1) as f64;
                let level = self.dist.quantile_unchecked(p);
                GridRow {
                    p,
                    level,
                    m: self.marginal_product(p),
                    w: self.wage(level),
                    v: self.firm_value(level),
                }
            })
            .collect()
    }
}

/// One row of the equilibrium export grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub p: f64,
    pub level: f64,
    pub m: f64,
    pub w: f64,
    pub v: f64,
}
