//! Recovering the type distribution from an earnings-by-percentile profile.
//!
//! An equilibrium earnings profile `e(p) = w(I(p))`, ranked in descending
//! order, identifies the quantile function: on the top branch
//! `d ln I / dp = -e'(p) / ω(p)` with
//! `ω(p) = (e(0) - e(p)) - 2 (e(1-2p) - e(1))`, the bottom branch recovers
//! `u(p) = I(1-2p)^2` from the same weight function, and the mixed middle
//! follows from `d ln I / dp = -e'(p) / C`. Integrating the product
//! `I(p) u(p) = ω(p)` resolves the divergent constant at the origin, so the
//! quadrature route needs no regularization away from `p = 0`. The cutoff
//! is selected by minimizing the fixed-point residual between the branch
//! log-loss and the mean middle log-quantile, then refined by bisection.
//!
//! Two-worker teams only; the routes are stated in that form.

use alloc::vec::Vec;

use crate::dist::{DistError, TypeDistribution};
use crate::equilibrium::EquilibriumSolution;
use crate::num::fmath::FloatExt;
use crate::num::pchip::{Pchip, PchipError};
use crate::num::quad::CumulativeTable;

/// Earnings by percentile, descending in `p` (the top earner sits at
/// `p = 0`), grid spanning `[0, 1]`.
#[derive(Debug, Clone)]
pub struct EarningsProfile {
    ps: Vec<f64>,
    es: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InferError {
    /// Fewer than 10 grid points, unsorted, or not spanning `[0, 1]`.
    BadGrid(&'static str),
    /// Earnings increase somewhere (degenerate or invalid profile).
    NotMonotone { worst: f64, location: f64 },
    /// Earnings not convex in percentile rank.
    NotConvex { worst: f64, location: f64 },
    /// The weight function hit zero inside the integration range.
    SingularWeight { location: f64 },
    /// The fixed-point residual never changes sign on the search grid.
    NoSolution { best_residual: f64, at: f64 },
    /// Recovered quantile failed to be strictly increasing.
    RecoveryNotMonotone { location: f64 },
    /// Numerical integration broke down (non-finite state).
    IntegrationFailure { location: f64 },
    Dist(DistError),
}

impl From<PchipError> for InferError {
    fn from(_: PchipError) -> Self {
        InferError::BadGrid("interpolation rejected the grid")
    }
}

impl From<DistError> for InferError {
    fn from(e: DistError) -> Self {
        InferError::Dist(e)
    }
}

impl core::fmt::Display for InferError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            InferError::BadGrid(msg) => write!(f, "invalid earnings grid: {msg}"),
            InferError::NotMonotone { worst, location } => write!(
                f,
                "earnings not decreasing (rise {worst:.3e} near p = {location:.4})"
            ),
            InferError::NotConvex { worst, location } => write!(
                f,
                "earnings not convex (dip {worst:.3e} near p = {location:.4})"
            ),
            InferError::SingularWeight { location } => {
                write!(f, "inversion weight vanished at t = {location:.6}")
            }
            InferError::NoSolution { best_residual, at } => write!(
                f,
                "no cutoff root: best residual {best_residual:.3e} at p = {at:.4}"
            ),
            InferError::RecoveryNotMonotone { location } => {
                write!(f, "recovered quantile not increasing at p = {location:.4}")
            }
            InferError::IntegrationFailure { location } => {
                write!(f, "integration failed near p = {location:.4}")
            }
            InferError::Dist(e) => write!(f, "recovered distribution invalid: {e}"),
        }
    }
}

impl core::error::Error for InferError {}

impl EarningsProfile {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, InferError> {
        if points.len() < 10 {
            return Err(InferError::BadGrid("need at least 10 grid points"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(InferError::BadGrid("percentiles must be strictly ascending"));
            }
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(InferError::BadGrid("grid must span [0, 1]"));
        }
        if points.iter().any(|&(_, e)| !e.is_finite()) {
            return Err(InferError::BadGrid("non-finite earnings"));
        }
        Ok(Self {
            ps: points.iter().map(|&(p, _)| p).collect(),
            es: points.iter().map(|&(_, e)| e).collect(),
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ps.iter().copied().zip(self.es.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ps.is_empty()
    }

    /// Earnings of the top-ranked worker, `e(0)`.
    pub fn top_earnings(&self) -> f64 {
        self.es[0]
    }

    /// Earnings of the bottom-ranked worker, `e(1)`.
    pub fn bottom_earnings(&self) -> f64 {
        *self.es.last().unwrap()
    }
}

/// Monotonicity/convexity report for a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub monotone_decreasing: bool,
    pub convex: bool,
    /// Largest increase between adjacent grid points (nonpositive if
    /// monotone).
    pub worst_increase: f64,
    pub worst_increase_at: f64,
    /// Most negative curvature proxy (second difference scaled by grid
    /// steps); nonnegative-within-tolerance means convex.
    pub worst_concavity: f64,
    pub worst_concavity_at: f64,
    pub tolerance: f64,
}

/// Checks monotone decrease and convexity by divided differences on the
/// profile's own grid. A convex, decreasing profile is exactly what an
/// equilibrium wage schedule composed with a quantile function produces, so
/// a pass means the profile is rationalizable.
pub fn check_earnings_shape(profile: &EarningsProfile) -> ShapeReport {
    let n = profile.len();
    let tol = 1e-9 * (1.0 + profile.top_earnings().abs());
    let mut worst_increase = f64::NEG_INFINITY;
    let mut worst_increase_at = 0.0;
    // Slopes on each interval.
    let mut slopes = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let dp = profile.ps[i + 1] - profile.ps[i];
        let de = profile.es[i + 1] - profile.es[i];
        slopes.push(de / dp);
        if de > worst_increase {
            worst_increase = de;
            worst_increase_at = profile.ps[i];
        }
    }
    // Convexity: slopes nondecreasing.
    let mut worst_concavity = f64::INFINITY;
    let mut worst_concavity_at = 0.0;
    for i in 0..slopes.len() - 1 {
        let d = slopes[i + 1] - slopes[i];
        if d < worst_concavity {
            worst_concavity = d;
            worst_concavity_at = profile.ps[i + 1];
        }
    }
    ShapeReport {
        monotone_decreasing: worst_increase <= tol,
        convex: worst_concavity >= -tol * 100.0,
        worst_increase,
        worst_increase_at,
        worst_concavity,
        worst_concavity_at,
        tolerance: tol,
    }
}

/// Tuning for [`infer_distribution`].
#[derive(Debug, Clone)]
pub struct InferOptions {
    /// Candidate cutoffs scanned on `(grid_lo, 1/3]`.
    pub grid_points: usize,
    pub grid_lo: f64,
    /// Quadrature panels for the bottom-branch cumulative integral.
    pub quad_panels: usize,
    /// Knots of the recovered piecewise quantile function.
    pub output_knots: usize,
}

impl Default for InferOptions {
    fn default() -> Self {
        Self {
            grid_points: 200,
            grid_lo: 0.005,
            quad_panels: 2048,
            output_knots: 513,
        }
    }
}

/// Result of the quadrature inversion route.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub dist: TypeDistribution,
    /// Wage constant, exactly the top earnings `e(0)`.
    pub c_w: f64,
    pub p_low: f64,
    /// Fixed-point residual at the selected cutoff.
    pub residual: f64,
    /// `(candidate p_low, residual)` over the search grid.
    pub residual_curve: Vec<(f64, f64)>,
}

/// Shared machinery of both inversion routes.
struct Inversion {
    e_hat: Pchip,
    e0: f64,
    e1: f64,
}

impl Inversion {
    fn new(profile: &EarningsProfile) -> Result<Self, InferError> {
        let e_hat = Pchip::new(&profile.ps, &profile.es)?;
        Ok(Self {
            e_hat,
            e0: profile.top_earnings(),
            e1: profile.bottom_earnings(),
        })
    }

    /// `ω(t) = (e(0) - e(t)) - 2 (e(1-2t) - e(1))`, the integrated weight;
    /// equals `I(t) u(t)` for a model-generated profile.
    fn omega(&self, t: f64) -> f64 {
        (self.e0 - self.e_hat.eval(t)) - 2.0 * (self.e_hat.eval(1.0 - 2.0 * t) - self.e1)
    }

    /// Integrand of `d ln u`, after substituting `t = r^2` to absorb the
    /// square-root endpoint behavior: `4 e'(1-2r^2) / ω(r^2) * 2r`.
    fn log_u_integrand(&self, r: f64) -> f64 {
        let s = r * r;
        let s_eval = s.max(1e-12);
        let om = self.omega(s_eval);
        if om <= 0.0 {
            return f64::NAN;
        }
        4.0 * self.e_hat.deriv(1.0 - 2.0 * s_eval) / om * 2.0 * r
    }
}

/// Recovers the type distribution, wage constant, and cutoff from a
/// decreasing convex earnings profile by cumulative quadrature of the
/// three-branch inversion formulas.
pub fn infer_distribution(
    profile: &EarningsProfile,
    opts: &InferOptions,
) -> Result<InferenceResult, InferError> {
    let shape = check_earnings_shape(profile);
    if !shape.monotone_decreasing {
        return Err(InferError::NotMonotone {
            worst: shape.worst_increase,
            location: shape.worst_increase_at,
        });
    }
    // A flat profile is weakly monotone but carries no skill information:
    // every worker is identical.
    if profile.top_earnings() - profile.bottom_earnings() <= shape.tolerance {
        return Err(InferError::NotMonotone {
            worst: 0.0,
            location: 0.0,
        });
    }
    if !shape.convex {
        return Err(InferError::NotConvex {
            worst: shape.worst_concavity,
            location: shape.worst_concavity_at,
        });
    }
    let inv = Inversion::new(profile)?;

    // ln u cumulative over the whole admissible branch range, computed once;
    // candidates only read it at sqrt(p).
    let r_max = FloatExt::sqrt(1.0 / 3.0);
    let g = |r: f64| inv.log_u_integrand(r);
    let table = CumulativeTable::build(g, 0.0, r_max, opts.quad_panels, &[]);
    let log_u = |q: f64| table.eval(g, FloatExt::sqrt(q));

    // Guard against vanishing weight inside the range.
    for i in 1..200 {
        let t = i as f64 / 200.0 / 3.0;
        if inv.omega(t) <= 0.0 {
            return Err(InferError::SingularWeight { location: t });
        }
    }

    let residual_at = |p_low: f64| -> f64 {
        let lu = log_u(p_low);
        if !lu.is_finite() {
            return f64::NAN;
        }
        let u = FloatExt::exp(lu);
        let i_high = FloatExt::sqrt(u);
        let i_low = inv.omega(p_low) / u;
        if !(i_low > 0.0) || !(i_high > 0.0) {
            return f64::NAN;
        }
        let c_hat = i_low * i_high * i_high;
        let p_high = 1.0 - 2.0 * p_low;
        let e_pl = inv.e_hat.eval(p_low);
        // Closed-form middle integral of ln I from the second branch.
        let int_mid = (p_high - p_low) * (FloatExt::ln(i_low) + e_pl / c_hat)
            - inv.e_hat.integrate(p_low, p_high) / c_hat;
        FloatExt::ln(c_hat) - int_mid / (1.0 / 3.0 - p_low)
    };

    let hi = 1.0 / 3.0 - 1e-6;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(opts.grid_points);
    for i in 0..opts.grid_points {
        let p = opts.grid_lo + (hi - opts.grid_lo) * i as f64 / (opts.grid_points - 1) as f64;
        curve.push((p, residual_at(p)));
    }

    // The residual vanishes structurally as the cutoff approaches 1/3 (the
    // mixed middle collapses to a point), so take the first sign change
    // scanning from the left rather than the smallest |residual|.
    let mut bracket = None;
    for w in curve.windows(2) {
        let (p0, r0) = w[0];
        let (p1, r1) = w[1];
        if r0.is_finite() && r1.is_finite() && r0 * r1 <= 0.0 {
            bracket = Some((p0, r0, p1));
            break;
        }
    }
    let Some((mut a, mut ra, mut b)) = bracket else {
        let best = curve
            .iter()
            .filter(|(_, r)| r.is_finite())
            .min_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap());
        let (at, best_residual) = best.copied().unwrap_or((f64::NAN, f64::NAN));
        return Err(InferError::NoSolution { best_residual, at });
    };
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let rm = residual_at(m);
        if !rm.is_finite() {
            break;
        }
        if (rm > 0.0) == (ra > 0.0) {
            a = m;
            ra = rm;
        } else {
            b = m;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let p_low = 0.5 * (a + b);
    let residual = residual_at(p_low);

    let dist = assemble_distribution(&inv, &log_u, p_low, opts.output_knots)?;
    Ok(InferenceResult {
        dist,
        c_w: profile.top_earnings(),
        p_low,
        residual,
        residual_curve: curve,
    })
}

fn assemble_distribution(
    inv: &Inversion,
    log_u: &dyn Fn(f64) -> f64,
    p_low: f64,
    knots: usize,
) -> Result<TypeDistribution, InferError> {
    let p_high = 1.0 - 2.0 * p_low;
    let u_pl = FloatExt::exp(log_u(p_low));
    let i_low = inv.omega(p_low) / u_pl;
    let i_high = FloatExt::sqrt(u_pl);
    let c_hat = i_low * i_high * i_high;
    let e_pl = inv.e_hat.eval(p_low);

    let value_at = |p: f64| -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        if p <= p_low {
            let u = FloatExt::exp(log_u(p));
            inv.omega(p) / u
        } else if p < p_high {
            FloatExt::exp(FloatExt::ln(i_low) - (inv.e_hat.eval(p) - e_pl) / c_hat)
        } else {
            FloatExt::sqrt(FloatExt::exp(log_u((1.0 - p) / 2.0)))
        }
    };

    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(knots + 2);
    for j in 0..knots {
        let p = j as f64 / (knots - 1) as f64;
        pts.push((p, value_at(p)));
    }
    for extra in [p_low, p_high] {
        pts.push((extra, value_at(extra)));
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);

    // Lift hairline non-monotonicity from quadrature noise; anything beyond
    // noise level is a real failure.
    let mut prev = f64::NEG_INFINITY;
    for &mut (p, ref mut v) in pts.iter_mut() {
        if *v <= prev {
            if *v < prev - 1e-8 {
                return Err(InferError::RecoveryNotMonotone { location: p });
            }
            *v = prev + 1e-13;
        }
        if !v.is_finite() {
            return Err(InferError::IntegrationFailure { location: p });
        }
        prev = *v;
    }
    // Clamp into the unit interval after lifting.
    let last = pts.len() - 1;
    for (i, (_, v)) in pts.iter_mut().enumerate() {
        if *v > 1.0 {
            if *v > 1.0 + 1e-8 && i < last {
                return Err(InferError::RecoveryNotMonotone { location: 1.0 });
            }
            *v = 1.0 - 1e-13 * (last - i) as f64;
        }
    }
    Ok(TypeDistribution::piecewise_from_knots(&pts)?)
}

/// Result of the differential-equation inversion route.
#[derive(Debug, Clone)]
pub struct OdeInferenceResult {
    pub dist: TypeDistribution,
    pub p_low: f64,
    pub eps: f64,
    /// Sup-norm deviation from the quadrature route on a dense grid.
    pub max_dev_vs_quadrature: f64,
}

/// Independent cross-check of [`infer_distribution`]: integrates
/// `d ln u / dp = 4 e'(1-2p) / (ε + ω(p))` from `u(0) = 1` and
/// `I' = -e'(p)/u(p)` from `I(0) = ε` with a fixed-step fourth-order
/// scheme, then rebuilds the distribution from the same three branches.
pub fn infer_distribution_ode(
    profile: &EarningsProfile,
    eps: f64,
) -> Result<OdeInferenceResult, InferError> {
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(InferError::BadGrid("eps must lie in (0, 1e-3]"));
    }
    let quad = infer_distribution(profile, &InferOptions::default())?;
    let inv = Inversion::new(profile)?;
    let p_low = quad.p_low;
    let p_high = 1.0 - 2.0 * p_low;

    // RK4 on (ln u, I) over [0, p_low].
    const STEPS: usize = 4000;
    let h = p_low / STEPS as f64;
    let f_log_u = |p: f64| -> f64 {
        4.0 * inv.e_hat.deriv(1.0 - 2.0 * p) / (eps + inv.omega(p))
    };
    let mut log_u_path = Vec::with_capacity(STEPS + 1);
    let mut lu = 0.0_f64;
    log_u_path.push(lu);
    for i in 0..STEPS {
        let p = i as f64 * h;
        let k1 = f_log_u(p);
        let k2 = f_log_u(p + 0.5 * h);
        let k3 = k2;
        let k4 = f_log_u(p + h);
        lu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !lu.is_finite() {
            return Err(InferError::IntegrationFailure { location: p });
        }
        log_u_path.push(lu);
    }
    let u_at = |p: f64| -> f64 {
        let t = (p / h).clamp(0.0, STEPS as f64);
        let i = (t as usize).min(STEPS - 1);
        let frac = t - i as f64;
        FloatExt::exp(log_u_path[i] * (1.0 - frac) + log_u_path[i + 1] * frac)
    };
    // I on [0, p_low] from I' = -e'(p)/u(p).
    let f_i = |p: f64| -> f64 { -inv.e_hat.deriv(p) / u_at(p) };
    let mut i_path = Vec::with_capacity(STEPS + 1);
    let mut iv = eps;
    i_path.push(iv);
    for i in 0..STEPS {
        let p = i as f64 * h;
        let k1 = f_i(p);
        let k2 = f_i(p + 0.5 * h);
        let k4 = f_i(p + h);
        iv += h / 6.0 * (k1 + 4.0 * k2 + k4);
        if !(iv > 0.0) || !iv.is_finite() {
            return Err(InferError::IntegrationFailure { location: p });
        }
        i_path.push(iv);
    }

    let i_low = *i_path.last().unwrap();
    let u_pl = u_at(p_low);
    let i_high = FloatExt::sqrt(u_pl);
    let c_hat = i_low * i_high * i_high;
    let e_pl = inv.e_hat.eval(p_low);

    let value_at = |p: f64| -> f64 {
        if p <= 0.0 {
            return eps.min(1e-9);
        }
        if p >= 1.0 {
            return 1.0;
        }
        if p <= p_low {
            let t = (p / h).clamp(0.0, STEPS as f64);
            let i = (t as usize).min(STEPS - 1);
            let frac = t - i as f64;
            i_path[i] * (1.0 - frac) + i_path[i + 1] * frac
        } else if p < p_high {
            FloatExt::exp(FloatExt::ln(i_low) - (inv.e_hat.eval(p) - e_pl) / c_hat)
        } else {
            FloatExt::sqrt(u_at((1.0 - p) / 2.0))
        }
    };

    let knots = 513;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(knots + 2);
    pts.push((0.0, 0.0));
    for j in 1..knots {
        let p = j as f64 / (knots - 1) as f64;
        pts.push((p, value_at(p).min(1.0)));
    }
    let mut prev = 0.0;
    for &mut (p, ref mut v) in pts.iter_mut().skip(1) {
        if *v <= prev {
            if *v < prev - 1e-6 {
                return Err(InferError::RecoveryNotMonotone { location: p });
            }
            *v = prev + 1e-13;
        }
        prev = *v;
    }
    if pts.last().unwrap().1 < 1.0 {
        pts.last_mut().unwrap().1 = 1.0;
    }
    let dist = TypeDistribution::piecewise_from_knots(&pts)?;

    let mut max_dev: f64 = 0.0;
    for j in 0..=400 {
        let p = j as f64 / 400.0;
        let dev = (dist.quantile_unchecked(p) - quad.dist.quantile_unchecked(p)).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(OdeInferenceResult {
        dist,
        p_low,
        eps,
        max_dev_vs_quadrature: max_dev,
    })
}

/// Percentile grid graded toward both endpoints (smootherstep), resolving
/// the steep ends of equilibrium profiles.
pub fn graded_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            t * t * (3.0 - 2.0 * t)
        })
        .collect()
}

/// Model-generated earnings profile `e(p) = w(I(p))` on the given grid.
pub fn earnings_profile(eq: &EquilibriumSolution, grid: &[f64]) -> Result<EarningsProfile, InferError> {
    if grid.len() < 10 {
        return Err(InferError::BadGrid("need at least 10 grid points"));
    }
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .map(|&p| {
            let x = eq.dist().quantile_unchecked(p.clamp(0.0, 1.0));
            (p, eq.wage(x))
        })
        .collect();
    EarningsProfile::new(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        // Affine profile: monotone and (weakly) convex.
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let p = i as f64 / 20.0;
                (p, 2.0 - p)
            })
            .collect();
        let prof = EarningsProfile::new(&pts).unwrap();
        let r = check_earnings_shape(&prof);
        assert!(r.monotone_decreasing && r.convex);

        // Concave profile must fail convexity.
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let p = i as f64 / 20.0;
                (p, 2.0 - p * p)
            })
            .collect();
        let prof = EarningsProfile::new(&pts).unwrap();
        let r = check_earnings_shape(&prof);
        assert!(r.monotone_decreasing);
        assert!(!r.convex);

        // Constant profile: rejected by the inversion with a monotonicity
        // error (every worker identical).
        let pts: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 / 20.0, 1.0)).collect();
        let prof = EarningsProfile::new(&pts).unwrap();
        assert!(matches!(
            infer_distribution(&prof, &InferOptions::default()),
            Err(InferError::NotMonotone { .. })
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(EarningsProfile::new(&[(0.0, 1.0), (1.0, 0.5)]).is_err());
        let mut pts: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 / 20.0, 1.0)).collect();
        pts[3].0 = pts[2].0;
        assert!(EarningsProfile::new(&pts).is_err());
    }
}
