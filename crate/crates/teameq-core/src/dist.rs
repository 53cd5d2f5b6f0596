//! Type distributions on the unit interval.
//!
//! Worker skill and project value share a single distribution `F` with
//! density `f` and inverse (quantile function) `I`. Three kinds are
//! supported: uniform, beta, and an empirical piecewise-linear quantile
//! function stored as `(percentile, level)` knots. Percentile knots are the
//! native parameterization here because the downstream closed forms and the
//! earnings inversion all work in `log I(p)`.

use alloc::vec::Vec;

use crate::num::fmath::FloatExt;
use crate::num::quad::adaptive_simpson_split;
use crate::num::special;

/// Floor applied to quantile values before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// Grid resolution for the regularity checks.
const ASSUMPTION_GRID: usize = 2000;
/// Tolerance on first/second differences in the regularity checks.
const ASSUMPTION_TOL: f64 = 1e-9;

/// Which functional of the distribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// Cumulative distribution function.
    Cdf,
    /// Density.
    Pdf,
    /// Quantile function (inverse CDF).
    Quantile,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistError {
    /// Parameters violate the constructor's constraints.
    InvalidParameters(&'static str),
    /// Knot list not strictly ascending in both coordinates, or outside
    /// the unit square, or missing the 0/1 endpoints.
    InvalidKnots { index: usize, reason: &'static str },
    /// Argument outside the domain of the requested functional.
    OutOfDomain { arg: f64, lo: f64, hi: f64 },
}

impl core::fmt::Display for DistError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DistError::InvalidParameters(msg) => write!(f, "invalid distribution parameters: {msg}"),
            DistError::InvalidKnots { index, reason } => {
                write!(f, "invalid quantile knots at index {index}: {reason}")
            }
            DistError::OutOfDomain { arg, lo, hi } => {
                write!(f, "argument {arg} outside domain [{lo}, {hi}]")
            }
        }
    }
}

impl core::error::Error for DistError {}

#[derive(Debug, Clone)]
enum Kind {
    Uniform {
        a: f64,
        b: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
        /// CDF tabulated on a uniform level grid; brackets and seeds the
        /// Newton inversion so quantile evaluation costs a couple of
        /// incomplete-beta calls instead of a cold search.
        cdf_knots: Vec<f64>,
    },
    /// Strictly increasing `(p, I(p))` knots spanning p = 0..1; `I` is linear
    /// between knots, so the density is piecewise constant in levels.
    Piecewise {
        knots: Vec<(f64, f64)>,
    },
}

/// Resolution of the beta CDF bracket table.
const BETA_TABLE: usize = 2048;

/// An immutable distribution on `[0, 1]`; all evaluation is pure, so shared
/// references are safe across threads.
#[derive(Debug, Clone)]
pub struct TypeDistribution {
    kind: Kind,
    lo: f64,
    hi: f64,
}

impl TypeDistribution {
    /// Uniform on `[a, b] ⊆ [0, 1]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self, DistError> {
        if !a.is_finite() || !b.is_finite() || !(a < b) || a < 0.0 || b > 1.0 {
            return Err(DistError::InvalidParameters("uniform needs 0 <= a < b <= 1"));
        }
        Ok(Self {
            kind: Kind::Uniform { a, b },
            lo: a,
            hi: b,
        })
    }

    /// Beta(α, β) on `[0, 1]`.
    pub fn beta(alpha: f64, beta: f64) -> Result<Self, DistError> {
        if !(alpha > 0.0) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(DistError::InvalidParameters("beta needs alpha, beta > 0"));
        }
        let cdf_knots: Vec<f64> = (0..=BETA_TABLE)
            .map(|i| special::inc_beta(alpha, beta, i as f64 / BETA_TABLE as f64))
            .collect();
        Ok(Self {
            kind: Kind::Beta {
                alpha,
                beta,
                cdf_knots,
            },
            lo: 0.0,
            hi: 1.0,
        })
    }

    /// Piecewise-linear quantile function from `(percentile, level)` knots.
    /// Knots must start at `p = 0`, end at `p = 1`, and be strictly
    /// increasing in both coordinates with levels inside `[0, 1]`.
    pub fn piecewise_from_knots(knots: &[(f64, f64)]) -> Result<Self, DistError> {
        if knots.len() < 2 {
            return Err(DistError::InvalidKnots {
                index: 0,
                reason: "need at least two knots",
            });
        }
        for (i, &(p, v)) in knots.iter().enumerate() {
            if !p.is_finite() || !v.is_finite() {
                return Err(DistError::InvalidKnots {
                    index: i,
                    reason: "non-finite knot",
                });
            }
            if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&v) {
                return Err(DistError::InvalidKnots {
                    index: i,
                    reason: "knot outside unit square",
                });
            }
            if i > 0 && (p <= knots[i - 1].0 || v <= knots[i - 1].1) {
                return Err(DistError::InvalidKnots {
                    index: i,
                    reason: "knots must be strictly increasing in p and level",
                });
            }
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(DistError::InvalidKnots {
                index: 0,
                reason: "percentile knots must span [0, 1]",
            });
        }
        let lo = knots[0].1;
        let hi = knots[knots.len() - 1].1;
        Ok(Self {
            kind: Kind::Piecewise {
                knots: knots.to_vec(),
            },
            lo,
            hi,
        })
    }

    /// Support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Knot list for piecewise distributions, `None` otherwise.
    pub fn knots(&self) -> Option<&[(f64, f64)]> {
        match &self.kind {
            Kind::Piecewise { knots } => Some(knots),
            _ => None,
        }
    }

    /// Unified evaluation entry point.
    pub fn eval(&self, what: Functional, t: f64) -> Result<f64, DistError> {
        match what {
            Functional::Cdf => self.cdf(t),
            Functional::Pdf => self.pdf(t),
            Functional::Quantile => self.quantile(t),
        }
    }

    /// CDF at a level inside the support.
    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(DistError::OutOfDomain {
                arg: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.cdf_unchecked(x))
    }

    /// CDF extended by 0 below and 1 above the support; used by evaluators
    /// that sweep the whole unit cube.
    pub fn cdf_clamped(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            self.cdf_unchecked(x)
        }
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { a, b } => (x - a) / (b - a),
            Kind::Beta { alpha, beta, .. } => special::inc_beta(*alpha, *beta, x),
            Kind::Piecewise { knots } => {
                // Locate the segment containing level x and invert linearly.
                let i = match knots
                    .binary_search_by(|&(_, v)| v.partial_cmp(&x).unwrap())
                {
                    Ok(i) => return knots[i].0,
                    Err(i) => i.clamp(1, knots.len() - 1) - 1,
                };
                let (p0, v0) = knots[i];
                let (p1, v1) = knots[i + 1];
                p0 + (p1 - p0) * (x - v0) / (v1 - v0)
            }
        }
    }

    /// Density at a level inside the support. Piecewise quantiles give a
    /// piecewise-constant density (reciprocal segment slope).
    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(DistError::OutOfDomain {
                arg: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(match &self.kind {
            Kind::Uniform { a, b } => 1.0 / (b - a),
            Kind::Beta { alpha, beta, .. } => special::beta_pdf(*alpha, *beta, x),
            Kind::Piecewise { knots } => {
                let i = match knots
                    .binary_search_by(|&(_, v)| v.partial_cmp(&x).unwrap())
                {
                    Ok(i) => i.min(knots.len() - 2),
                    Err(i) => i.clamp(1, knots.len() - 1) - 1,
                };
                let (p0, v0) = knots[i];
                let (p1, v1) = knots[i + 1];
                (p1 - p0) / (v1 - v0)
            }
        })
    }

    /// Quantile function `I(p)` for `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DistError::OutOfDomain {
                arg: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { a, b } => a + (b - a) * p,
            Kind::Beta {
                alpha,
                beta,
                cdf_knots,
            } => beta_quantile_seeded(*alpha, *beta, cdf_knots, p),
            Kind::Piecewise { knots } => {
                let i = match knots
                    .binary_search_by(|&(q, _)| q.partial_cmp(&p).unwrap())
                {
                    Ok(i) => return knots[i].1,
                    Err(i) => i.clamp(1, knots.len() - 1) - 1,
                };
                let (p0, v0) = knots[i];
                let (p1, v1) = knots[i + 1];
                v0 + (v1 - v0) * (p - p0) / (p1 - p0)
            }
        }
    }

    /// `ln I(p)` with the [`LOG_FLOOR`] applied; the boolean reports whether
    /// the floor was hit.
    pub fn log_quantile_floored(&self, p: f64) -> (f64, bool) {
        let v = self.quantile_unchecked(p.clamp(0.0, 1.0));
        if v < LOG_FLOOR {
            (FloatExt::ln(LOG_FLOOR), true)
        } else {
            (FloatExt::ln(v), false)
        }
    }

    /// Logarithmic loss on the countermonotonic branches for two-worker
    /// teams: `L(p) = 2 ln I(1-2p) + ln I(p)`, `p ∈ (0, 1/3]`. Returns
    /// negative infinity when `I(p) = 0` or `I(1-2p) = 0` exactly.
    pub fn log_loss_l(&self, p: f64) -> Result<f64, DistError> {
        self.log_loss_n(p, 2)
    }

    /// Generalized branch log-loss `L_n(p) = n ln I(1-np) + ln I(p)` for
    /// teams of `n` workers, `p ∈ (0, 1/(n+1)]`.
    pub fn log_loss_n(&self, p: f64, n_workers: usize) -> Result<f64, DistError> {
        let ub = 1.0 / (n_workers as f64 + 1.0);
        if !(p > 0.0 && p <= ub) {
            return Err(DistError::OutOfDomain { arg: p, lo: 0.0, hi: ub });
        }
        let own = self.quantile_unchecked(p);
        let other = self.quantile_unchecked(1.0 - n_workers as f64 * p);
        if own == 0.0 || other == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(n_workers as f64 * FloatExt::ln(other) + FloatExt::ln(own))
    }

    /// `∫_a^b ln I(p) dp`. Exact segment-by-segment closed form for the
    /// piecewise kind; adaptive quadrature otherwise. Quantile values are
    /// floored at [`LOG_FLOOR`] inside the logarithm.
    pub fn integral_log_quantile(&self, a: f64, b: f64) -> f64 {
        self.integral_log_quantile_tol(a, b, 1e-13)
    }

    /// [`Self::integral_log_quantile`] with an explicit quadrature
    /// tolerance; scans can afford looser integrals than root polishing.
    ///
    /// For parametric kinds the integral is computed in level space,
    /// `∫ ln(x) f(x) dx` between the endpoint quantiles, so the integrand
    /// needs only density evaluations.
    pub fn integral_log_quantile_tol(&self, a: f64, b: f64, tol: f64) -> f64 {
        match &self.kind {
            Kind::Piecewise { knots } => {
                if a == b {
                    return 0.0;
                }
                if a > b {
                    return -self.integral_log_quantile(b, a);
                }
                let mut total = 0.0;
                for w in knots.windows(2) {
                    let (p0, v0) = w[0];
                    let (p1, v1) = w[1];
                    let lo = p0.max(a);
                    let hi = p1.min(b);
                    if lo >= hi {
                        continue;
                    }
                    let slope = (v1 - v0) / (p1 - p0);
                    let u_lo = (v0 + slope * (lo - p0)).max(LOG_FLOOR);
                    let u_hi = (v0 + slope * (hi - p0)).max(LOG_FLOOR);
                    // ∫ ln u dp = (u ln u - u) / slope between levels.
                    let prim = |u: f64| u * FloatExt::ln(u) - u;
                    total += (prim(u_hi) - prim(u_lo)) / slope;
                }
                total
            }
            _ => {
                if a == b {
                    return 0.0;
                }
                if a > b {
                    return -self.integral_log_quantile_tol(b, a, tol);
                }
                let xa = self.quantile_unchecked(a);
                let xb = self.quantile_unchecked(b);
                let integrand = |x: f64| {
                    let v = FloatExt::ln(x.max(LOG_FLOOR)) * self.pdf_unchecked(x);
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                };
                adaptive_simpson_split(integrand, xa, xb, &[], tol)
            }
        }
    }

    fn pdf_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { a, b } => {
                if (*a..=*b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Kind::Beta { alpha, beta, .. } => special::beta_pdf(*alpha, *beta, x),
            Kind::Piecewise { .. } => self.pdf(x.clamp(self.lo, self.hi)).unwrap_or(0.0),
        }
    }

    /// Interior percentile breakpoints where evaluators change analytic
    /// piece (piecewise knot percentiles); empty for smooth kinds.
    pub fn percentile_breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Piecewise { knots } => knots[1..knots.len() - 1].iter().map(|&(p, _)| p).collect(),
            _ => Vec::new(),
        }
    }

    /// Interior level breakpoints (piecewise knot levels).
    pub fn level_breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Piecewise { knots } => knots[1..knots.len() - 1].iter().map(|&(_, v)| v).collect(),
            _ => Vec::new(),
        }
    }

    /// Tests the regularity conditions the closed-form solution relies on:
    /// `x f(x)` nondecreasing (globally, and on the mixed middle when
    /// cutoffs are supplied) and concavity of the branch log-loss `L` on
    /// `(0, 1/3]`. Reports violations instead of failing.
    pub fn check_assumptions(&self, cutoffs: Option<(f64, f64)>) -> AssumptionReport {
        let xfx = self.worst_xfx_violation(0.0, 1.0);
        let xfx_middle = cutoffs.map(|(p_low, p_high)| self.worst_xfx_violation(p_low, p_high));
        let l_conc = self.worst_l_concavity_violation();
        AssumptionReport {
            xfx_monotone: xfx.violation <= ASSUMPTION_TOL,
            xfx_monotone_on_middle: xfx_middle
                .as_ref()
                .map(|v| v.violation <= ASSUMPTION_TOL),
            l_concave_on_third: l_conc.violation <= ASSUMPTION_TOL,
            xfx_violation: xfx,
            xfx_middle_violation: xfx_middle,
            l_concavity_violation: l_conc,
            tolerance: ASSUMPTION_TOL,
        }
    }

    fn worst_xfx_violation(&self, p_lo: f64, p_hi: f64) -> Violation {
        let mut worst = Violation { violation: f64::NEG_INFINITY, location: p_lo };
        let mut prev: Option<f64> = None;
        for i in 0..ASSUMPTION_GRID {
            let p = p_lo + (p_hi - p_lo) * (i as f64 + 0.5) / ASSUMPTION_GRID as f64;
            let x = self.quantile_unchecked(p);
            let f = match self.pdf(x.clamp(self.lo, self.hi)) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let xfx = x * f;
            if !xfx.is_finite() {
                prev = None;
                continue;
            }
            if let Some(prev_v) = prev {
                let drop = prev_v - xfx;
                if drop > worst.violation {
                    worst = Violation { violation: drop, location: p };
                }
            }
            prev = Some(xfx);
        }
        worst
    }

    fn worst_l_concavity_violation(&self) -> Violation {
        const EPS_P: f64 = 1e-4;
        let lo = EPS_P;
        let hi = 1.0 / 3.0;
        let h = (hi - lo) / (ASSUMPTION_GRID - 1) as f64;
        let mut worst = Violation { violation: f64::NEG_INFINITY, location: lo };
        let l_at = |p: f64| -> f64 {
            let (a, _) = self.log_quantile_floored(1.0 - 2.0 * p);
            let (b, _) = self.log_quantile_floored(p);
            2.0 * a + b
        };
        let mut l0 = l_at(lo);
        let mut l1 = l_at(lo + h);
        for i in 2..ASSUMPTION_GRID {
            let p2 = lo + h * i as f64;
            let l2 = l_at(p2.min(hi));
            // Concavity: second difference nonpositive.
            let second = l2 - 2.0 * l1 + l0;
            if second > worst.violation {
                worst = Violation { violation: second, location: p2 - h };
            }
            l0 = l1;
            l1 = l2;
        }
        worst
    }
}

/// Quantile of a beta distribution: bracket from the tabulated CDF, then a
/// few safeguarded Newton steps on `F(x) = p`.
fn beta_quantile_seeded(alpha: f64, beta: f64, cdf_knots: &[f64], p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let n = cdf_knots.len() - 1;
    let idx = match cdf_knots.binary_search_by(|probe| probe.partial_cmp(&p).unwrap()) {
        Ok(i) => return i as f64 / n as f64,
        Err(i) => i.clamp(1, n) - 1,
    };
    let mut lo = idx as f64 / n as f64;
    let mut hi = (idx + 1) as f64 / n as f64;
    let (f_lo, f_hi) = (cdf_knots[idx], cdf_knots[idx + 1]);
    let mut x = if f_hi > f_lo {
        lo + (hi - lo) * (p - f_lo) / (f_hi - f_lo)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..80 {
        let fx = special::inc_beta(alpha, beta, x) - p;
        if FloatExt::abs(fx) <= 1e-15 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dfx = special::beta_pdf(alpha, beta, x);
        let mut next = if dfx > 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            0.5 * (lo + hi)
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        // Stall on the residual, not the step: singular densities make
        // steps microscopic while the CDF error is still large.
        if FloatExt::abs(next - x) < 1e-17 * (1.0 + x) {
            return next;
        }
        x = next;
    }
    x
}

/// Worst violation and the percentile where it occurred; nonpositive values
/// mean the property held on the grid.
#[derive(Debug, Clone, Copy)]
pub struct Violation {
    pub violation: f64,
    pub location: f64,
}

/// Outcome of [`TypeDistribution::check_assumptions`].
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub xfx_monotone: bool,
    /// Present only when cutoffs were supplied.
    pub xfx_monotone_on_middle: Option<bool>,
    pub l_concave_on_third: bool,
    pub xfx_violation: Violation,
    pub xfx_middle_violation: Option<Violation>,
    pub l_concavity_violation: Violation,
    pub tolerance: f64,
}

impl AssumptionReport {
    /// Largest violation across the performed checks.
    pub fn worst_violation(&self) -> Violation {
        let mut worst = self.xfx_violation;
        if let Some(v) = self.xfx_middle_violation {
            if v.violation > worst.violation {
                worst = v;
            }
        }
        if self.l_concavity_violation.violation > worst.violation {
            worst = self.l_concavity_violation;
        }
        worst
    }
}
