//! Simpson quadrature: adaptive panels for one-off integrals and cumulative
//! tables for repeated antiderivative evaluation.

use alloc::vec::Vec;

use super::kahan::KahanSum;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
        return left + right + delta / 15.0;
    }
    // Subdivide the budget but never below rounding noise of the panel
    // values themselves, or singular integrands recurse to the depth cap.
    let child = (0.5 * tol).max(4.0e-16 * (left.abs() + right.abs()));
    adapt(f, a, m, fa, flm, fm, left, child, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, child, depth - 1)
}

/// Adaptive Simpson integral of `f` over `[a, b]` to absolute tolerance
/// `tol`. Non-finite integrand values (integrable endpoint singularities)
/// are treated as zero and resolved by panel refinement; recursion is capped
/// at depth 48.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let sf = move |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let m = 0.5 * (a + b);
    let fa = sf(a);
    let fm = sf(m);
    let fb = sf(b);
    let whole = simpson(fa, fm, fb, b - a);
    adapt(&sf, a, b, fa, fm, fb, whole, tol, 48)
}

/// Adaptive Simpson with interior breakpoints where the integrand has kinks;
/// each smooth piece is integrated separately. Breakpoints outside `(a, b)`
/// are ignored, and `a > b` flips the sign.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson_split(f, b, a, breakpoints, tol);
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = KahanSum::new();
    let mut lo = a;
    for cut in cuts.into_iter().chain(core::iter::once(b)) {
        total.add(adaptive_simpson(&f, lo, cut, tol));
        lo = cut;
    }
    total.value()
}

/// Cumulative antiderivative `T(x) = ∫_{x0}^{x} f` tabulated on panels.
///
/// Panels are the union of a uniform grid with caller-supplied breakpoints,
/// so every panel is kink-free. Between tabulated nodes the value is refined
/// with a local three-point Simpson rule against fresh integrand values,
/// keeping pointwise error near machine precision rather than interpolation
/// order.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl CumulativeTable {
    /// Builds the table for `f` over `[x0, x1]` with `panels` uniform panels
    /// plus the given breakpoints.
    pub fn build<F: Fn(f64) -> f64>(f: F, x0: f64, x1: f64, panels: usize, breakpoints: &[f64]) -> Self {
        let mut nodes: Vec<f64> = (0..=panels)
            .map(|j| x0 + (x1 - x0) * j as f64 / panels as f64)
            .collect();
        for &b in breakpoints {
            if b > x0 && b < x1 {
                nodes.push(b);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = KahanSum::new();
        cum.push(0.0);
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            // Two-level Simpson per panel; panels are smooth so this is
            // effectively exact at panel widths ~1/4096.
            let m = 0.5 * (a + b);
            let s1 = simpson(f(a), f(m), f(b), b - a);
            let s2 = simpson(f(a), f(0.5 * (a + m)), f(m), m - a)
                + simpson(f(m), f(0.5 * (m + b)), f(b), b - m);
            acc.add(s2 + (s2 - s1) / 15.0);
            cum.push(acc.value());
        }
        Self { nodes, cum }
    }

    /// `∫_{x0}^{x} f`, where `f` must be the same integrand the table was
    /// built with. `x` is clamped to the tabulated range.
    pub fn eval<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> f64 {
        let n = self.nodes.len();
        let x = x.clamp(self.nodes[0], self.nodes[n - 1]);
        // Last node at or below x.
        let idx = match self
            .nodes
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.cum[i],
            Err(i) => i - 1,
        };
        let a = self.nodes[idx];
        let m = 0.5 * (a + x);
        let (fa, fm, fx) = (f(a), f(m), f(x));
        let s1 = simpson(fa, fm, fx, x - a);
        let s2 = simpson(fa, f(0.5 * (a + m)), fm, m - a) + simpson(fm, f(0.5 * (m + x)), fx, x - m);
        self.cum[idx] + s2 + (s2 - s1) / 15.0
    }

    /// Total integral over the tabulated range.
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }
}
