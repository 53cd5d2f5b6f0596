//! Monotone (shape-preserving) piecewise-cubic Hermite interpolation,
//! Fritsch–Carlson slope limiting.

use alloc::vec::Vec;

use super::fmath::FloatExt;

/// Error from [`Pchip::new`].
#[derive(Debug, Clone, PartialEq)]
pub enum PchipError {
    TooFewPoints,
    NotStrictlyAscending { index: usize },
    NonFinite { index: usize },
}

impl core::fmt::Display for PchipError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PchipError::TooFewPoints => write!(f, "interpolation needs at least two points"),
            PchipError::NotStrictlyAscending { index } => {
                write!(f, "abscissae not strictly ascending at index {index}")
            }
            PchipError::NonFinite { index } => write!(f, "non-finite data at index {index}"),
        }
    }
}

impl core::error::Error for PchipError {}

/// Shape-preserving cubic interpolant: monotone data stays monotone, and no
/// overshoot is introduced between knots.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Endpoint-derivative per knot.
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self, PchipError> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(PchipError::TooFewPoints);
        }
        for i in 0..n {
            if !xs[i].is_finite() || !ys[i].is_finite() {
                return Err(PchipError::NonFinite { index: i });
            }
            if i > 0 && xs[i] <= xs[i - 1] {
                return Err(PchipError::NotStrictlyAscending { index: i });
            }
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = alloc::vec![0.0_f64; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            // Interior: weighted harmonic mean of neighboring secants when
            // they share a sign, zero otherwise (local extremum).
            for i in 1..n - 1 {
                let (d0, d1) = (delta[i - 1], delta[i]);
                if d0 == 0.0 || d1 == 0.0 || (d0 > 0.0) != (d1 > 0.0) {
                    ds[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            ds[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            ds,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 2] {
            return n - 2;
        }
        match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.ds[i] * h, self.ds[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + d1 * (t3 - t2)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        (y0 * (6.0 * t2 - 6.0 * t) / h)
            + d0 * (3.0 * t2 - 4.0 * t + 1.0)
            + (y1 * (-6.0 * t2 + 6.0 * t) / h)
            + d1 * (3.0 * t2 - 2.0 * t)
    }

    /// Exact integral of the interpolant over `[a, b]` within its range.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if a > b {
            return -self.integrate(b, a);
        }
        let mut total = 0.0;
        let n = self.xs.len();
        for i in 0..n - 1 {
            let lo = self.xs[i].max(a);
            let hi = self.xs[i + 1].min(b);
            if lo >= hi {
                continue;
            }
            total += self.segment_integral(i, lo, hi);
        }
        total
    }

    fn segment_integral(&self, i: usize, lo: f64, hi: f64) -> f64 {
        // Antiderivative of the cubic Hermite basis in normalized coordinates.
        let h = self.xs[i + 1] - self.xs[i];
        let prim = |t: f64| -> f64 {
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let (y0, y1) = (self.ys[i], self.ys[i + 1]);
            let (d0, d1) = (self.ds[i] * h, self.ds[i + 1] * h);
            h * (y0 * (0.5 * t4 - t3 + t)
                + d0 * (0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2)
                + y1 * (-0.5 * t4 + t3)
                + d1 * (0.25 * t4 - t3 / 3.0))
        };
        let t0 = (lo - self.xs[i]) / h;
        let t1 = (hi - self.xs[i]) / h;
        prim(t1) - prim(t0)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    // One-sided three-point estimate, clipped to preserve shape.
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d == 0.0 || d0 == 0.0 || (d > 0.0) != (d0 > 0.0) {
        0.0
    } else if (d0 > 0.0) != (d1 > 0.0) && FloatExt::abs(d) > 3.0 * FloatExt::abs(d0) {
        3.0 * d0
    } else {
        d
    }
}
