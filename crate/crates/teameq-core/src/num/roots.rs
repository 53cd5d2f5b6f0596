//! Bisection on a bracketed sign change.

/// Error from [`bisect`].
#[derive(Debug, Clone, PartialEq)]
pub enum BracketError {
    /// `f(lo)` and `f(hi)` have the same sign.
    NoSignChange { f_lo: f64, f_hi: f64 },
    /// Invalid interval (`lo >= hi` or non-finite endpoint values).
    BadInterval,
}

impl core::fmt::Display for BracketError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BracketError::NoSignChange { f_lo, f_hi } => {
                write!(f, "no sign change on bracket: f(lo)={f_lo}, f(hi)={f_hi}")
            }
            BracketError::BadInterval => write!(f, "invalid bisection interval"),
        }
    }
}

impl core::error::Error for BracketError {}

/// Bisection root of `f` on `[lo, hi]`, assuming a sign change. Iterates
/// until the interval width falls below `xtol` (absolute) and `|f| <= ftol`,
/// or 200 iterations. Returns the midpoint of the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64, ftol: f64) -> Result<f64, BracketError> {
    if !(lo < hi) {
        return Err(BracketError::BadInterval);
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() {
        return Err(BracketError::BadInterval);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(BracketError::NoSignChange { f_lo: fa, f_hi: fb });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= xtol && libm::fabs(fm) <= ftol {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
