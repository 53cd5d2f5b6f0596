//! `f64` math routed through `libm` so the crate works without `std` and
//! produces bit-identical results everywhere.

/// Extension trait supplying the transcendental and rounding operations the
/// crate needs on `f64`.
pub trait FloatExt {
    fn ln(self) -> f64;
    fn exp(self) -> f64;
    fn sqrt(self) -> f64;
    fn abs(self) -> f64;
    fn powf(self, e: f64) -> f64;
    fn powi(self, e: i32) -> f64;
    fn floor(self) -> f64;
    fn ceil(self) -> f64;
    fn round(self) -> f64;
}

impl FloatExt for f64 {
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn abs(self) -> f64 {
        libm::fabs(self)
    }
    #[inline]
    fn powf(self, e: f64) -> f64 {
        libm::pow(self, e)
    }
    #[inline]
    fn powi(self, e: i32) -> f64 {
        // Exponents here are tiny (team sizes), so repeated squaring on the
        // integer path keeps results exact for e >= 0.
        if e < 0 {
            return 1.0 / self.powi(-e);
        }
        let mut base = self;
        let mut exp = e as u32;
        let mut acc = 1.0f64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    #[inline]
    fn round(self) -> f64 {
        libm::round(self)
    }
}
