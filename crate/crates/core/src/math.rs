//! Thin wrappers over `libm` so the rest of the crate reads like std float code.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

/// `log(1 + e^{-u})` without overflow for large negative `u`.
#[inline]
pub fn softplus_neg(u: f64) -> f64 {
    if u > 0.0 {
        ln_1p(exp(-u))
    } else {
        -u + ln_1p(exp(u))
    }
}
