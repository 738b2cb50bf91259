//! Scalar helpers routed through `libm` so results do not depend on the
//! platform math library.

use num_complex::Complex64;

pub const PI: f64 = core::f64::consts::PI;
pub const LN_2: f64 = core::f64::consts::LN_2;

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// `e^{j phase}`.
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    let (s, c) = libm::sincos(phase);
    Complex64::new(c, s)
}

/// `h^H w` for two equally long complex vectors.
#[inline]
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    debug_assert_eq!(h.len(), w.len());
    h.iter()
        .zip(w)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

#[inline]
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
