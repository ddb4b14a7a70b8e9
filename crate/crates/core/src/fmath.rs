//! Real float functions that work with and without `std`.

use num_traits::Float;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    Float::ln(x)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    Float::log2(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    Float::ceil(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    Float::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    Float::cos(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    Float::atan2(y, x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    Float::hypot(x, y)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    Float::round(x)
}

#[inline]
pub(crate) fn mul_add(a: f64, b: f64, c: f64) -> f64 {
    Float::mul_add(a, b, c)
}
