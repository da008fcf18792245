//! Thin wrappers over [`libm`] plus angle-wrapping helpers.
//!
//! In a `no_std` build the inherent `f64` math methods are unavailable, so
//! every transcendental call in the crate routes through here.

pub(crate) const PI: f64 = core::f64::consts::PI;
pub(crate) const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn acos(x: f64) -> f64 {
    libm::acos(clamp(x, -1.0, 1.0))
}

#[inline]
pub(crate) fn asin(x: f64) -> f64 {
    libm::asin(clamp(x, -1.0, 1.0))
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub(crate) fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Wraps an angle into the principal interval `[-pi, pi)`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = x - TAU * floor((x + PI) / TAU);
    // Rounding in the reduction can land exactly on pi; fold it back.
    if y >= PI {
        y - TAU
    } else if y < -PI {
        y + TAU
    } else {
        y
    }
}

/// Wraps a mod-pi quantity into `[-pi/2, pi/2)`.
pub(crate) fn wrap_half_angle(x: f64) -> f64 {
    let y = x - PI * floor((x + PI / 2.0) / PI);
    if y >= PI / 2.0 {
        y - PI
    } else if y < -PI / 2.0 {
        y + PI
    } else {
        y
    }
}
