//! `f64` helpers that work without `std`.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn sin_deg(deg: f64) -> f64 {
    libm::sin(deg.to_radians())
}

pub(crate) fn cos_deg(deg: f64) -> f64 {
    libm::cos(deg.to_radians())
}

pub(crate) fn asin_deg(x: f64) -> f64 {
    libm::asin(x).to_degrees()
}

pub(crate) fn acos_deg(x: f64) -> f64 {
    libm::acos(x).to_degrees()
}

pub(crate) fn atan2_deg(y: f64, x: f64) -> f64 {
    libm::atan2(y, x).to_degrees()
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Wraps an angle in degrees into `[0, 360)`.
pub(crate) fn wrap_deg(deg: f64) -> f64 {
    let w = deg - 360.0 * floor(deg / 360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Rounds to two decimals; all scene coordinates are stored this way so the
/// canonical annotation round-trips exactly.
pub(crate) fn q2(x: f64) -> f64 {
    round(x * 100.0) / 100.0
}
