//! Unit conversions. Horizontal positions are meters in a local east/north
//! frame, altitudes feet, speeds knots, vertical rates feet per minute.

pub const KT_TO_FT_PER_S: f64 = 1.68781;
pub const FT_TO_M: f64 = 0.3048;
pub const KT_TO_M_PER_S: f64 = KT_TO_FT_PER_S * FT_TO_M;
/// One ten-thousandth of a degree of latitude/longitude at mid latitudes.
pub const ADSB_HORIZONTAL_SIGMA_M: f64 = 11.1;
pub const ADSB_ALTITUDE_SIGMA_FT: f64 = 100.0;

pub fn ft_to_m(ft: f64) -> f64 {
    ft * FT_TO_M
}

pub fn m_to_ft(m: f64) -> f64 {
    m / FT_TO_M
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Compass heading (radians clockwise from north) of the vector (dx east,
/// dy north).
pub fn heading_of(dx: f64, dy: f64) -> f64 {
    wrap_angle(dx.atan2(dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn compass_headings() {
        assert_eq!(heading_of(0.0, 1.0), 0.0);
        assert!((heading_of(1.0, 0.0) - PI / 2.0).abs() < 1e-12);
        assert!((heading_of(0.0, -1.0) - PI).abs() < 1e-12);
    }
}
