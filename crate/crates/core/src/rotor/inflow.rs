//! Inflow pieces: coaxial interference, wake skew, first-harmonic inflow.

use std::f64::consts::PI;

use crate::config::Calibration;
use crate::error::{Result, TrimError};

/// Amplitude of the longitudinal inflow harmonic at a wake skew of 90°.
pub const K1C_MAX: f64 = 15.0 * PI / 32.0;

/// `(δ_u2l, δ_l2u)` at advance ratio `mu`, read from the calibration tables.
/// Beyond the last breakpoint the final value is held.
pub fn interference_factors(cal: &Calibration, mu: f64) -> (f64, f64) {
    let mu = mu.max(0.0);
    (cal.interference_u2l.eval(mu), cal.interference_l2u.eval(mu))
}

/// Wake skew angle in degrees from the in-plane advance ratio and the normal
/// inflow ratio (downwash positive). Returns 0 when both vanish and 90 when
/// the normal flow is zero or upward.
pub fn wake_skew_angle(in_plane: f64, normal: f64) -> f64 {
    let in_plane = in_plane.abs();
    if in_plane == 0.0 {
        return 0.0;
    }
    if normal <= 0.0 {
        return 90.0;
    }
    in_plane.atan2(normal).to_degrees()
}

/// `(K1s, K1c)` for a wake skew angle in degrees.
pub fn pitt_peters_harmonics(chi_deg: f64) -> Result<(f64, f64)> {
    if !(0.0..=90.0).contains(&chi_deg) {
        return Err(TrimError::Domain(format!(
            "wake skew angle {chi_deg} deg outside [0, 90]"
        )));
    }
    Ok((0.0, K1C_MAX * (0.5 * chi_deg.to_radians()).tan()))
}

/// Superpose each rotor's own induced-velocity field with the interference
/// from the other rotor, sample by sample.
pub fn couple_induced_velocities(
    own_upper: &[f64],
    own_lower: &[f64],
    delta_u2l: f64,
    delta_l2u: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(own_upper.len(), own_lower.len(), "fields must share a grid");
    let upper = own_upper
        .iter()
        .zip(own_lower)
        .map(|(u, l)| u + delta_l2u * l)
        .collect();
    let lower = own_upper
        .iter()
        .zip(own_lower)
        .map(|(u, l)| l + delta_u2l * u)
        .collect();
    (upper, lower)
}

/// `K1c` as a function of the normal inflow ratio at fixed `mu`, with its
/// derivative. Written through `tan(χ/2) = μ / (√(μ²+λ²) + λ)` so no angle is
/// formed.
#[inline]
pub(crate) fn k1c_and_slope(mu: f64, normal: f64) -> (f64, f64) {
    if mu == 0.0 {
        return (0.0, 0.0);
    }
    if normal <= 0.0 {
        return (K1C_MAX, 0.0);
    }
    let rho = (mu * mu + normal * normal).sqrt();
    let t = mu / (rho + normal);
    (K1C_MAX * t, -K1C_MAX * mu / (rho * (rho + normal)))
}
