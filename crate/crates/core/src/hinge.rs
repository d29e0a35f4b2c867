//! Offset-hinge-plus-spring equivalent of a hingeless blade.
//!
//! The flap frequency of a blade hinged at `e·R` with a root spring `Kβ` is
//!
//! ```text
//! ωn² = Ω² (1 + e·R·Mβ/Iβ + Kβ/(Iβ Ω²))
//! ```
//!
//! where `Mβ` is the blade first moment and `Iβ` the flap inertia about the hinge.

use crate::error::{Result, TrimError};

/// Flap frequency ratio `ωn/Ω` for the given hinge parameters.
pub fn flap_frequency_ratio(
    hinge_offset: f64,
    spring_stiffness: f64,
    flap_inertia: f64,
    first_moment: f64,
    rotor_speed: f64,
    radius: f64,
) -> f64 {
    (1.0 + hinge_offset * radius * first_moment / flap_inertia
        + spring_stiffness / (flap_inertia * rotor_speed * rotor_speed))
        .sqrt()
}

/// Dimensionless hinge offset reproducing the flap frequency ratio `nu`.
pub fn equivalent_hinge_offset(
    nu: f64,
    spring_stiffness: f64,
    flap_inertia: f64,
    first_moment: f64,
    rotor_speed: f64,
    radius: f64,
) -> Result<f64> {
    for (name, v) in [
        ("flap_frequency_ratio", nu),
        ("flap_inertia", flap_inertia),
        ("first_moment", first_moment),
        ("rotor_speed", rotor_speed),
        ("rotor_radius", radius),
    ] {
        if !(v > 0.0) {
            return Err(TrimError::Model(format!("{name} must be positive, got {v}")));
        }
    }
    if spring_stiffness < 0.0 {
        return Err(TrimError::Model("spring stiffness must be non-negative".into()));
    }
    let spring = spring_stiffness / (flap_inertia * rotor_speed * rotor_speed);
    let e = (nu * nu - 1.0 - spring) * flap_inertia / (radius * first_moment);
    if e < 0.0 {
        return Err(TrimError::Model(format!(
            "flap frequency ratio {nu} is below what the spring alone provides; hinge offset would be {e:.4}"
        )));
    }
    Ok(e)
}

/// Blade first moment `Mβ` that makes the given hinge offset reproduce `nu`.
pub fn back_solve_first_moment(
    hinge_offset: f64,
    nu: f64,
    spring_stiffness: f64,
    flap_inertia: f64,
    rotor_speed: f64,
    radius: f64,
) -> Result<f64> {
    if !(hinge_offset > 0.0) {
        return Err(TrimError::Model("hinge offset must be positive".into()));
    }
    let spring = spring_stiffness / (flap_inertia * rotor_speed * rotor_speed);
    let m = (nu * nu - 1.0 - spring) * flap_inertia / (hinge_offset * radius);
    if !(m > 0.0) {
        return Err(TrimError::Model(format!(
            "first moment back-solve gives non-positive value {m:.4}"
        )));
    }
    Ok(m)
}
