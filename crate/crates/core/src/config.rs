//! Aircraft configuration: parsing, defaults, validation and derived constants.
//!
//! The file is TOML with four sections: `[helicopter]`, `[propeller]`,
//! `[empennage]` and `[calibration]`. Geometric and mass data are required;
//! every calibration entry has a documented default. Schedules are written as
//! rows of `[breakpoint, value]`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Result, TrimError};
use crate::hinge;
use crate::schedule::Schedule;

pub const GRAVITY: f64 = 9.80665;
pub const SEA_LEVEL_DENSITY: f64 = 1.225;

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../config/cch.toml");

/// Sectional aerodynamics: linear lift clamped at stall, quadratic drag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Airfoil {
    /// 1/rad
    pub lift_slope: f64,
    /// rad
    pub zero_lift_angle: f64,
    /// rad, measured from the zero-lift angle
    pub stall_angle: f64,
    pub cd0: f64,
    /// 1/rad²
    pub drag_k: f64,
    /// rad, angle of minimum drag
    pub min_drag_angle: f64,
    /// rad from the zero-lift angle where the positive-lift drag rise starts
    pub drag_rise_angle: f64,
    /// 1/rad², extra quadratic drag past `drag_rise_angle`
    pub drag_rise_k: f64,
}

impl Airfoil {
    /// Lift and drag coefficients and their derivatives with respect to `alpha`.
    #[inline]
    pub fn coefficients(&self, alpha: f64) -> (f64, f64, f64, f64) {
        let a = alpha - self.zero_lift_angle;
        let (cl, dcl) = if a > self.stall_angle {
            (self.lift_slope * self.stall_angle, 0.0)
        } else if a < -self.stall_angle {
            (-self.lift_slope * self.stall_angle, 0.0)
        } else {
            (self.lift_slope * a, self.lift_slope)
        };
        let d = alpha - self.min_drag_angle;
        let mut cd = self.cd0 + self.drag_k * d * d;
        let mut dcd = 2.0 * self.drag_k * d;
        let over = a - self.drag_rise_angle;
        if over > 0.0 {
            cd += self.drag_rise_k * over * over;
            dcd += 2.0 * self.drag_rise_k * over;
        }
        (cl, cd, dcl, dcd)
    }

    pub fn is_stalled(&self, alpha: f64) -> bool {
        (alpha - self.zero_lift_angle).abs() > self.stall_angle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolidityBasis {
    /// Solidity of one rotor: `c = σπR/N`.
    PerRotor,
    /// Solidity of both rotors together: `c = σπR/(2N)`.
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainRotorConfig {
    pub radius: f64,
    pub blades: usize,
    /// rad/s
    pub rotor_speed: f64,
    /// N·m/rad
    pub spring_stiffness: f64,
    pub solidity: f64,
    pub solidity_basis: SolidityBasis,
    /// deg, positive tilts the shaft forward
    pub shaft_tilt: f64,
    /// deg over the full radius
    pub twist: f64,
    pub flap_inertia: f64,
    pub flap_frequency_ratio: f64,
    pub lock_number: f64,
    pub hinge_offset: f64,
    pub lower_hub: Vector3<f64>,
    pub shaft_spacing: f64,
    /// +1 when the upper rotor turns counter-clockwise seen from above.
    pub upper_sense: f64,
    /// r/R at which the collective is measured
    pub collective_reference: f64,
    /// deg, swashplate rotation of the cyclic inputs against the direction
    /// of rotation
    pub control_phase: f64,
    /// Add the aerodynamic moment of the sections inboard of the hinge to
    /// the hub moment. Off, the hub moment is the spring term alone.
    pub inboard_hub_moment: bool,
    pub root_cutout: f64,
    pub radial_stations: usize,
    pub azimuth_stations: usize,
    pub airfoil: Airfoil,
    // derived
    pub first_moment: f64,
    pub chord: f64,
    pub disk_area: f64,
    pub tip_speed: f64,
    pub upper_hub: Vector3<f64>,
}

impl MainRotorConfig {
    /// Per-blade root stiffness of the equivalent centre-spring, `Iβ Ω² (ν² − 1)`.
    pub fn flap_spring(&self) -> f64 {
        let nu2 = self.flap_frequency_ratio * self.flap_frequency_ratio;
        self.flap_inertia * self.rotor_speed * self.rotor_speed * (nu2 - 1.0)
    }

    /// Lock number implied by the blade geometry and airfoil.
    pub fn implied_lock_number(&self, air_density: f64) -> f64 {
        air_density * self.airfoil.lift_slope * self.chord * self.radius.powi(4) / self.flap_inertia
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropellerConfig {
    pub blades: usize,
    pub radius: f64,
    pub rotor_speed: f64,
    pub twist: f64,
    pub solidity: f64,
    pub hub: Vector3<f64>,
    pub sense: f64,
    pub collective_reference: f64,
    pub root_cutout: f64,
    pub radial_stations: usize,
    pub azimuth_stations: usize,
    pub airfoil: Airfoil,
    // derived
    pub chord: f64,
    pub disk_area: f64,
    pub tip_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpennageConfig {
    pub hs_position: Vector3<f64>,
    pub vs_position: Vector3<f64>,
    pub hs_area: f64,
    pub vs_area: f64,
    /// 1/rad
    pub lift_slope: f64,
    /// deg
    pub hs_incidence: f64,
    /// deg
    pub vs_incidence: f64,
    pub elevator_effectiveness: f64,
    pub rudder_effectiveness: f64,
    pub profile_drag: f64,
    /// Airspeed (m/s) below which control surfaces have no effect.
    pub ramp_start: f64,
    /// Airspeed (m/s) from which control surfaces are fully effective.
    pub ramp_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuselageConfig {
    /// m²
    pub flat_plate_area: f64,
    /// drag multiplier `1 + k·α²`, 1/rad²
    pub drag_alpha_factor: f64,
    /// m²/rad
    pub lift_slope_area: f64,
    /// m³
    pub moment_volume: f64,
    /// m³/rad
    pub moment_slope_volume: f64,
    pub reference_point: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Pitch attitude preset (deg) against airspeed (m/s).
    pub pitch_preset: Schedule,
    /// Upper-on-lower interference factor against advance ratio.
    pub interference_u2l: Schedule,
    /// Lower-on-upper interference factor against advance ratio.
    pub interference_l2u: Schedule,
    pub los_coefficient: f64,
    pub los_cap: f64,
    /// Default rotor-load tolerance in percent.
    pub til_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HelicopterConfig {
    pub mass: f64,
    pub air_density: f64,
    /// Body pitch inertia, kg·m²; only used for the elevator control-efficiency diagnostic.
    pub pitch_inertia: f64,
    pub rotor: MainRotorConfig,
    pub propeller: PropellerConfig,
    pub empennage: EmpennageConfig,
    pub fuselage: FuselageConfig,
    pub calibration: Calibration,
}

impl HelicopterConfig {
    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }

    /// The shipped configuration.
    pub fn default_cch() -> Self {
        validate_config(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrimError::Io(format!("{}: {e}", path.display())))?;
        validate_config(&text)
    }
}

struct Reader<'a> {
    root: &'a Table,
}

impl<'a> Reader<'a> {
    fn section(&self, name: &str) -> Result<Option<&'a Table>> {
        match self.root.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(TrimError::BadValue {
                key: name.into(),
                message: "expected a section".into(),
            }),
        }
    }

    fn raw(&self, section: &str, key: &str) -> Result<Option<&'a Value>> {
        Ok(self.section(section)?.and_then(|t| t.get(key)))
    }

    fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(section, key)? {
            None => Ok(None),
            Some(v) => as_f64(v)
                .map(Some)
                .ok_or_else(|| bad(section, key, "expected a number")),
        }
    }

    fn f64(&self, section: &str, key: &str) -> Result<f64> {
        self.f64_opt(section, key)?
            .ok_or_else(|| TrimError::MissingKey(format!("{section}.{key}")))
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    fn count(&self, section: &str, key: &str) -> Result<usize> {
        self.count_opt(section, key)?
            .ok_or_else(|| TrimError::MissingKey(format!("{section}.{key}")))
    }

    fn count_opt(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.raw(section, key)? {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(bad(section, key, "expected a non-negative integer")),
        }
    }

    fn vec3(&self, section: &str, key: &str) -> Result<Vector3<f64>> {
        let v = self
            .raw(section, key)?
            .ok_or_else(|| TrimError::MissingKey(format!("{section}.{key}")))?;
        let arr = v
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| bad(section, key, "expected [x, y, z]"))?;
        let xs: Option<Vec<f64>> = arr.iter().map(as_f64).collect();
        let xs = xs.ok_or_else(|| bad(section, key, "expected numbers"))?;
        Ok(Vector3::new(xs[0], xs[1], xs[2]))
    }

    fn vec3_or(&self, section: &str, key: &str, default: Vector3<f64>) -> Result<Vector3<f64>> {
        if self.raw(section, key)?.is_none() {
            return Ok(default);
        }
        self.vec3(section, key)
    }

    fn string_or(&self, section: &str, key: &str, default: &str) -> Result<String> {
        match self.raw(section, key)? {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(bad(section, key, "expected a string")),
        }
    }

    fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key)? {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(bad(section, key, "expected true or false")),
        }
    }

    fn schedule_or(&self, section: &str, key: &str, default: &[(f64, f64)]) -> Result<Schedule> {
        let name = format!("{section}.{key}");
        let rows = match self.raw(section, key)? {
            None => default.to_vec(),
            Some(v) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| bad(section, key, "expected rows of [breakpoint, value]"))?;
                arr.iter()
                    .map(|row| {
                        row.as_array()
                            .filter(|r| r.len() == 2)
                            .and_then(|r| Some((as_f64(&r[0])?, as_f64(&r[1])?)))
                            .ok_or_else(|| bad(section, key, "expected rows of [breakpoint, value]"))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Schedule::new(&name, rows)
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn bad(section: &str, key: &str, message: &str) -> TrimError {
    TrimError::BadValue {
        key: format!("{section}.{key}"),
        message: message.into(),
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TrimError::Validation {
            field: field.into(),
            value,
            bound: "> 0".into(),
        })
    }
}

fn within(field: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(TrimError::Validation {
            field: field.into(),
            value,
            bound: format!("[{lo}, {hi}]"),
        })
    }
}

fn open_unit(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(TrimError::Validation {
            field: field.into(),
            value,
            bound: "(0, 1)".into(),
        })
    }
}

fn sense(field: &str, value: f64) -> Result<f64> {
    if value == 1.0 || value == -1.0 {
        Ok(value)
    } else {
        Err(TrimError::Validation {
            field: field.into(),
            value,
            bound: "+1 or -1".into(),
        })
    }
}

fn airfoil(r: &Reader, prefix: &str, defaults: Airfoil) -> Result<Airfoil> {
    let c = "calibration";
    let deg = |k: &str, d: f64| -> Result<f64> {
        Ok(r.f64_or(c, &format!("{prefix}{k}"), d.to_degrees())?.to_radians())
    };
    let a = Airfoil {
        lift_slope: r.f64_or(c, &format!("{prefix}lift_curve_slope"), defaults.lift_slope)?,
        zero_lift_angle: deg("zero_lift_angle", defaults.zero_lift_angle)?,
        stall_angle: deg("stall_angle", defaults.stall_angle)?,
        cd0: r.f64_or(c, &format!("{prefix}profile_drag_cd0"), defaults.cd0)?,
        drag_k: r.f64_or(c, &format!("{prefix}profile_drag_k"), defaults.drag_k)?,
        min_drag_angle: deg("min_drag_angle", defaults.min_drag_angle)?,
        drag_rise_angle: deg("drag_rise_angle", defaults.drag_rise_angle)?,
        drag_rise_k: r.f64_or(c, &format!("{prefix}drag_rise_k"), defaults.drag_rise_k)?,
    };
    positive(&format!("{c}.{prefix}lift_curve_slope"), a.lift_slope)?;
    positive(&format!("{c}.{prefix}stall_angle"), a.stall_angle)?;
    if a.cd0 < 0.0 || a.drag_k < 0.0 || a.drag_rise_k < 0.0 {
        return Err(TrimError::Validation {
            field: format!("{c}.{prefix}profile_drag"),
            value: a.cd0.min(a.drag_k).min(a.drag_rise_k),
            bound: ">= 0".into(),
        });
    }
    Ok(a)
}

/// Parse and validate a configuration file's text.
pub fn validate_config(raw: &str) -> Result<HelicopterConfig> {
    let root: Table = raw.parse().map_err(|e: toml::de::Error| TrimError::BadValue {
        key: "<document>".into(),
        message: e.to_string(),
    })?;
    let r = Reader { root: &root };
    let h = "helicopter";
    let p = "propeller";
    let em = "empennage";
    let c = "calibration";

    let mass = r.f64(h, "mass")?;
    positive("helicopter.mass", mass)?;
    let air_density = r.f64_or(h, "air_density", SEA_LEVEL_DENSITY)?;
    positive("helicopter.air_density", air_density)?;
    let pitch_inertia = r.f64_or(h, "pitch_inertia", 25_000.0)?;
    positive("helicopter.pitch_inertia", pitch_inertia)?;

    // main rotor
    let radius = r.f64(h, "rotor_radius")?;
    positive("helicopter.rotor_radius", radius)?;
    let blades = r.count(h, "blades_per_rotor")?;
    positive("helicopter.blades_per_rotor", blades as f64)?;
    let rotor_speed = r.f64(h, "rotor_speed")?;
    positive("helicopter.rotor_speed", rotor_speed)?;
    let spring_stiffness = r.f64(h, "spring_stiffness")?;
    positive("helicopter.spring_stiffness", spring_stiffness)?;
    let solidity = r.f64(h, "rotor_solidity")?;
    open_unit("helicopter.rotor_solidity", solidity)?;
    let solidity_basis = match r.string_or(c, "solidity_basis", "total")?.as_str() {
        "total" => SolidityBasis::Total,
        "per_rotor" => SolidityBasis::PerRotor,
        other => return Err(bad(c, "solidity_basis", &format!("unknown basis `{other}`"))),
    };
    let shaft_tilt = r.f64(h, "shaft_tilt")?;
    within("helicopter.shaft_tilt", shaft_tilt, -15.0, 15.0)?;
    let twist = r.f64(h, "blade_twist")?;
    within("helicopter.blade_twist", twist, -45.0, 45.0)?;
    let flap_inertia = r.f64(h, "flap_inertia")?;
    positive("helicopter.flap_inertia", flap_inertia)?;
    let nu = r.f64(h, "flap_frequency_ratio")?;
    if !(nu > 1.0) {
        return Err(TrimError::Validation {
            field: "helicopter.flap_frequency_ratio".into(),
            value: nu,
            bound: "> 1".into(),
        });
    }
    let lock_number = r.f64(h, "lock_number")?;
    positive("helicopter.lock_number", lock_number)?;
    let lower_hub = r.vec3(h, "lower_hub_position")?;
    let shaft_spacing = r.f64(h, "shaft_spacing")?;
    positive("helicopter.shaft_spacing", shaft_spacing)?;
    let hinge_offset = r.f64_or(c, "hinge_offset", 0.47)?;
    open_unit("calibration.hinge_offset", hinge_offset)?;
    let first_moment = hinge::back_solve_first_moment(
        hinge_offset,
        nu,
        spring_stiffness,
        flap_inertia,
        rotor_speed,
        radius,
    )?;
    let blades_for_chord = match solidity_basis {
        SolidityBasis::PerRotor => blades as f64,
        SolidityBasis::Total => 2.0 * blades as f64,
    };
    let chord = solidity * PI * radius / blades_for_chord;
    positive("derived.blade_chord", chord)?;
    let root_cutout = r.f64_or(c, "root_cutout", 0.15)?;
    within("calibration.root_cutout", root_cutout, 0.0, 0.9)?;
    let radial_stations = r.count_opt(c, "radial_stations")?.unwrap_or(25);
    within("calibration.radial_stations", radial_stations as f64, 20.0, 1000.0)?;
    let azimuth_stations = r.count_opt(c, "azimuth_stations")?.unwrap_or(72);
    within("calibration.azimuth_stations", azimuth_stations as f64, 36.0, 3600.0)?;
    let collective_reference = r.f64_or(c, "collective_reference", 0.75)?;
    within("calibration.collective_reference", collective_reference, 0.0, 1.0)?;
    let control_phase = r.f64_or(c, "control_phase_angle", 0.0)?;
    within("calibration.control_phase_angle", control_phase, -90.0, 90.0)?;
    let inboard_hub_moment = r.bool_or(c, "inboard_hub_moment", false)?;
    let upper_sense = sense("calibration.upper_rotor_sense", r.f64_or(c, "upper_rotor_sense", -1.0)?)?;
    let rotor_airfoil = airfoil(
        &r,
        "",
        Airfoil {
            lift_slope: 5.73,
            zero_lift_angle: 0.0,
            stall_angle: 15f64.to_radians(),
            cd0: 0.01,
            drag_k: 0.3,
            min_drag_angle: 0.0,
            drag_rise_angle: 15f64.to_radians(),
            drag_rise_k: 0.0,
        },
    )?;
    let rotor = MainRotorConfig {
        radius,
        blades,
        rotor_speed,
        spring_stiffness,
        solidity,
        solidity_basis,
        shaft_tilt,
        twist,
        flap_inertia,
        flap_frequency_ratio: nu,
        lock_number,
        hinge_offset,
        lower_hub,
        shaft_spacing,
        upper_sense,
        collective_reference,
        control_phase,
        inboard_hub_moment,
        root_cutout,
        radial_stations,
        azimuth_stations,
        airfoil: rotor_airfoil,
        first_moment,
        chord,
        disk_area: PI * radius * radius,
        tip_speed: rotor_speed * radius,
        // z is down: the upper hub sits one shaft spacing above the lower one
        upper_hub: lower_hub - Vector3::new(0.0, 0.0, shaft_spacing),
    };

    // propeller
    let pb = r.count(p, "blade_count")?;
    positive("propeller.blade_count", pb as f64)?;
    let pr = r.f64(p, "radius")?;
    positive("propeller.radius", pr)?;
    let ps = r.f64(p, "speed")?;
    positive("propeller.speed", ps)?;
    let ptw = r.f64(p, "twist")?;
    within("propeller.twist", ptw, -60.0, 60.0)?;
    let psol = r.f64(p, "solidity")?;
    open_unit("propeller.solidity", psol)?;
    let phub = r.vec3(p, "hub_position")?;
    let prop_airfoil = airfoil(
        &r,
        "propeller_",
        Airfoil {
            lift_slope: 5.73,
            zero_lift_angle: (-3.5f64).to_radians(),
            stall_angle: 15f64.to_radians(),
            cd0: 0.01,
            drag_k: 0.3,
            min_drag_angle: 0.0,
            drag_rise_angle: 15f64.to_radians(),
            drag_rise_k: 0.0,
        },
    )?;
    let propeller = PropellerConfig {
        blades: pb,
        radius: pr,
        rotor_speed: ps,
        twist: ptw,
        solidity: psol,
        hub: phub,
        sense: sense("calibration.propeller_sense", r.f64_or(c, "propeller_sense", 1.0)?)?,
        collective_reference: {
            let v = r.f64_or(c, "propeller_collective_reference", 0.0)?;
            within("calibration.propeller_collective_reference", v, 0.0, 1.0)?;
            v
        },
        root_cutout: {
            let v = r.f64_or(c, "propeller_root_cutout", 0.2)?;
            within("calibration.propeller_root_cutout", v, 0.0, 0.9)?;
            v
        },
        radial_stations: {
            let v = r.count_opt(c, "propeller_radial_stations")?.unwrap_or(20);
            within("calibration.propeller_radial_stations", v as f64, 20.0, 1000.0)?;
            v
        },
        azimuth_stations: {
            let v = r.count_opt(c, "propeller_azimuth_stations")?.unwrap_or(36);
            within("calibration.propeller_azimuth_stations", v as f64, 36.0, 3600.0)?;
            v
        },
        airfoil: prop_airfoil,
        chord: psol * PI * pr / pb as f64,
        disk_area: PI * pr * pr,
        tip_speed: ps * pr,
    };

    // empennage
    let empennage = EmpennageConfig {
        hs_position: r.vec3(em, "hs_position")?,
        vs_position: r.vec3(em, "vs_position")?,
        hs_area: r.f64_or(em, "hs_area", 2.5)?,
        vs_area: r.f64_or(em, "vs_area", 1.5)?,
        lift_slope: r.f64_or(em, "lift_slope", 4.0)?,
        hs_incidence: r.f64_or(em, "hs_incidence", 0.0)?,
        vs_incidence: r.f64_or(em, "vs_incidence", 0.0)?,
        elevator_effectiveness: r.f64_or(em, "elevator_effectiveness", 0.6)?,
        rudder_effectiveness: r.f64_or(em, "rudder_effectiveness", 0.6)?,
        profile_drag: r.f64_or(em, "profile_drag", 0.01)?,
        ramp_start: 40.0,
        ramp_end: 50.0,
    };
    positive("empennage.hs_area", empennage.hs_area)?;
    positive("empennage.vs_area", empennage.vs_area)?;
    positive("empennage.lift_slope", empennage.lift_slope)?;
    within("empennage.elevator_effectiveness", empennage.elevator_effectiveness, 0.0, 1.0)?;
    within("empennage.rudder_effectiveness", empennage.rudder_effectiveness, 0.0, 1.0)?;
    let ramp = r.schedule_or(c, "elevator_effectiveness_ramp", &[(40.0, 0.0), (50.0, 1.0)])?;
    let (ramp_start, ramp_end) = match ramp.points() {
        [(a, y0), (b, y1)] if *y0 == 0.0 && *y1 == 1.0 => (*a, *b),
        _ => {
            return Err(bad(
                c,
                "elevator_effectiveness_ramp",
                "expected [[start, 0], [end, 1]]",
            ))
        }
    };
    let empennage = EmpennageConfig {
        ramp_start,
        ramp_end,
        ..empennage
    };

    let fuselage = FuselageConfig {
        flat_plate_area: r.f64_or(c, "fuselage_flat_plate_area", 2.3)?,
        drag_alpha_factor: r.f64_or(c, "fuselage_drag_alpha_factor", 2.0)?,
        lift_slope_area: r.f64_or(c, "fuselage_lift_slope_area", 1.0)?,
        moment_volume: r.f64_or(c, "fuselage_moment_volume", 0.0)?,
        moment_slope_volume: r.f64_or(c, "fuselage_moment_slope_volume", 5.0)?,
        reference_point: r.vec3_or(c, "fuselage_reference_point", Vector3::zeros())?,
    };
    positive("calibration.fuselage_flat_plate_area", fuselage.flat_plate_area)?;
    if fuselage.drag_alpha_factor < 0.0 {
        return Err(TrimError::Validation {
            field: "calibration.fuselage_drag_alpha_factor".into(),
            value: fuselage.drag_alpha_factor,
            bound: ">= 0".into(),
        });
    }

    let calibration = Calibration {
        pitch_preset: r.schedule_or(
            c,
            "pitch_preset_table",
            &[(0.0, 3.0), (15.0, 3.0), (40.0, 1.0), (100.0, 0.0)],
        )?,
        interference_u2l: r.schedule_or(
            c,
            "interference_u2l",
            &[(0.0, 1.0), (0.1, 0.7), (0.2, 0.35), (0.3, 0.12), (0.4, 0.0)],
        )?,
        interference_l2u: r.schedule_or(c, "interference_l2u", &[(0.0, 0.15), (0.2, 0.05), (0.4, 0.0)])?,
        los_coefficient: r.f64_or(c, "los_coefficient", 0.0002)?,
        los_cap: r.f64_or(c, "los_cap", 0.35)?,
        til_cap: r.f64_or(c, "til_cap", 5.0)?,
    };
    validate_interference(&calibration)?;
    if calibration.los_coefficient < 0.0 {
        return Err(TrimError::Validation {
            field: "calibration.los_coefficient".into(),
            value: calibration.los_coefficient,
            bound: ">= 0".into(),
        });
    }
    positive("calibration.los_cap", calibration.los_cap)?;
    positive("calibration.til_cap", calibration.til_cap)?;
    let preset = &calibration.pitch_preset;
    within("calibration.pitch_preset_table", preset.max_value(), -20.0, 20.0)?;
    within("calibration.pitch_preset_table", preset.min_value(), -20.0, 20.0)?;

    let config = HelicopterConfig {
        mass,
        air_density,
        pitch_inertia,
        rotor,
        propeller,
        empennage,
        fuselage,
        calibration,
    };
    log::debug!(
        "first moment {:.3} kg·m, chord {:.4} m, implied Lock number {:.3} (configured {:.3})",
        config.rotor.first_moment,
        config.rotor.chord,
        config.rotor.implied_lock_number(config.air_density),
        config.rotor.lock_number
    );
    Ok(config)
}

fn validate_interference(cal: &Calibration) -> Result<()> {
    let u2l = &cal.interference_u2l;
    let l2u = &cal.interference_l2u;
    for (name, s) in [("calibration.interference_u2l", u2l), ("calibration.interference_l2u", l2u)] {
        within(name, s.min_value(), 0.0, 1.2)?;
        within(name, s.max_value(), 0.0, 1.2)?;
        if !s.is_nonincreasing() {
            return Err(TrimError::BadValue {
                key: name.into(),
                message: "interference must not increase with advance ratio".into(),
            });
        }
        if s.points()[0].0 != 0.0 {
            return Err(TrimError::BadValue {
                key: name.into(),
                message: "first breakpoint must be at advance ratio 0".into(),
            });
        }
    }
    // both tables are piecewise linear, so checking every breakpoint suffices
    for &(mu, _) in u2l.points().iter().chain(l2u.points()) {
        if u2l.eval(mu) < l2u.eval(mu) {
            return Err(TrimError::Validation {
                field: "calibration.interference_u2l".into(),
                value: u2l.eval(mu),
                bound: format!(">= interference_l2u ({}) at mu = {mu}", l2u.eval(mu)),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> String {
        DEFAULT_CONFIG.to_string()
    }

    #[test]
    fn default_config_derived_constants() {
        let cfg = HelicopterConfig::default_cch();
        assert!((cfg.rotor.disk_area - 94.68).abs() < 0.01);
        assert!((cfg.rotor.tip_speed - 192.15).abs() < 1e-9);
        assert!((cfg.rotor.first_moment - 97.66).abs() < 0.005);
        assert!((cfg.weight() - 53_936.575).abs() < 1e-6);
        assert!((cfg.rotor.upper_hub - Vector3::new(0.0, 0.0, -1.66)).norm() < 1e-12);
    }

    #[test]
    fn per_rotor_solidity_chord() {
        let text = table1().replace("solidity_basis = \"total\"", "solidity_basis = \"per_rotor\"");
        let cfg = validate_config(&text).unwrap();
        assert!((cfg.rotor.chord - 0.730).abs() < 5e-4, "{}", cfg.rotor.chord);
    }

    #[test]
    fn total_solidity_chord_matches_lock_number() {
        let cfg = HelicopterConfig::default_cch();
        assert_eq!(cfg.rotor.solidity_basis, SolidityBasis::Total);
        assert!((cfg.rotor.chord - 0.365).abs() < 5e-4);
        let implied = cfg.rotor.implied_lock_number(cfg.air_density);
        assert!((implied / cfg.rotor.lock_number - 1.0).abs() < 0.1, "{implied}");
    }

    #[test]
    fn zero_radius_is_rejected() {
        let text = table1().replace("rotor_radius = 5.49", "rotor_radius = 0.0");
        match validate_config(&text) {
            Err(TrimError::Validation { field, .. }) => assert_eq!(field, "helicopter.rotor_radius"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_key_is_named() {
        let text = table1().replace("mass = 5500.0", "");
        assert_eq!(
            validate_config(&text).unwrap_err(),
            TrimError::MissingKey("helicopter.mass".into())
        );
    }

    #[test]
    fn soft_rotor_is_rejected() {
        let text = table1().replace("flap_frequency_ratio = 1.4", "flap_frequency_ratio = 0.9");
        assert!(matches!(validate_config(&text), Err(TrimError::Validation { .. })));
    }

    #[test]
    fn interference_ordering_is_enforced() {
        let text = table1().replace(
            "[calibration]",
            "[calibration]\ninterference_l2u = [[0.0, 0.9], [0.1, 0.8], [0.4, 0.0]]",
        );
        assert!(validate_config(&text).is_err());
    }

    #[test]
    fn parsing_is_deterministic() {
        assert_eq!(validate_config(DEFAULT_CONFIG).unwrap(), validate_config(DEFAULT_CONFIG).unwrap());
    }

    #[test]
    fn airfoil_clamps_lift_beyond_stall() {
        let a = HelicopterConfig::default_cch().rotor.airfoil;
        let (cl, cd, dcl, _) = a.coefficients(20f64.to_radians());
        assert!((cl - 5.73 * 15f64.to_radians()).abs() < 1e-12);
        assert_eq!(dcl, 0.0);
        assert!((cd - (0.01 + 0.3 * 20f64.to_radians().powi(2))).abs() < 1e-12);
        assert!(a.is_stalled(-16f64.to_radians()));
    }
}
