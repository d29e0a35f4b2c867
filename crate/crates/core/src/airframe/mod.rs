//! Non-rotor components, gravity, and assembly of the total force and moment
//! about the CG.

use nalgebra::Vector3;
use serde::Serialize;

use crate::config::{HelicopterConfig, GRAVITY};
use crate::controls::{ControlVector, FlightCondition};
use crate::error::{Result, TrimError};
use crate::output::{sig6, Table};
use crate::rotor::{CoaxialInput, CoaxialSolution, InnerState, MainRotors, PropellerModel, PropellerSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Component {
    UpperRotor,
    LowerRotor,
    Propeller,
    Fuselage,
    HorizontalStabilizer,
    VerticalStabilizer,
    Gravity,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::UpperRotor,
        Component::LowerRotor,
        Component::Propeller,
        Component::Fuselage,
        Component::HorizontalStabilizer,
        Component::VerticalStabilizer,
        Component::Gravity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Component::UpperRotor => "U",
            Component::LowerRotor => "L",
            Component::Propeller => "Prop",
            Component::Fuselage => "Fus",
            Component::HorizontalStabilizer => "HS",
            Component::VerticalStabilizer => "VS",
            Component::Gravity => "G",
        }
    }
}

/// Force (N) and moment about the CG (N·m) of one component, body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentLoads {
    pub component: Component,
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl ComponentLoads {
    pub fn zero(component: Component) -> Self {
        Self {
            component,
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
        }
    }

    /// Loads of a force applied at `position` (body axes, relative to the CG).
    pub fn at(component: Component, position: Vector3<f64>, force: Vector3<f64>) -> Self {
        Self {
            component,
            force,
            moment: position.cross(&force),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadBreakdown {
    pub components: [ComponentLoads; 7],
    pub total_force: Vector3<f64>,
    pub total_moment: Vector3<f64>,
}

impl LoadBreakdown {
    pub fn new(components: [ComponentLoads; 7]) -> Self {
        let mut total_force = Vector3::zeros();
        let mut total_moment = Vector3::zeros();
        for c in &components {
            total_force += c.force;
            total_moment += c.moment;
        }
        Self {
            components,
            total_force,
            total_moment,
        }
    }

    pub fn get(&self, component: Component) -> &ComponentLoads {
        &self.components[Component::ALL.iter().position(|c| *c == component).unwrap()]
    }

    pub fn to_csv(&self) -> Table {
        let mut t = Table::new(&["component", "Fx", "Fy", "Fz", "Mx", "My", "Mz"]);
        let rows = self
            .components
            .iter()
            .map(|c| (c.component.tag(), c.force, c.moment))
            .chain(std::iter::once(("total", self.total_force, self.total_moment)));
        for (tag, f, m) in rows {
            t.row(&[
                tag.to_string(),
                sig6(f.x),
                sig6(f.y),
                sig6(f.z),
                sig6(m.x),
                sig6(m.y),
                sig6(m.z),
            ]);
        }
        t
    }
}

/// Air-relative velocity of the aircraft in body axes for straight and level
/// flight at `speed` with the given attitude (degrees).
pub fn body_velocity(speed: f64, pitch: f64, roll: f64) -> Vector3<f64> {
    let (st, ct) = pitch.to_radians().sin_cos();
    let (sp, cp) = roll.to_radians().sin_cos();
    Vector3::new(speed * ct, speed * st * sp, speed * st * cp)
}

/// Weight in body axes, applied at the CG.
pub fn gravity_loads(mass: f64, pitch: f64, roll: f64) -> ComponentLoads {
    let (st, ct) = pitch.to_radians().sin_cos();
    let (sp, cp) = roll.to_radians().sin_cos();
    let w = mass * GRAVITY;
    ComponentLoads {
        component: Component::Gravity,
        force: Vector3::new(-w * st, w * ct * sp, w * ct * cp),
        moment: Vector3::zeros(),
    }
}

/// Wake-immersion effectiveness of the tail controls: zero up to `start`,
/// one from `end`, cubic smoothstep between.
pub fn control_effectiveness(speed: f64, start: f64, end: f64) -> f64 {
    if speed <= start {
        return 0.0;
    }
    if speed >= end {
        return 1.0;
    }
    let t = (speed - start) / (end - start);
    t * t * (3.0 - 2.0 * t)
}

/// Angle of attack and sideslip (radians) of an air-relative body velocity.
fn incidence(v: &Vector3<f64>) -> (f64, f64) {
    let speed = v.norm();
    if speed == 0.0 {
        return (0.0, 0.0);
    }
    (v.z.atan2(v.x), (v.y / speed).clamp(-1.0, 1.0).asin())
}

/// Unit lift direction (upward, perpendicular to the flow in the x–z plane).
fn lift_direction(alpha: f64) -> Vector3<f64> {
    Vector3::new(alpha.sin(), 0.0, -alpha.cos())
}

/// Precomputed model of the whole aircraft.
#[derive(Debug, Clone)]
pub struct Airframe {
    pub config: HelicopterConfig,
    pub rotors: MainRotors,
    pub propeller: PropellerModel,
}

/// Warm-start data carried between neighbouring evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmStart {
    pub rotors: InnerState,
    pub propeller: f64,
}

/// Full evaluation of the aircraft at one control vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub breakdown: LoadBreakdown,
    pub rotors: CoaxialSolution,
    pub propeller: PropellerSolution,
    pub lift_offset: f64,
}

impl Evaluation {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            rotors: self.rotors.state,
            propeller: self.propeller.lambda,
        }
    }

    /// `T_u + T_l`, N.
    pub fn rotor_load(&self) -> f64 {
        self.rotors.upper.loads.thrust + self.rotors.lower.loads.thrust
    }

    /// Shaft power of both rotors and the propeller, W.
    pub fn power(&self) -> f64 {
        self.rotors.upper.loads.power + self.rotors.lower.loads.power + self.propeller.loads.power
    }
}

impl Airframe {
    pub fn new(config: HelicopterConfig) -> Self {
        let rotors = MainRotors::new(&config);
        let propeller = PropellerModel::new(&config.propeller);
        Self {
            config,
            rotors,
            propeller,
        }
    }

    pub fn weight(&self) -> f64 {
        self.config.weight()
    }

    /// Propeller loads at collective `theta_prop` (degrees).
    pub fn propeller_loads(
        &self,
        theta_prop: f64,
        condition: &FlightCondition,
        pitch: f64,
        roll: f64,
        warm: Option<f64>,
    ) -> Result<PropellerSolution> {
        let v = body_velocity(condition.speed, pitch, roll);
        self.propeller.solve(theta_prop, v, condition.air_density, warm)
    }

    /// Propeller collective (degrees) giving zero thrust at this attitude.
    pub fn zero_thrust_pitch(&self, condition: &FlightCondition, pitch: f64, roll: f64) -> Result<f64> {
        let v = body_velocity(condition.speed, pitch, roll);
        let rho = condition.air_density;
        let scale = self.propeller.thrust_scale(rho);
        let thrust = |p: f64, warm: Option<f64>| -> Result<(f64, f64)> {
            let s = self.propeller.solve(p, v, rho, warm)?;
            Ok((s.loads.thrust / scale, s.lambda))
        };
        // secant from the no-lift guess of the 75% station, safeguarded by bisection
        let vt = self.propeller.rotor_speed() * self.config.propeller.radius;
        let x = 0.75;
        let reference = self.config.propeller.collective_reference;
        let guess = (v.x / (x * vt)).atan().to_degrees() + self.config.propeller.airfoil.zero_lift_angle.to_degrees()
            - self.config.propeller.twist * (x - reference);
        let (mut a, mut b) = (guess - 2.0, guess + 2.0);
        let (mut fa, wa) = thrust(a, None)?;
        let (mut fb, mut warm) = thrust(b, Some(wa))?;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for _ in 0..60 {
            if fa < 0.0 {
                lo = lo.max(a);
            } else {
                hi = hi.min(a);
            }
            if fb < 0.0 {
                lo = lo.max(b);
            } else {
                hi = hi.min(b);
            }
            if fb.abs() < 1e-13 {
                return Ok(b);
            }
            let mut c = if fb != fa { b - fb * (b - a) / (fb - fa) } else { b + 1.0 };
            if lo.is_finite() && hi.is_finite() && !(c > lo && c < hi) {
                c = 0.5 * (lo + hi);
            }
            c = c.clamp(b - 10.0, b + 10.0);
            let (fc, w) = thrust(c, Some(warm))?;
            warm = w;
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            if (b - a).abs() < 1e-11 {
                return Ok(b);
            }
        }
        Err(TrimError::Propeller("zero-thrust pitch search did not converge".into()))
    }

    /// Fuselage surrogate: drag on the flat-plate area growing with incidence,
    /// lift and pitching moment linear in angle of attack.
    pub fn fuselage_loads(&self, condition: &FlightCondition, pitch: f64, roll: f64) -> ComponentLoads {
        let f = &self.config.fuselage;
        let v = body_velocity(condition.speed, pitch, roll);
        let speed = v.norm();
        if speed == 0.0 {
            return ComponentLoads::zero(Component::Fuselage);
        }
        let q = condition.dynamic_pressure();
        let (alpha, _) = incidence(&v);
        let drag = q * f.flat_plate_area * (1.0 + f.drag_alpha_factor * alpha * alpha);
        let lift = q * f.lift_slope_area * alpha;
        let force = -v / speed * drag + lift_direction(alpha) * lift;
        let mut loads = ComponentLoads::at(Component::Fuselage, f.reference_point, force);
        loads.moment.y += q * (f.moment_volume + f.moment_slope_volume * alpha);
        loads
    }

    /// Horizontal and vertical stabilizer loads with elevator and rudder
    /// deflections in degrees.
    pub fn empennage_loads(
        &self,
        condition: &FlightCondition,
        pitch: f64,
        roll: f64,
        delta_e: f64,
        delta_r: f64,
    ) -> (ComponentLoads, ComponentLoads) {
        let e = &self.config.empennage;
        let v = body_velocity(condition.speed, pitch, roll);
        let speed = v.norm();
        if speed == 0.0 {
            return (
                ComponentLoads::zero(Component::HorizontalStabilizer),
                ComponentLoads::zero(Component::VerticalStabilizer),
            );
        }
        let q = condition.dynamic_pressure();
        let eta = control_effectiveness(condition.speed, e.ramp_start, e.ramp_end);
        let (alpha, beta) = incidence(&v);
        let flow = v / speed;

        let hs_alpha = alpha + e.hs_incidence.to_radians() + eta * e.elevator_effectiveness * delta_e.to_radians();
        let hs_force = lift_direction(alpha) * (q * e.hs_area * e.lift_slope * hs_alpha)
            - flow * (q * e.hs_area * e.profile_drag);

        let vs_beta = -beta + e.vs_incidence.to_radians() + eta * e.rudder_effectiveness * delta_r.to_radians();
        let side = Vector3::new(-beta.sin(), beta.cos(), 0.0);
        let vs_force = side * (q * e.vs_area * e.lift_slope * vs_beta) - flow * (q * e.vs_area * e.profile_drag);

        (
            ComponentLoads::at(Component::HorizontalStabilizer, e.hs_position, hs_force),
            ComponentLoads::at(Component::VerticalStabilizer, e.vs_position, vs_force),
        )
    }

    /// Solve both rotors and the propeller and assemble all seven components.
    pub fn total_loads(
        &self,
        x: &ControlVector,
        condition: &FlightCondition,
        warm: Option<&WarmStart>,
    ) -> Result<Evaluation> {
        let v = body_velocity(condition.speed, x.pitch, x.roll);
        let rotors = self.rotors.solve(
            &CoaxialInput {
                upper: x.upper_rotor(),
                lower: x.lower_rotor(),
                velocity: v,
                air_density: condition.air_density,
                interference: None,
            },
            warm.map(|w| &w.rotors),
            self.weight(),
        )?;
        let propeller = self.propeller.solve(x.theta_prop, v, condition.air_density, warm.map(|w| w.propeller))?;
        let fuselage = self.fuselage_loads(condition, x.pitch, x.roll);
        let (hs, vs) = self.empennage_loads(condition, x.pitch, x.roll, x.delta_e, x.delta_r);
        let breakdown = LoadBreakdown::new([
            ComponentLoads {
                component: Component::UpperRotor,
                force: rotors.upper.loads.force,
                moment: rotors.upper.loads.moment,
            },
            ComponentLoads {
                component: Component::LowerRotor,
                force: rotors.lower.loads.force,
                moment: rotors.lower.loads.moment,
            },
            ComponentLoads {
                component: Component::Propeller,
                force: propeller.loads.force,
                moment: propeller.loads.moment,
            },
            fuselage,
            hs,
            vs,
            gravity_loads(self.config.mass, x.pitch, x.roll),
        ]);
        let lift_offset = crate::rotor::lift_offset(
            &rotors.upper.loads,
            &rotors.lower.loads,
            self.config.rotor.radius,
        )
        .unwrap_or(0.0);
        Ok(Evaluation {
            breakdown,
            rotors,
            propeller,
            lift_offset,
        })
    }

    /// Pitch control efficiency of the elevator, `ΔMy/(Δδe·Iy)` in 1/(s²·deg),
    /// by central difference with step `step` degrees.
    pub fn elevator_control_efficiency(
        &self,
        condition: &FlightCondition,
        baseline: &ControlVector,
        step: f64,
    ) -> f64 {
        let my = |de: f64| {
            let (hs, _) = self.empennage_loads(condition, baseline.pitch, baseline.roll, de, baseline.delta_r);
            hs.moment.y
        };
        // only the horizontal stabilizer depends on the elevator
        (my(baseline.delta_e + step) - my(baseline.delta_e - step)) / (2.0 * step * self.config.pitch_inertia)
    }
}
