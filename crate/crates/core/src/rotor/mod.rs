//! Coaxial rotor aerodynamics.
//!
//! Each rotor is integrated with blade elements over a radial/azimuthal grid.
//! The first-harmonic flapping of the equivalent-hinge blade, the inherent mean
//! inflow of both rotors and their mutual interference are solved together with
//! a damped Newton iteration using analytic sensitivities of the blade-element
//! pass.

pub(crate) mod blade;
pub mod inflow;

use std::io::Write;

use nalgebra::{SMatrix, SVector, Vector3};
use serde::Serialize;

use crate::config::{Airfoil, HelicopterConfig, PropellerConfig};
use crate::controls::RotorPitch;
use crate::error::{Result, TrimError};
use crate::schedule::Schedule;
use blade::{Grid, PassInput, PassOutput};
pub use inflow::{couple_induced_velocities, interference_factors, pitt_peters_harmonics, wake_skew_angle};

const NEWTON_TOL: f64 = 1e-13;
const MAX_NEWTON: usize = 60;
const MAX_FLAP_ITER: usize = 200;
const SMALL_FLAP: f64 = 0.3;

/// Orthonormal hub axes expressed in body axes. `z` points along the shaft
/// away from the disk's thrust side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubFrame {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub z: Vector3<f64>,
}

impl HubFrame {
    /// Main-rotor shaft tilted forward by `tilt_deg`.
    pub fn shaft(tilt_deg: f64) -> Self {
        let (s, c) = tilt_deg.to_radians().sin_cos();
        Self {
            x: Vector3::new(c, 0.0, s),
            y: Vector3::new(0.0, 1.0, 0.0),
            z: Vector3::new(-s, 0.0, c),
        }
    }

    /// Pusher propeller: thrust along body `+x`.
    pub fn propeller() -> Self {
        Self {
            x: Vector3::new(0.0, 0.0, 1.0),
            y: Vector3::new(0.0, 1.0, 0.0),
            z: Vector3::new(-1.0, 0.0, 0.0),
        }
    }

    pub fn to_body(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    pub fn from_body(&self, v: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.x.dot(&v), self.y.dot(&v), self.z.dot(&v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RotorId {
    Upper,
    Lower,
}

impl RotorId {
    fn index(self) -> usize {
        match self {
            RotorId::Upper => 0,
            RotorId::Lower => 1,
        }
    }
}

/// Mean and first-harmonic inflow of one rotor. Velocities in m/s, skew in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InflowState {
    pub inherent_mean: f64,
    pub k1s: f64,
    pub k1c: f64,
    pub skew: f64,
    pub total_mean: f64,
}

/// Induced-velocity field `v(ψ, x) = mean + harmonic·x·cos ψ_w` in m/s, with
/// `ψ_w` measured from the downwind direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InflowField {
    pub mean: f64,
    pub harmonic: f64,
}

/// First-harmonic flapping in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FlapState {
    pub beta0: f64,
    pub beta1c: f64,
    pub beta1s: f64,
}

impl FlapState {
    pub fn is_small(&self) -> bool {
        self.beta0.abs() < SMALL_FLAP && self.beta1c.abs() < SMALL_FLAP && self.beta1s.abs() < SMALL_FLAP
    }

    fn array(&self) -> [f64; 3] {
        [self.beta0, self.beta1c, self.beta1s]
    }
}

/// Loads of one rotor. Force and moments in body axes; `moment` is about the
/// CG and includes the torque reaction; `hub_moment` is the aerodynamic hub
/// moment alone.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RotorLoads {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
    pub hub_moment: Vector3<f64>,
    pub thrust: f64,
    pub torque: f64,
    pub power: f64,
    pub sense: f64,
    pub stalled_elements: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotorSolution {
    pub inflow: InflowState,
    pub flap: FlapState,
    pub loads: RotorLoads,
    /// Blade-element minus momentum thrust, N.
    pub thrust_residual: f64,
}

/// Converged unknowns of the coaxial solve, reusable as a warm start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerState(pub [f64; 8]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoaxialSolution {
    pub upper: RotorSolution,
    pub lower: RotorSolution,
    pub interference: (f64, f64),
    pub iterations: usize,
    #[serde(skip)]
    pub state: InnerState,
}

/// Inputs of a coaxial solve.
#[derive(Debug, Clone, Copy)]
pub struct CoaxialInput {
    pub upper: RotorPitch,
    pub lower: RotorPitch,
    /// Air-relative velocity of the aircraft in body axes, m/s.
    pub velocity: Vector3<f64>,
    pub air_density: f64,
    /// `(δ_u2l, δ_l2u)` overriding the calibration tables.
    pub interference: Option<(f64, f64)>,
}

/// Precomputed model of the coaxial main-rotor pair.
#[derive(Debug, Clone)]
pub struct MainRotors {
    grid: Grid,
    airfoil: Airfoil,
    blades: f64,
    chord: f64,
    radius: f64,
    omega: f64,
    hinge: f64,
    nu2: f64,
    flap_inertia: f64,
    flap_spring: f64,
    twist: f64,
    collective_reference: f64,
    control_phase: f64,
    inboard: f64,
    pub frame: HubFrame,
    pub hubs: [Vector3<f64>; 2],
    pub senses: [f64; 2],
    u2l: Schedule,
    l2u: Schedule,
}

struct RotorPass {
    input: PassInput,
    output: PassOutput,
}

impl MainRotors {
    pub fn new(cfg: &HelicopterConfig) -> Self {
        let r = &cfg.rotor;
        Self {
            grid: Grid::new(r.root_cutout, r.radial_stations, r.azimuth_stations),
            airfoil: r.airfoil,
            blades: r.blades as f64,
            chord: r.chord,
            radius: r.radius,
            omega: r.rotor_speed,
            hinge: r.hinge_offset,
            nu2: r.flap_frequency_ratio * r.flap_frequency_ratio,
            flap_inertia: r.flap_inertia,
            flap_spring: r.flap_spring(),
            twist: r.twist.to_radians(),
            collective_reference: r.collective_reference,
            control_phase: r.control_phase.to_radians(),
            inboard: if r.inboard_hub_moment { 1.0 } else { 0.0 },
            frame: HubFrame::shaft(r.shaft_tilt),
            hubs: [r.upper_hub, r.lower_hub],
            senses: [r.upper_sense, -r.upper_sense],
            u2l: cfg.calibration.interference_u2l.clone(),
            l2u: cfg.calibration.interference_l2u.clone(),
        }
    }

    pub fn tip_speed(&self) -> f64 {
        self.omega * self.radius
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rotor_speed(&self) -> f64 {
        self.omega
    }

    pub fn disk_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    fn solidity(&self) -> f64 {
        self.blades * self.chord / (std::f64::consts::PI * self.radius)
    }

    /// `ρcR⁴/(2Iβ)`: sectional force integral to flap-moment ratio.
    fn flap_gain(&self, rho: f64) -> f64 {
        rho * self.chord * self.radius.powi(4) / (2.0 * self.flap_inertia)
    }

    /// Advance ratio components and climb inflow of the hub, from the body velocity.
    fn kinematics(&self, velocity: Vector3<f64>) -> (f64, f64, f64) {
        let vh = self.frame.from_body(velocity) / self.tip_speed();
        (vh.x, vh.y, -vh.z)
    }

    fn pass_input(&self, id: RotorId, pitch: RotorPitch, velocity: Vector3<f64>) -> PassInput {
        let s = self.senses[id.index()];
        let (mu_x, mu_y, lambda_climb) = self.kinematics(velocity);
        let theta0 = pitch.collective.to_radians();
        // the swashplate applies each input `control_phase` later in azimuth
        let (a, b) = (s * pitch.lateral.to_radians(), pitch.longitudinal.to_radians());
        let (sd, cd) = self.control_phase.sin_cos();
        PassInput {
            root_pitch: theta0 - self.twist * self.collective_reference,
            twist: self.twist,
            cyclic_cos: a * cd - b * sd,
            cyclic_sin: a * sd + b * cd,
            sense: s,
            mu_x,
            mu_y,
            lambda_climb,
            lambda_mean: 0.0,
            lambda_harmonic: 0.0,
            beta: [0.0; 3],
            hinge: self.hinge,
        }
    }

    /// Interference factors `(δ_u2l, δ_l2u)` at the hub advance ratio.
    pub fn interference(&self, velocity: Vector3<f64>) -> (f64, f64) {
        let (mx, my, _) = self.kinematics(velocity);
        let mu = mx.hypot(my);
        (self.u2l.eval(mu), self.l2u.eval(mu))
    }

    fn loads(&self, id: RotorId, pass: &RotorPass, rho: f64) -> RotorLoads {
        let j = id.index();
        let s = self.senses[j];
        let out = &pass.output;
        let [_, b1c, b1s] = pass.input.beta;
        let vt = self.tip_speed();
        let factor = self.blades * 0.5 * rho * self.chord * vt * vt * self.radius;
        let thrust = factor * out.thrust;
        let torque = factor * self.radius * out.torque;
        let force = self.frame.to_body(Vector3::new(factor * out.hub_x, factor * out.hub_y, -thrust));
        let spring = 0.5 * self.blades * self.flap_spring;
        let hub_local = Vector3::new(
            -s * spring * b1s + self.inboard * factor * self.radius * out.inboard_mx,
            -spring * b1c + self.inboard * factor * self.radius * out.inboard_my,
            0.0,
        );
        let hub_moment = self.frame.to_body(hub_local);
        let reaction = self.frame.z * (s * torque);
        let moment = hub_moment + reaction + self.hubs[j].cross(&force);
        RotorLoads {
            force,
            moment,
            hub_moment,
            thrust,
            torque,
            power: torque.abs() * self.omega,
            sense: s,
            stalled_elements: out.stalled,
        }
    }

    /// Loads of one rotor for a prescribed inflow field and flapping.
    pub fn blade_element_loads(
        &self,
        id: RotorId,
        pitch: RotorPitch,
        field: InflowField,
        flap: FlapState,
        velocity: Vector3<f64>,
        air_density: f64,
    ) -> RotorLoads {
        let mut input = self.pass_input(id, pitch, velocity);
        input.lambda_mean = field.mean / self.tip_speed();
        input.lambda_harmonic = field.harmonic / self.tip_speed();
        input.beta = flap.array();
        let output = blade::run(&self.grid, &self.airfoil, &input, false);
        self.loads(id, &RotorPass { input, output }, air_density)
    }

    /// Write the per-element `(ψ, r, dT, dQ)` table of one rotor as CSV.
    /// `dT` and `dQ` are non-dimensional element contributions.
    #[allow(clippy::too_many_arguments)]
    pub fn dump_elements(
        &self,
        id: RotorId,
        pitch: RotorPitch,
        field: InflowField,
        flap: FlapState,
        velocity: Vector3<f64>,
        sink: impl Write,
    ) -> Result<()> {
        let mut input = self.pass_input(id, pitch, velocity);
        input.lambda_mean = field.mean / self.tip_speed();
        input.lambda_harmonic = field.harmonic / self.tip_speed();
        input.beta = flap.array();
        blade::dump(&self.grid, &self.airfoil, &input, sink)?;
        Ok(())
    }

    fn flap_residual(&self, out: &PassOutput, beta: [f64; 3], gain: f64) -> [f64; 3] {
        [
            self.nu2 * beta[0] - gain * out.flap[0],
            (self.nu2 - 1.0) * beta[1] - gain * out.flap[1],
            (self.nu2 - 1.0) * beta[2] - gain * out.flap[2],
        ]
    }

    /// Quasi-steady flapping for a prescribed inflow field.
    pub fn solve_flapping(
        &self,
        id: RotorId,
        pitch: RotorPitch,
        field: InflowField,
        velocity: Vector3<f64>,
        air_density: f64,
    ) -> Result<FlapState> {
        let mut input = self.pass_input(id, pitch, velocity);
        input.lambda_mean = field.mean / self.tip_speed();
        input.lambda_harmonic = field.harmonic / self.tip_speed();
        let gain = self.flap_gain(air_density);
        let mut last = f64::INFINITY;
        for _ in 0..MAX_FLAP_ITER {
            let out = blade::run(&self.grid, &self.airfoil, &input, true);
            let f = self.flap_residual(&out, input.beta, gain);
            let mut jac = SMatrix::<f64, 3, 3>::zeros();
            for i in 0..3 {
                for l in 0..3 {
                    let diag = if i != l {
                        0.0
                    } else if i == 0 {
                        self.nu2
                    } else {
                        self.nu2 - 1.0
                    };
                    jac[(i, l)] = diag - gain * out.jac[1 + i][l];
                }
            }
            let step = jac
                .lu()
                .solve(&-SVector::<f64, 3>::from(f))
                .ok_or_else(|| TrimError::Rotor {
                    iterations: 0,
                    residual: f64::NAN,
                })?;
            for i in 0..3 {
                input.beta[i] += step[i];
            }
            last = step.amax();
            if last < 1e-12 {
                let [beta0, beta1c, beta1s] = input.beta;
                return Ok(FlapState { beta0, beta1c, beta1s });
            }
        }
        Err(TrimError::Rotor {
            iterations: MAX_FLAP_ITER,
            residual: last,
        })
    }

    fn initial_state(&self, inp: &CoaxialInput, weight_guess: f64) -> [f64; 8] {
        let vt = self.tip_speed();
        let ct = 0.5 * weight_guess / (inp.air_density * self.disk_area() * vt * vt);
        let (mx, my, lc) = self.kinematics(inp.velocity);
        let mu = mx.hypot(my);
        let hover = (0.5 * ct).sqrt();
        let lam = ct / (2.0 * (mu * mu + (lc + hover).powi(2)).sqrt());
        let beta0 = 0.05;
        [beta0, 0.0, 0.0, beta0, 0.0, 0.0, lam, lam]
    }

    /// Solve flapping and inflow of both rotors.
    pub fn solve(
        &self,
        inp: &CoaxialInput,
        warm: Option<&InnerState>,
        weight_guess: f64,
    ) -> Result<CoaxialSolution> {
        let rho = inp.air_density;
        let (mx, my, lw) = self.kinematics(inp.velocity);
        let mu = mx.hypot(my);
        let (du2l, dl2u) = inp.interference.unwrap_or_else(|| self.interference(inp.velocity));
        // interference received by each rotor
        let delta = [dl2u, du2l];
        let base = [
            self.pass_input(RotorId::Upper, inp.upper, inp.velocity),
            self.pass_input(RotorId::Lower, inp.lower, inp.velocity),
        ];
        let gain = self.flap_gain(rho);
        let half_sigma = 0.5 * self.solidity();
        let nu2 = self.nu2;

        struct Eval {
            f: [f64; 8],
            passes: [RotorPass; 2],
            k: [f64; 2],
            normal: [f64; 2],
            mean: [f64; 2],
        }

        let eval = |z: &[f64; 8], with_jac: bool, jac: &mut SMatrix<f64, 8, 8>| -> Eval {
            let lp = [z[6], z[7]];
            let normal = [lw + lp[0] + delta[0] * lp[1], lw + lp[1] + delta[1] * lp[0]];
            let kk = [
                inflow::k1c_and_slope(mu, normal[0]),
                inflow::k1c_and_slope(mu, normal[1]),
            ];
            let mut f = [0.0; 8];
            let mut mean = [0.0; 2];
            let passes = [0usize, 1].map(|j| {
                let k = 1 - j;
                let m = lp[j] + delta[j] * lp[k];
                let a = lp[j] * kk[j].0 + delta[j] * lp[k] * kk[k].0;
                mean[j] = m;
                let mut input = base[j];
                input.lambda_mean = m;
                input.lambda_harmonic = a;
                input.beta = [z[3 * j], z[3 * j + 1], z[3 * j + 2]];
                let out = blade::run(&self.grid, &self.airfoil, &input, with_jac);
                let fr = self.flap_residual(&out, input.beta, gain);
                f[3 * j..3 * j + 3].copy_from_slice(&fr);
                let sj = (mu * mu + normal[j] * normal[j]).sqrt().max(1e-12);
                f[6 + j] = half_sigma * out.thrust - 2.0 * lp[j] * sj;
                if with_jac {
                    // sensitivities of the mean and harmonic inflow to λ'_j, λ'_k
                    let (kj, dkj) = kk[j];
                    let (kk_, dkk) = kk[k];
                    let dm = [1.0, delta[j]];
                    let da = [
                        kj + lp[j] * dkj + delta[j] * lp[k] * dkk * delta[k],
                        lp[j] * dkj * delta[j] + delta[j] * kk_ + delta[j] * lp[k] * dkk,
                    ];
                    let dmom = [
                        2.0 * sj + 2.0 * lp[j] * normal[j] / sj,
                        2.0 * lp[j] * normal[j] * delta[j] / sj,
                    ];
                    let cols = [6 + j, 6 + k];
                    for i in 0..3 {
                        for l in 0..3 {
                            let diag = match (i == l, i) {
                                (false, _) => 0.0,
                                (true, 0) => nu2,
                                (true, _) => nu2 - 1.0,
                            };
                            jac[(3 * j + i, 3 * j + l)] = diag - gain * out.jac[1 + i][l];
                            jac[(3 * k + i, 3 * j + l)] = 0.0;
                        }
                        for c in 0..2 {
                            jac[(3 * j + i, cols[c])] =
                                -gain * (out.jac[1 + i][3] * dm[c] + out.jac[1 + i][4] * da[c]);
                        }
                    }
                    for l in 0..3 {
                        jac[(6 + j, 3 * j + l)] = half_sigma * out.jac[0][l];
                        jac[(6 + j, 3 * k + l)] = 0.0;
                    }
                    for c in 0..2 {
                        jac[(6 + j, cols[c])] =
                            half_sigma * (out.jac[0][3] * dm[c] + out.jac[0][4] * da[c]) - dmom[c];
                    }
                }
                RotorPass { input, output: out }
            });
            Eval {
                f,
                passes,
                k: [kk[0].0, kk[1].0],
                normal,
                mean,
            }
        };

        let norm = |f: &[f64; 8]| f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut z = warm.map(|w| w.0).unwrap_or_else(|| self.initial_state(inp, weight_guess));
        let mut jac = SMatrix::<f64, 8, 8>::zeros();
        let mut cur = eval(&z, true, &mut jac);
        let mut iterations = 0;
        let mut converged = norm(&cur.f) < NEWTON_TOL;
        while !converged && iterations < MAX_NEWTON {
            iterations += 1;
            let rhs = -SVector::<f64, 8>::from(cur.f);
            let step = match jac.lu().solve(&rhs) {
                Some(s) => s,
                None => break,
            };
            let f0 = norm(&cur.f);
            let mut t = 1.0;
            let mut scratch = SMatrix::<f64, 8, 8>::zeros();
            let next = loop {
                let mut trial = z;
                for i in 0..8 {
                    trial[i] += t * step[i];
                }
                let e = eval(&trial, false, &mut scratch);
                let fn_ = norm(&e.f);
                if fn_ < (1.0 - 1e-4 * t) * f0 || t < 1e-3 || fn_ < NEWTON_TOL {
                    break (trial, e);
                }
                t *= 0.5;
            };
            let small_step = t * step.amax() < 1e-15;
            z = next.0;
            cur = eval(&z, true, &mut jac);
            converged = norm(&cur.f) < NEWTON_TOL || (small_step && norm(&cur.f) < 1e-10);
        }

        let vt = self.tip_speed();
        let thrust_scale = rho * self.disk_area() * vt * vt;
        if !converged {
            return Err(TrimError::Inflow {
                iterations,
                upper: cur.f[6] * thrust_scale,
                lower: cur.f[7] * thrust_scale,
            });
        }

        let solution = |id: RotorId| {
            let j = id.index();
            let pass = &cur.passes[j];
            let loads = self.loads(id, pass, rho);
            let [beta0, beta1c, beta1s] = pass.input.beta;
            RotorSolution {
                inflow: InflowState {
                    inherent_mean: z[6 + j] * vt,
                    k1s: 0.0,
                    k1c: cur.k[j],
                    skew: wake_skew_angle(mu, cur.normal[j]),
                    total_mean: cur.mean[j] * vt,
                },
                flap: FlapState { beta0, beta1c, beta1s },
                loads,
                thrust_residual: cur.f[6 + j] * thrust_scale,
            }
        };
        Ok(CoaxialSolution {
            upper: solution(RotorId::Upper),
            lower: solution(RotorId::Lower),
            interference: (du2l, dl2u),
            iterations,
            state: InnerState(z),
        })
    }
}

/// Lateral lift offset `ΔMx/(T·R)` of the rotor pair. Each rotor's roll
/// moment is signed so that lift on its own advancing side counts positive.
pub fn lift_offset(upper: &RotorLoads, lower: &RotorLoads, radius: f64) -> Result<f64> {
    let thrust = upper.thrust + lower.thrust;
    if !(thrust > 0.0) {
        return Err(TrimError::Domain(format!(
            "lift offset undefined for total rotor thrust {thrust:.3} N"
        )));
    }
    let dmx = -(upper.sense * upper.hub_moment.x + lower.sense * lower.hub_moment.x);
    Ok(dmx / (thrust * radius))
}

/// Propeller: a rigid rotor on the body x axis with collective pitch only.
#[derive(Debug, Clone)]
pub struct PropellerModel {
    grid: Grid,
    airfoil: Airfoil,
    blades: f64,
    chord: f64,
    radius: f64,
    omega: f64,
    twist: f64,
    collective_reference: f64,
    sense: f64,
    pub frame: HubFrame,
    pub hub: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropellerSolution {
    pub loads: RotorLoads,
    pub inflow: InflowState,
    /// Inherent inflow ratio, reusable as a warm start.
    pub lambda: f64,
    pub iterations: usize,
}

impl PropellerModel {
    pub fn new(cfg: &PropellerConfig) -> Self {
        Self {
            grid: Grid::new(cfg.root_cutout, cfg.radial_stations, cfg.azimuth_stations),
            airfoil: cfg.airfoil,
            blades: cfg.blades as f64,
            chord: cfg.chord,
            radius: cfg.radius,
            omega: cfg.rotor_speed,
            twist: cfg.twist.to_radians(),
            collective_reference: cfg.collective_reference,
            sense: cfg.sense,
            frame: HubFrame::propeller(),
            hub: cfg.hub,
        }
    }

    pub fn rotor_speed(&self) -> f64 {
        self.omega
    }

    fn disk_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Solve the propeller at collective `pitch_deg` (referenced at the
    /// configured station).
    pub fn solve(
        &self,
        pitch_deg: f64,
        velocity: Vector3<f64>,
        air_density: f64,
        warm: Option<f64>,
    ) -> Result<PropellerSolution> {
        let vt = self.omega * self.radius;
        let vh = self.frame.from_body(velocity) / vt;
        let (mx, my, lw) = (vh.x, vh.y, -vh.z);
        let mu = mx.hypot(my);
        let input = PassInput {
            root_pitch: pitch_deg.to_radians() - self.twist * self.collective_reference,
            twist: self.twist,
            cyclic_cos: 0.0,
            cyclic_sin: 0.0,
            sense: self.sense,
            mu_x: mx,
            mu_y: my,
            lambda_climb: lw,
            lambda_mean: 0.0,
            lambda_harmonic: 0.0,
            beta: [0.0; 3],
            hinge: 0.0,
        };
        let half_sigma = 0.5 * self.blades * self.chord / (std::f64::consts::PI * self.radius);
        let eval = |lp: f64, with_jac: bool| {
            let normal = lw + lp;
            let (k, dk) = inflow::k1c_and_slope(mu, normal);
            let mut inp = input;
            inp.lambda_mean = lp;
            inp.lambda_harmonic = lp * k;
            let out = blade::run(&self.grid, &self.airfoil, &inp, with_jac);
            let s = (mu * mu + normal * normal).sqrt().max(1e-12);
            let f = half_sigma * out.thrust - 2.0 * lp * s;
            let df = half_sigma * (out.jac[0][3] + out.jac[0][4] * (k + lp * dk))
                - (2.0 * s + 2.0 * lp * normal / s);
            (f, df, out, k, normal)
        };

        let mut lp = warm.unwrap_or_else(|| {
            // start from the axial momentum solution for the current pitch sign
            let probe = blade::run(&self.grid, &self.airfoil, &input, false);
            let ct = half_sigma * probe.thrust;
            let l = lw.max(0.0);
            0.5 * (-(l) + (l * l + 2.0 * ct.abs()).sqrt()) * ct.signum()
        });
        let mut cur = eval(lp, true);
        let mut iterations = 0;
        while cur.0.abs() >= NEWTON_TOL {
            if iterations >= 100 || cur.1 == 0.0 || !cur.1.is_finite() {
                return Err(TrimError::Propeller(format!(
                    "inflow did not converge at pitch {pitch_deg:.4} deg (residual {:.3e})",
                    cur.0
                )));
            }
            iterations += 1;
            let step = -cur.0 / cur.1;
            let mut t = 1.0;
            let next = loop {
                let trial = lp + t * step;
                let e = eval(trial, false);
                if e.0.abs() < (1.0 - 1e-4 * t) * cur.0.abs() || t < 1e-3 {
                    break trial;
                }
                t *= 0.5;
            };
            if (next - lp).abs() < 1e-16 {
                lp = next;
                cur = eval(lp, true);
                break;
            }
            lp = next;
            cur = eval(lp, true);
        }
        if cur.0.abs() > 1e-10 {
            return Err(TrimError::Propeller(format!(
                "inflow stalled at pitch {pitch_deg:.4} deg (residual {:.3e})",
                cur.0
            )));
        }

        let (_, _, out, k, normal) = cur;
        let factor = self.blades * 0.5 * air_density * self.chord * vt * vt * self.radius;
        let thrust = factor * out.thrust;
        let torque = factor * self.radius * out.torque;
        let force = self.frame.to_body(Vector3::new(factor * out.hub_x, factor * out.hub_y, -thrust));
        let hub_moment = self.frame.to_body(Vector3::new(
            factor * self.radius * out.inboard_mx,
            factor * self.radius * out.inboard_my,
            0.0,
        ));
        let moment = hub_moment + self.frame.z * (self.sense * torque) + self.hub.cross(&force);
        Ok(PropellerSolution {
            loads: RotorLoads {
                force,
                moment,
                hub_moment,
                thrust,
                torque,
                power: torque.abs() * self.omega,
                sense: self.sense,
                stalled_elements: out.stalled,
            },
            inflow: InflowState {
                inherent_mean: lp * vt,
                k1s: 0.0,
                k1c: k,
                skew: wake_skew_angle(mu, normal),
                total_mean: lp * vt,
            },
            lambda: lp,
            iterations,
        })
    }

    /// Thrust coefficient base `ρA(ΩR)²`, N.
    pub fn thrust_scale(&self, air_density: f64) -> f64 {
        let vt = self.omega * self.radius;
        air_density * self.disk_area() * vt * vt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{HelicopterConfig, GRAVITY};

    fn hover_input(theta0: f64) -> CoaxialInput {
        CoaxialInput {
            upper: RotorPitch {
                collective: theta0,
                ..Default::default()
            },
            lower: RotorPitch {
                collective: theta0,
                ..Default::default()
            },
            velocity: Vector3::zeros(),
            air_density: 1.225,
            interference: None,
        }
    }

    #[test]
    fn hub_frame_is_right_handed() {
        for f in [HubFrame::shaft(3.0), HubFrame::propeller()] {
            assert!((f.x.cross(&f.y) - f.z).norm() < 1e-15);
            let v = Vector3::new(1.0, -2.0, 0.5);
            assert!((f.to_body(f.from_body(v)) - v).norm() < 1e-14);
        }
    }

    #[test]
    fn hover_solution_closes_momentum() {
        let cfg = HelicopterConfig::default_cch();
        let rotors = MainRotors::new(&cfg);
        let sol = rotors.solve(&hover_input(10.0), None, cfg.weight()).unwrap();
        for r in [sol.upper, sol.lower] {
            assert!(r.thrust_residual.abs() < 1e-3, "{}", r.thrust_residual);
            assert!(r.flap.beta0 > 0.0);
            assert!(r.flap.beta1c.abs() < 1e-9 && r.flap.beta1s.abs() < 1e-9);
            assert!(r.inflow.k1c == 0.0);
        }
        assert!(sol.lower.inflow.total_mean >= sol.upper.inflow.total_mean);
        // torque reactions cancel for equal collectives only approximately
        let yaw = sol.upper.loads.moment.z + sol.lower.loads.moment.z;
        assert!(yaw.abs() < 0.5 * sol.upper.loads.torque);
    }

    #[test]
    fn thrust_increases_with_collective() {
        let cfg = HelicopterConfig::default_cch();
        let rotors = MainRotors::new(&cfg);
        let mut last = f64::NEG_INFINITY;
        for t in 0..=12 {
            let sol = rotors.solve(&hover_input(t as f64), None, cfg.weight()).unwrap();
            let thrust = sol.upper.loads.thrust + sol.lower.loads.thrust;
            assert!(thrust > last, "{t}: {thrust} <= {last}");
            last = thrust;
        }
    }

    #[test]
    fn warm_start_reproduces_solution() {
        let cfg = HelicopterConfig::default_cch();
        let rotors = MainRotors::new(&cfg);
        let mut inp = hover_input(9.0);
        inp.velocity = Vector3::new(60.0, 0.0, 2.0);
        inp.upper.longitudinal = -3.0;
        inp.lower.longitudinal = -3.0;
        let cold = rotors.solve(&inp, None, cfg.weight()).unwrap();
        let warm = rotors.solve(&inp, Some(&cold.state), cfg.weight()).unwrap();
        assert_eq!(warm.iterations, 0);
        assert!((cold.upper.loads.thrust - warm.upper.loads.thrust).abs() < 1e-6);
    }

    #[test]
    fn flapping_solve_matches_coaxial_flap() {
        let cfg = HelicopterConfig::default_cch();
        let rotors = MainRotors::new(&cfg);
        let mut inp = hover_input(8.0);
        inp.velocity = Vector3::new(40.0, 0.0, 0.0);
        inp.upper.lateral = 1.0;
        let sol = rotors.solve(&inp, None, cfg.weight()).unwrap();
        let vt = rotors.tip_speed();
        let z = sol.state.0;
        let (du2l, dl2u) = sol.interference;
        let _ = du2l;
        let field = InflowField {
            mean: sol.upper.inflow.total_mean,
            harmonic: (z[6] * sol.upper.inflow.k1c + dl2u * z[7] * sol.lower.inflow.k1c) * vt,
        };
        let flap = rotors
            .solve_flapping(RotorId::Upper, inp.upper, field, inp.velocity, 1.225)
            .unwrap();
        assert!((flap.beta1c - sol.upper.flap.beta1c).abs() < 1e-9);
        assert!((flap.beta1s - sol.upper.flap.beta1s).abs() < 1e-9);
        assert!((flap.beta0 - sol.upper.flap.beta0).abs() < 1e-9);
    }

    #[test]
    fn lift_offset_arithmetic() {
        let mut u = RotorLoads {
            thrust: 26977.5,
            sense: -1.0,
            ..Default::default()
        };
        let mut l = RotorLoads {
            thrust: 26977.5,
            sense: 1.0,
            ..Default::default()
        };
        assert_eq!(lift_offset(&u, &l, 5.49).unwrap(), 0.0);
        u.hub_moment.x = 5000.0;
        l.hub_moment.x = -5000.0;
        assert!((lift_offset(&u, &l, 5.49).unwrap() - 0.0338).abs() < 5e-5);
        u.hub_moment.x *= 2.0;
        l.hub_moment.x *= 2.0;
        u.thrust *= 2.0;
        l.thrust *= 2.0;
        assert!((lift_offset(&u, &l, 5.49).unwrap() - 0.0338).abs() < 5e-5);
        l.thrust = -u.thrust;
        assert!(lift_offset(&u, &l, 5.49).is_err());
    }

    #[test]
    fn propeller_thrust_is_forward() {
        let cfg = HelicopterConfig::default_cch();
        let prop = PropellerModel::new(&cfg.propeller);
        let sol = prop.solve(40.0, Vector3::new(50.0, 0.0, 0.0), 1.225, None).unwrap();
        assert!(sol.loads.thrust > 0.0);
        assert!(sol.loads.force.x > 0.0);
        assert!(sol.loads.force.x.abs() > 100.0 * sol.loads.force.z.abs());
        let _ = GRAVITY;
    }
}
