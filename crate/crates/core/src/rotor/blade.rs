//! Blade-element integration over a radial/azimuthal grid.
//!
//! Everything here is non-dimensional: velocities on the tip speed, radial
//! stations on the radius, sectional forces on `½ρc(ΩR)²`. Azimuth is measured
//! from the downstream (tail) position in the direction of rotation, so a
//! blade at `ψ` points along `(−cos ψ, s·sin ψ)` in the hub plane, with `s = +1`
//! for counter-clockwise rotation seen from above.

use std::f64::consts::PI;
use std::io::Write;

use crate::config::Airfoil;

#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub x: Vec<f64>,
    pub dx: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Grid {
    pub fn new(root_cutout: f64, radial: usize, azimuth: usize) -> Self {
        let dx = (1.0 - root_cutout) / radial as f64;
        let x = (0..radial).map(|i| root_cutout + (i as f64 + 0.5) * dx).collect();
        let psi = (0..azimuth).map(|k| 2.0 * PI * k as f64 / azimuth as f64);
        Self {
            x,
            dx,
            cos: psi.clone().map(f64::cos).collect(),
            sin: psi.map(f64::sin).collect(),
        }
    }
}

/// Inputs of one blade-element pass. Angles in radians.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PassInput {
    /// Pitch at `x = 0`; the section pitch is `root_pitch + twist·x + cyclic`.
    pub root_pitch: f64,
    pub twist: f64,
    /// Coefficients of `cos ψ` and `sin ψ` in the blade's own azimuth.
    pub cyclic_cos: f64,
    pub cyclic_sin: f64,
    pub sense: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    /// Normal through-flow from the hub motion (downward positive).
    pub lambda_climb: f64,
    /// Mean induced inflow.
    pub lambda_mean: f64,
    /// Coefficient of `x·cos ψ_w`, with `ψ_w` measured from downwind.
    pub lambda_harmonic: f64,
    /// `[β0, β1c, β1s]`
    pub beta: [f64; 3],
    pub hinge: f64,
}

/// Azimuth-averaged per-blade results of a pass.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PassOutput {
    /// `∫ f_n dx`
    pub thrust: f64,
    /// `∫ f_n (x−e) dx` outboard of the hinge: mean, 2×cos and 2×sin harmonics.
    pub flap: [f64; 3],
    /// In-plane hub force, hub axes.
    pub hub_x: f64,
    pub hub_y: f64,
    /// `−∫ f_t x dx`, positive when the rotor absorbs power.
    pub torque: f64,
    /// Moment of sections inboard of the hinge about the hub, hub axes.
    pub inboard_mx: f64,
    pub inboard_my: f64,
    pub stalled: usize,
    /// Rows `[thrust, flap0, flap1c, flap1s]`, columns
    /// `[β0, β1c, β1s, λ_mean, λ_harmonic]`.
    pub jac: [[f64; 5]; 4],
}

struct Section {
    fn_: f64,
    ft: f64,
    dfn: f64,
    stalled: bool,
}

#[inline(always)]
fn section(airfoil: &Airfoil, theta: f64, ut: f64, up: f64) -> Section {
    let u2 = ut * ut + up * up;
    let u = u2.sqrt();
    let phi = if ut != 0.0 {
        (up / ut).atan()
    } else {
        0.5 * PI * up.signum()
    };
    let alpha = theta - phi;
    let (cl, cd, dcl, dcd) = airfoil.coefficients(alpha);
    let dalpha = if u2 > 0.0 { -ut / u2 } else { 0.0 };
    let normal = cl * ut - cd * up;
    let fn_ = u * normal;
    let ft = -u * (cl * up + cd * ut);
    let dfn = if u > 0.0 {
        (up / u) * normal + u * ((dcl * ut - dcd * up) * dalpha - cd)
    } else {
        0.0
    };
    Section {
        fn_,
        ft,
        dfn,
        stalled: airfoil.is_stalled(alpha),
    }
}

pub(crate) fn run(grid: &Grid, airfoil: &Airfoil, inp: &PassInput, with_jac: bool) -> PassOutput {
    let s = inp.sense;
    let mu = inp.mu_x.hypot(inp.mu_y);
    let e = inp.hinge;
    let [b0, bc, bs] = inp.beta;
    let mut out = PassOutput::default();
    let nr = grid.x.len();

    for (&cp, &sp) in grid.cos.iter().zip(&grid.sin) {
        let ut0 = inp.mu_x * sp + s * inp.mu_y * cp;
        let ur = inp.mu_x * cp - s * inp.mu_y * sp;
        let cw = if mu > 1e-12 { ur / mu } else { 0.0 };
        let beta = b0 + bc * cp + bs * sp;
        let dbeta = -bc * sp + bs * cp;
        let cyc = inp.cyclic_cos * cp + inp.cyclic_sin * sp;
        let lam0 = inp.lambda_climb + inp.lambda_mean;
        // in-plane unit vectors of the blade, hub axes
        let (etx, ety) = (sp, s * cp);
        let (erx, ery) = (-cp, s * sp);

        let mut t = 0.0;
        let mut m = 0.0;
        let mut ft_sum = 0.0;
        let mut fnb_sum = 0.0;
        let mut q = 0.0;
        let mut inb = 0.0;
        let mut dt = [0.0; 5];
        let mut dm = [0.0; 5];
        for i in 0..nr {
            let x = grid.x[i];
            let ut = x + ut0;
            let lam = lam0 + inp.lambda_harmonic * x * cw;
            let outboard = x > e;
            let up = if outboard {
                lam + (x - e) * dbeta + beta * ur
            } else {
                lam
            };
            let theta = inp.root_pitch + inp.twist * x + cyc;
            let sec = section(airfoil, theta, ut, up);
            if sec.stalled {
                out.stalled += 1;
            }
            t += sec.fn_;
            ft_sum += sec.ft;
            q -= sec.ft * x;
            if outboard {
                m += sec.fn_ * (x - e);
                fnb_sum += sec.fn_;
            } else {
                inb += sec.fn_ * x;
            }
            if with_jac {
                let g = sec.dfn;
                let (g0, g1, g2) = if outboard {
                    (ur, -(x - e) * sp + cp * ur, (x - e) * cp + sp * ur)
                } else {
                    (0.0, 0.0, 0.0)
                };
                let dirs = [g0, g1, g2, 1.0, x * cw];
                let arm = if outboard { x - e } else { 0.0 };
                for k in 0..5 {
                    let d = g * dirs[k];
                    dt[k] += d;
                    dm[k] += d * arm;
                }
            }
        }
        out.thrust += t;
        out.flap[0] += m;
        out.flap[1] += m * cp;
        out.flap[2] += m * sp;
        out.torque += q;
        // the normal force of a coned blade leans inward by β
        out.hub_x += ft_sum * etx - fnb_sum * beta * erx;
        out.hub_y += ft_sum * ety - fnb_sum * beta * ery;
        // upward force at e_r gives a moment along e_r × (−z) = (−e_r,y, e_r,x)
        out.inboard_mx += -inb * ery;
        out.inboard_my += inb * erx;
        if with_jac {
            for k in 0..5 {
                out.jac[0][k] += dt[k];
                out.jac[1][k] += dm[k];
                out.jac[2][k] += dm[k] * cp;
                out.jac[3][k] += dm[k] * sp;
            }
        }
    }

    let w = grid.dx / grid.cos.len() as f64;
    out.thrust *= w;
    out.flap[0] *= w;
    out.flap[1] *= 2.0 * w;
    out.flap[2] *= 2.0 * w;
    out.hub_x *= w;
    out.hub_y *= w;
    out.torque *= w;
    out.inboard_mx *= w;
    out.inboard_my *= w;
    if with_jac {
        for k in 0..5 {
            out.jac[0][k] *= w;
            out.jac[1][k] *= w;
            out.jac[2][k] *= 2.0 * w;
            out.jac[3][k] *= 2.0 * w;
        }
    }
    out
}

/// Write every element's non-dimensional thrust and torque contribution as
/// CSV rows `psi_deg,r,dT,dQ`.
pub(crate) fn dump(
    grid: &Grid,
    airfoil: &Airfoil,
    inp: &PassInput,
    mut sink: impl Write,
) -> std::io::Result<()> {
    writeln!(sink, "psi_deg,r,dT,dQ")?;
    let s = inp.sense;
    let mu = inp.mu_x.hypot(inp.mu_y);
    let [b0, bc, bs] = inp.beta;
    let n = grid.cos.len();
    for (k, (&cp, &sp)) in grid.cos.iter().zip(&grid.sin).enumerate() {
        let ut0 = inp.mu_x * sp + s * inp.mu_y * cp;
        let ur = inp.mu_x * cp - s * inp.mu_y * sp;
        let cw = if mu > 1e-12 { ur / mu } else { 0.0 };
        let beta = b0 + bc * cp + bs * sp;
        let dbeta = -bc * sp + bs * cp;
        for &x in &grid.x {
            let lam = inp.lambda_climb + inp.lambda_mean + inp.lambda_harmonic * x * cw;
            let up = if x > inp.hinge {
                lam + (x - inp.hinge) * dbeta + beta * ur
            } else {
                lam
            };
            let theta = inp.root_pitch + inp.twist * x + inp.cyclic_cos * cp + inp.cyclic_sin * sp;
            let sec = section(airfoil, theta, x + ut0, up);
            writeln!(
                sink,
                "{:.6e},{:.6e},{:.6e},{:.6e}",
                360.0 * k as f64 / n as f64,
                x,
                sec.fn_ * grid.dx,
                -sec.ft * x * grid.dx
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn airfoil() -> Airfoil {
        Airfoil {
            lift_slope: 5.73,
            zero_lift_angle: 0.0,
            stall_angle: 15f64.to_radians(),
            cd0: 0.01,
            drag_k: 0.3,
            min_drag_angle: 0.0,
            drag_rise_angle: 0.25,
            drag_rise_k: 0.0,
        }
    }

    fn input() -> PassInput {
        PassInput {
            root_pitch: 0.2,
            twist: -0.17,
            cyclic_cos: 0.02,
            cyclic_sin: -0.05,
            sense: -1.0,
            mu_x: 0.3,
            mu_y: 0.02,
            lambda_climb: 0.01,
            lambda_mean: 0.02,
            lambda_harmonic: 0.015,
            beta: [0.03, 0.01, -0.02],
            hinge: 0.47,
        }
    }

    #[test]
    fn zero_pitch_no_inflow_gives_no_thrust() {
        let grid = Grid::new(0.15, 25, 72);
        let inp = PassInput {
            root_pitch: 0.0,
            twist: 0.0,
            cyclic_cos: 0.0,
            cyclic_sin: 0.0,
            sense: 1.0,
            mu_x: 0.0,
            mu_y: 0.0,
            lambda_climb: 0.0,
            lambda_mean: 0.0,
            lambda_harmonic: 0.0,
            beta: [0.0; 3],
            hinge: 0.47,
        };
        let out = run(&grid, &airfoil(), &inp, false);
        assert!(out.thrust.abs() < 1e-15);
        assert!(out.torque > 0.0);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let grid = Grid::new(0.15, 25, 72);
        let af = airfoil();
        let base = input();
        let out = run(&grid, &af, &base, true);
        let h = 1e-7;
        for k in 0..5 {
            let perturb = |sign: f64| {
                let mut p = base;
                match k {
                    0..=2 => p.beta[k] += sign * h,
                    3 => p.lambda_mean += sign * h,
                    _ => p.lambda_harmonic += sign * h,
                }
                run(&grid, &af, &p, false)
            };
            let (a, b) = (perturb(1.0), perturb(-1.0));
            let fd = [
                (a.thrust - b.thrust) / (2.0 * h),
                (a.flap[0] - b.flap[0]) / (2.0 * h),
                (a.flap[1] - b.flap[1]) / (2.0 * h),
                (a.flap[2] - b.flap[2]) / (2.0 * h),
            ];
            for row in 0..4 {
                let an = out.jac[row][k];
                assert!(
                    (an - fd[row]).abs() < 1e-5 * (1.0 + an.abs()),
                    "row {row} col {k}: {an} vs {}",
                    fd[row]
                );
            }
        }
    }

    #[test]
    fn dump_has_one_row_per_element() {
        let grid = Grid::new(0.15, 20, 36);
        let mut buf = Vec::new();
        dump(&grid, &airfoil(), &input(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 20 * 36);
        assert!(text.starts_with("psi_deg,r,dT,dQ\n"));
    }
}
