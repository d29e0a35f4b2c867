//! Static trim: strategy-specific equation systems, the bounded LM solve with
//! the lift-offset active set, and warm-started speed sweeps.

pub mod lm;

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::airframe::{Airframe, Component, Evaluation, LoadBreakdown, WarmStart};
use crate::config::HelicopterConfig;
use crate::controls::{ControlId, ControlVector, FlightCondition};
use crate::error::{Result, TrimError};
use crate::output::{sig6, Table};

pub use lm::{LmOptions, LmOutcome, Residual};

/// Elevator/propeller allocation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Propeller at zero thrust, elevator neutral, pitch attitude free.
    #[serde(rename = "BL")]
    Baseline,
    #[serde(rename = "STrim")]
    STrim,
    #[serde(rename = "MPTrim")]
    MPTrim,
    #[serde(rename = "HTrim")]
    HTrim,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Baseline,
        StrategyKind::STrim,
        StrategyKind::MPTrim,
        StrategyKind::HTrim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Baseline => "BL",
            StrategyKind::STrim => "STrim",
            StrategyKind::MPTrim => "MPTrim",
            StrategyKind::HTrim => "HTrim",
        }
    }

    /// Whether the elevator is allocated by the descent search.
    pub fn searches_elevator(self) -> bool {
        matches!(self, StrategyKind::MPTrim | StrategyKind::HTrim)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = TrimError;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| TrimError::Usage(format!("unknown strategy `{s}` (expected BL, STrim, MPTrim or HTrim)")))
    }
}

/// Scheduled pitch attitude, degrees.
pub fn pitch_preset(config: &HelicopterConfig, speed: f64) -> f64 {
    config.calibration.pitch_preset.eval(speed)
}

/// Scheduled lift offset: quadratic in airspeed, capped.
pub fn los_target(config: &HelicopterConfig, speed: f64) -> f64 {
    (config.calibration.los_coefficient * speed * speed).min(config.calibration.los_cap)
}

/// One trim equation system.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimProblem {
    pub condition: FlightCondition,
    pub kind: StrategyKind,
    /// Unknowns, in solver order.
    pub free: Vec<ControlId>,
    /// Values of every non-free variable.
    pub template: ControlVector,
    pub pitch_preset: Option<f64>,
    /// Scheduled lift offset; appended as an equation when `los_active`.
    pub los_target: Option<f64>,
    pub los_active: bool,
    /// Propeller collective follows the zero-thrust pitch of the current attitude.
    pub propeller_disabled: bool,
}

impl TrimProblem {
    pub fn equations(&self) -> usize {
        6 + usize::from(self.los_active)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.free.iter().map(|id| id.bounds()).collect()
    }

    pub fn controls(&self, x_free: &[f64]) -> ControlVector {
        let mut x = self.template;
        for (id, v) in self.free.iter().zip(x_free) {
            x.set(*id, *v);
        }
        x
    }

    /// The free values of `x`, projected into their bounds.
    pub fn unknowns(&self, x: &ControlVector) -> Vec<f64> {
        self.free
            .iter()
            .map(|id| {
                let (lo, hi) = id.bounds();
                x.get(*id).clamp(lo, hi)
            })
            .collect()
    }

    /// Pin the differential lateral cyclic and drop the lift-offset equation.
    pub fn with_los_pinned(&self, theta1c_diff: f64) -> Self {
        let mut p = self.clone();
        p.free.retain(|id| *id != ControlId::DiffLateralCyclic);
        p.template.theta1c_diff = theta1c_diff;
        p.los_active = false;
        p
    }
}

/// Assemble the equation system of `kind` at `speed`. `delta_e` is used by
/// the elevator strategies and ignored otherwise.
pub fn build_problem(airframe: &Airframe, speed: f64, kind: StrategyKind, delta_e: f64) -> Result<TrimProblem> {
    let condition = FlightCondition::new(speed, airframe.config.air_density)?;
    let preset = pitch_preset(&airframe.config, speed);
    let mut template = ControlVector {
        pitch: preset,
        ..ControlVector::default()
    };
    let problem = match kind {
        StrategyKind::Baseline => {
            template.theta_prop = airframe.zero_thrust_pitch(&condition, preset, 0.0)?;
            TrimProblem {
                condition,
                kind,
                free: vec![
                    ControlId::Collective,
                    ControlId::DiffCollective,
                    ControlId::LateralCyclic,
                    ControlId::LongitudinalCyclic,
                    ControlId::Pitch,
                    ControlId::Roll,
                ],
                template,
                pitch_preset: None,
                los_target: None,
                los_active: false,
                propeller_disabled: true,
            }
        }
        StrategyKind::STrim | StrategyKind::MPTrim | StrategyKind::HTrim => {
            let (lo, hi) = ControlId::Elevator.bounds();
            if kind != StrategyKind::STrim && !(lo..=hi).contains(&delta_e) {
                return Err(TrimError::Validation {
                    field: "delta_e".into(),
                    value: delta_e,
                    bound: format!("[{lo}, {hi}] deg"),
                });
            }
            template.delta_e = if kind == StrategyKind::STrim { 0.0 } else { delta_e };
            TrimProblem {
                condition,
                kind,
                free: vec![
                    ControlId::Collective,
                    ControlId::DiffCollective,
                    ControlId::LateralCyclic,
                    ControlId::LongitudinalCyclic,
                    ControlId::Roll,
                    ControlId::PropellerPitch,
                    ControlId::DiffLateralCyclic,
                ],
                template,
                pitch_preset: Some(preset),
                los_target: Some(los_target(&airframe.config, speed)),
                los_active: true,
                propeller_disabled: false,
            }
        }
    };
    Ok(problem)
}

/// Evaluate the aircraft at the free values `x_free`.
fn evaluate(
    airframe: &Airframe,
    problem: &TrimProblem,
    x_free: &[f64],
    warm: Option<&WarmStart>,
) -> Result<(ControlVector, Evaluation)> {
    let mut x = problem.controls(x_free);
    if problem.propeller_disabled {
        x.theta_prop = airframe.zero_thrust_pitch(&problem.condition, x.pitch, x.roll)?;
    }
    let eval = airframe.total_loads(&x, &problem.condition, warm)?;
    Ok((x, eval))
}

fn scaled_residual(airframe: &Airframe, problem: &TrimProblem, eval: &Evaluation) -> Vec<f64> {
    let w = airframe.weight();
    let wr = w * airframe.config.rotor.radius;
    let f = eval.breakdown.total_force;
    let m = eval.breakdown.total_moment;
    let mut r = vec![f.x / w, f.y / w, f.z / w, m.x / wr, m.y / wr, m.z / wr];
    if problem.los_active {
        r.push(eval.lift_offset - problem.los_target.unwrap_or(0.0));
    }
    r
}

/// Scaled trim residual: forces over `mg`, moments over `mg·R`, then the
/// lift-offset error when that equation is active.
pub fn residual(airframe: &Airframe, problem: &TrimProblem, x_free: &[f64]) -> Result<Vec<f64>> {
    let (_, eval) = evaluate(airframe, problem, x_free, None)?;
    Ok(scaled_residual(airframe, problem, &eval))
}

/// Converged (or best) trim state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrimSolution {
    pub kind: StrategyKind,
    pub condition: FlightCondition,
    pub controls: ControlVector,
    pub residual_norm: f64,
    pub evaluation: Evaluation,
    pub lift_offset: f64,
    pub los_target: Option<f64>,
    /// The lift-offset equation was dropped with θ1c_diff pinned at a bound.
    pub los_saturated: bool,
    /// Free variables sitting on a bound.
    pub saturated: Vec<ControlId>,
    pub iterations: usize,
    pub converged: bool,
}

impl TrimSolution {
    pub fn speed(&self) -> f64 {
        self.condition.speed
    }

    pub fn breakdown(&self) -> &LoadBreakdown {
        &self.evaluation.breakdown
    }

    /// `T_u + T_l`, N.
    pub fn rotor_load(&self) -> f64 {
        self.evaluation.rotor_load()
    }

    pub fn power(&self) -> f64 {
        power_required(self)
    }

    /// Propeller thrust along body x, N.
    pub fn propeller_thrust(&self) -> f64 {
        self.evaluation.propeller.loads.thrust
    }

    pub fn warm_start(&self) -> WarmStart {
        self.evaluation.warm_start()
    }

    /// Largest blade-element/momentum thrust mismatch of the two rotors, N.
    pub fn momentum_closure(&self) -> f64 {
        let r = &self.evaluation.rotors;
        r.upper.thrust_residual.abs().max(r.lower.thrust_residual.abs())
    }
}

/// Shaft power of both rotors and the propeller, W. No transmission losses.
pub fn power_required(solution: &TrimSolution) -> f64 {
    let e = &solution.evaluation;
    e.rotors.upper.loads.power + e.rotors.lower.loads.power + e.propeller.loads.power
}

struct TrimResidual<'a> {
    airframe: &'a Airframe,
    problem: &'a TrimProblem,
    base: Option<WarmStart>,
    last: Option<(ControlVector, Evaluation)>,
    accepted: Option<(ControlVector, Evaluation)>,
}

impl Residual for TrimResidual<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let (controls, eval) = evaluate(self.airframe, self.problem, x, self.base.as_ref())?;
        let r = scaled_residual(self.airframe, self.problem, &eval);
        self.last = Some((controls, eval));
        Ok(r)
    }

    fn accept(&mut self) {
        self.accepted = self.last.take();
        self.base = self.accepted.as_ref().map(|(_, e)| e.warm_start());
    }
}

/// Run the bounded LM on `problem` from `x0` (free values, in solver order).
pub fn lm_solve(
    airframe: &Airframe,
    problem: &TrimProblem,
    x0: &[f64],
    warm: Option<&WarmStart>,
    options: &LmOptions,
) -> Result<TrimSolution> {
    let bounds = problem.bounds();
    let mut f = TrimResidual {
        airframe,
        problem,
        base: warm.copied(),
        last: None,
        accepted: None,
    };
    let out = lm::solve(&mut f, x0, &bounds, options)?;
    let (controls, evaluation) = f
        .accepted
        .ok_or_else(|| TrimError::Model("trim solver produced no evaluation".into()))?;
    let saturated = problem
        .free
        .iter()
        .zip(&out.x)
        .filter(|(id, v)| {
            let (lo, hi) = id.bounds();
            **v <= lo || **v >= hi
        })
        .map(|(id, _)| *id)
        .collect();
    Ok(TrimSolution {
        kind: problem.kind,
        condition: problem.condition,
        controls,
        residual_norm: out.norm,
        lift_offset: evaluation.lift_offset,
        evaluation,
        los_target: problem.los_target,
        los_saturated: problem.los_target.is_some() && !problem.los_active,
        saturated,
        iterations: out.iterations,
        converged: out.converged,
    })
}

fn non_convergence(solution: &TrimSolution) -> TrimError {
    TrimError::NonConvergence {
        iterations: solution.iterations,
        residual: solution.residual_norm,
        best: ControlId::ALL.iter().map(|id| solution.controls.get(*id)).collect(),
    }
}

/// Solves trim problems with the lift-offset active set.
#[derive(Debug, Clone)]
pub struct Trimmer {
    pub airframe: Airframe,
    pub options: LmOptions,
}

impl Trimmer {
    pub fn new(airframe: Airframe) -> Self {
        Self {
            airframe,
            options: LmOptions::default(),
        }
    }

    pub fn config(&self) -> &HelicopterConfig {
        &self.airframe.config
    }

    /// `∂LOS/∂θ1c_diff` at a solution, per degree, by a one-sided difference
    /// into the admissible range.
    fn los_slope(&self, solution: &TrimSolution) -> Result<f64> {
        let (lo, hi) = ControlId::DiffLateralCyclic.bounds();
        let mut h = self.options.fd_fraction * (hi - lo);
        if solution.controls.theta1c_diff + h > hi {
            h = -h;
        }
        let x = solution
            .controls
            .with(ControlId::DiffLateralCyclic, solution.controls.theta1c_diff + h);
        let warm = solution.warm_start();
        let eval = self.airframe.total_loads(&x, &solution.condition, Some(&warm))?;
        Ok((eval.lift_offset - solution.lift_offset) / h)
    }

    /// A pinned solution is valid only if meeting the lift-offset target would
    /// push θ1c_diff further past the bound it sits on.
    fn pin_is_consistent(&self, solution: &TrimSolution, bound: f64) -> Result<bool> {
        let target = solution.los_target.unwrap_or(0.0);
        let wanted = self.los_slope(solution)?.signum() * (target - solution.lift_offset);
        let (lo, _) = ControlId::DiffLateralCyclic.bounds();
        Ok(if bound <= lo { wanted <= 0.0 } else { wanted >= 0.0 })
    }

    fn solve_pinned(
        &self,
        problem: &TrimProblem,
        guess: &ControlVector,
        warm: Option<&WarmStart>,
        bound: f64,
    ) -> Result<Option<TrimSolution>> {
        let pinned = problem.with_los_pinned(bound);
        let sol = lm_solve(&self.airframe, &pinned, &pinned.unknowns(guess), warm, &self.options)?;
        if sol.converged && self.pin_is_consistent(&sol, bound)? {
            Ok(Some(sol))
        } else {
            Ok(None)
        }
    }

    /// Solve `problem` from the control guess `guess`, switching the
    /// lift-offset equation out when θ1c_diff saturates.
    pub fn solve_problem(
        &self,
        problem: &TrimProblem,
        guess: &ControlVector,
        warm: Option<&WarmStart>,
        pinned_hint: bool,
    ) -> Result<TrimSolution> {
        let (lo, hi) = ControlId::DiffLateralCyclic.bounds();
        let nearest = |v: f64| if v - lo < hi - v { lo } else { hi };
        if problem.los_active && pinned_hint {
            if let Some(sol) = self.solve_pinned(problem, guess, warm, nearest(guess.theta1c_diff))? {
                return Ok(sol);
            }
        }
        let full = lm_solve(&self.airframe, problem, &problem.unknowns(guess), warm, &self.options)?;
        if full.converged || !problem.los_active {
            return if full.converged { Ok(full) } else { Err(non_convergence(&full)) };
        }
        let bound = nearest(full.controls.theta1c_diff);
        if let Some(sol) = self.solve_pinned(problem, &full.controls, warm, bound)? {
            return Ok(sol);
        }
        Err(non_convergence(&full))
    }

    /// Starting points tried when no neighbouring solution exists.
    fn cold_guesses(&self, problem: &TrimProblem) -> Vec<ControlVector> {
        let mut out = Vec::new();
        for theta0 in [9.0, 6.0, 12.0] {
            for roll in [0.0, -2.0, 2.0] {
                let mut x = problem.template;
                x.theta0 = theta0;
                x.roll = roll;
                out.push(x);
            }
        }
        out
    }

    /// Multi-start solve for a point with no neighbour to continue from.
    pub fn solve_cold(&self, problem: &TrimProblem) -> Result<TrimSolution> {
        let mut template = problem.template;
        if problem.free.contains(&ControlId::PropellerPitch) {
            let pitch = problem.pitch_preset.unwrap_or(template.pitch);
            template.theta_prop = self
                .airframe
                .zero_thrust_pitch(&problem.condition, pitch, 0.0)?
                .clamp(0.0, 70.0);
        }
        let problem = TrimProblem {
            template,
            ..problem.clone()
        };
        let mut last = None;
        for guess in self.cold_guesses(&problem) {
            match self.solve_problem(&problem, &guess, None, false) {
                Ok(sol) => return Ok(sol),
                Err(e) => {
                    debug!("cold start {guess:?} failed: {e}");
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| TrimError::Model("no starting points".into())))
    }

    /// Solve `problem` continuing from `previous`, with up to five perturbed
    /// retries and finally a cold multi-start.
    pub fn solve_from(&self, problem: &TrimProblem, previous: Option<&TrimSolution>) -> Result<TrimSolution> {
        let Some(prev) = previous else {
            return self.solve_cold(problem);
        };
        let mut guess = prev.controls;
        for id in ControlId::ALL {
            if !problem.free.contains(&id) {
                guess.set(id, problem.template.get(id));
            }
        }
        let warm = prev.warm_start();
        let mut last = match self.solve_problem(problem, &guess, Some(&warm), prev.los_saturated) {
            Ok(sol) => return Ok(sol),
            Err(e) => e,
        };
        for retry in 0..5 {
            let mut g = guess;
            for (k, id) in problem.free.iter().enumerate() {
                let sign = if (k + retry) % 2 == 0 { 1.0 } else { -1.0 };
                g.set(*id, guess.get(*id) * (1.0 + 0.1 * sign));
            }
            warn!(
                "{} at {} m/s: retry {} after {last}",
                problem.kind,
                problem.condition.speed,
                retry + 1
            );
            match self.solve_problem(problem, &g, None, prev.los_saturated) {
                Ok(sol) => return Ok(sol),
                Err(e) => last = e,
            }
        }
        self.solve_cold(problem).map_err(|_| last)
    }

    /// Trim one point of `kind`, optionally continuing from a neighbour.
    pub fn trim(
        &self,
        speed: f64,
        kind: StrategyKind,
        delta_e: f64,
        previous: Option<&TrimSolution>,
    ) -> Result<TrimSolution> {
        let problem = build_problem(&self.airframe, speed, kind, delta_e)?;
        self.solve_from(&problem, previous)
    }

    /// Warm-started continuation over `speeds` (in the given order), with the
    /// elevator set by `delta_e(speed)`.
    pub fn sweep(
        &self,
        kind: StrategyKind,
        speeds: &[f64],
        delta_e: &dyn Fn(f64) -> f64,
    ) -> Result<Vec<TrimSolution>> {
        let mut out: Vec<TrimSolution> = Vec::with_capacity(speeds.len());
        for &speed in speeds {
            let sol = self
                .trim(speed, kind, delta_e(speed), out.last())
                .map_err(|e| TrimError::Sweep {
                    speed,
                    source: Box::new(e),
                })?;
            debug!(
                "{kind} {speed} m/s: {} iterations, residual {:.2e}",
                sol.iterations, sol.residual_norm
            );
            out.push(sol);
        }
        Ok(out)
    }
}

/// Evenly spaced speeds from `vmin` to `vmax` inclusive.
pub fn speed_grid(vmin: f64, vmax: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(vmin <= vmax) || vmin < 0.0 || vmax > crate::controls::MAX_SPEED {
        return Err(TrimError::Usage(format!(
            "invalid speed range {vmin}..{vmax} step {step} (need 0 <= vmin <= vmax <= 100, step > 0)"
        )));
    }
    let n = ((vmax - vmin) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| vmin + step * i as f64).collect())
}

/// One row per solution: every control, residual, power, loads and thrusts.
pub fn sweep_table(solutions: &[TrimSolution]) -> Table {
    let mut header = vec!["U", "strategy"];
    header.extend(ControlId::ALL.iter().map(|id| id.name()));
    header.extend([
        "residual",
        "power_kW",
        "rotor_load_kN",
        "LOS",
        "LOS_target",
        "LOS_saturated",
        "T_upper_kN",
        "T_lower_kN",
        "T_prop_kN",
    ]);
    let mut table = Table::new(&header);
    for s in solutions {
        let mut row = vec![sig6(s.speed()), s.kind.to_string()];
        row.extend(ControlId::ALL.iter().map(|id| sig6(s.controls.get(*id))));
        let e = &s.evaluation;
        row.extend([
            format!("{:.3e}", s.residual_norm),
            sig6(s.power() / 1e3),
            sig6(s.rotor_load() / 1e3),
            sig6(s.lift_offset),
            s.los_target.map(sig6).unwrap_or_default(),
            u8::from(s.los_saturated).to_string(),
            sig6(e.rotors.upper.loads.thrust / 1e3),
            sig6(e.rotors.lower.loads.thrust / 1e3),
            sig6(s.propeller_thrust() / 1e3),
        ]);
        table.row(&row);
    }
    table
}

/// Force/moment balance of a solution with one component removed, N and N·m.
pub fn balance_without(solution: &TrimSolution, component: Component) -> (nalgebra::Vector3<f64>, nalgebra::Vector3<f64>) {
    let b = solution.breakdown();
    let c = b.get(component);
    (b.total_force - c.force, b.total_moment - c.moment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trimmer() -> Trimmer {
        Trimmer::new(Airframe::new(HelicopterConfig::default_cch()))
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("Xtrim".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn los_schedule_and_cap() {
        let cfg = HelicopterConfig::default_cch();
        assert_eq!(los_target(&cfg, 0.0), 0.0);
        assert!((los_target(&cfg, 30.0) - 0.18).abs() < 1e-12);
        assert!((los_target(&cfg, 50.0) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn pitch_preset_schedule() {
        let cfg = HelicopterConfig::default_cch();
        assert_eq!(pitch_preset(&cfg, 0.0), 3.0);
        assert!(pitch_preset(&cfg, 100.0).abs() < 0.25);
        let pts = cfg.calibration.pitch_preset.points().to_vec();
        let (a, b) = (pts[1], pts[2]);
        let mid = 0.5 * (a.0 + b.0);
        assert!((pitch_preset(&cfg, mid) - 0.5 * (a.1 + b.1)).abs() < 1e-12);
    }

    #[test]
    fn problem_shapes() {
        let t = trimmer();
        let s = build_problem(&t.airframe, 60.0, StrategyKind::STrim, -4.0).unwrap();
        assert_eq!(s.free.len(), 7);
        assert_eq!(s.equations(), 7);
        assert_eq!(s.template.delta_e, 0.0);
        assert_eq!(s.template.pitch, pitch_preset(t.config(), 60.0));

        let h = build_problem(&t.airframe, 60.0, StrategyKind::HTrim, -3.0).unwrap();
        assert_eq!(h.free, s.free);
        assert_eq!(h.template.delta_e, -3.0);

        let b = build_problem(&t.airframe, 60.0, StrategyKind::Baseline, -3.0).unwrap();
        assert_eq!(b.free.len(), 6);
        assert_eq!(b.equations(), 6);
        assert!(b.propeller_disabled);
        assert!(b.free.contains(&ControlId::Pitch));
        assert_eq!(b.template.delta_e, 0.0);
    }

    #[test]
    fn gravity_only_residual_is_unit_weight() {
        let mut cfg = HelicopterConfig::default_cch();
        cfg.air_density = 1e-9;
        let t = Trimmer::new(Airframe::new(cfg));
        let p = build_problem(&t.airframe, 0.0, StrategyKind::STrim, 0.0).unwrap();
        let mut p = p;
        p.template.pitch = 0.0;
        let x = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = residual(&t.airframe, &p, &x).unwrap();
        assert!((r[2] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn hover_trim_converges_and_collective_sign() {
        let t = trimmer();
        let sol = t.trim(0.0, StrategyKind::STrim, 0.0, None).unwrap();
        assert!(sol.converged);
        assert!(sol.residual_norm < 1e-8);
        assert!(sol.controls.clamp_check().is_empty());
        assert!(sol.momentum_closure() < 1.0);

        let p = build_problem(&t.airframe, 0.0, StrategyKind::STrim, 0.0).unwrap();
        let mut x = p.unknowns(&sol.controls);
        x[0] += 1.0;
        let r = residual(&t.airframe, &p, &x).unwrap();
        assert!(r[2] < 0.0);
    }

    #[test]
    fn speed_grid_counts() {
        assert_eq!(speed_grid(0.0, 100.0, 1.0).unwrap().len(), 101);
        assert_eq!(speed_grid(0.0, 100.0, 5.0).unwrap().len(), 21);
        assert_eq!(speed_grid(40.0, 40.0, 5.0).unwrap(), vec![40.0]);
        assert!(speed_grid(0.0, 120.0, 5.0).is_err());
        assert!(speed_grid(0.0, 100.0, 0.0).is_err());
    }
}
