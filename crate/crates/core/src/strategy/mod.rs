//! The four allocation strategies, the rotor-load penalty (TIL) and the
//! elevator search that MPTrim and HTrim run on top of the STrim reference.

pub mod search;

use std::collections::BTreeMap;

use log::debug;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TrimError};
use crate::output::{sig6, Table};
use crate::trim::{StrategyKind, TrimSolution, Trimmer};

pub use search::{
    brute_force_search, descent_search, Probe, ProbePoint, SearchFailure, SearchOptions, SearchOutcome, SearchTrace,
    TraceEntry,
};

/// Rotor-load increase over the STrim load, percent.
pub fn til(load: f64, reference_load: f64) -> f64 {
    if load == reference_load {
        return 0.0;
    }
    (load / reference_load - 1.0) * 100.0
}

/// Power saved relative to STrim, percent.
pub fn reduction(power: f64, reference_power: f64) -> f64 {
    if power == reference_power {
        return 0.0;
    }
    (1.0 - power / reference_power) * 100.0
}

/// One speed of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRecord {
    pub speed: f64,
    pub kind: StrategyKind,
    /// deg
    pub delta_e: f64,
    pub power_kw: f64,
    pub rotor_load_kn: f64,
    pub til_pct: f64,
    pub reduction_pct: f64,
    pub prop_thrust_kn: f64,
    /// Set when the elevator search stopped on the end of its range.
    pub at_domain_edge: bool,
    #[serde(skip)]
    pub solution: TrimSolution,
}

impl StrategyRecord {
    fn new(kind: StrategyKind, solution: TrimSolution, reference: &TrimSolution) -> Self {
        Self {
            speed: solution.speed(),
            kind,
            delta_e: solution.controls.delta_e,
            power_kw: solution.power() / 1e3,
            rotor_load_kn: solution.rotor_load() / 1e3,
            til_pct: til(solution.rotor_load(), reference.rotor_load()),
            reduction_pct: reduction(solution.power(), reference.power()),
            prop_thrust_kn: solution.propeller_thrust() / 1e3,
            at_domain_edge: false,
            solution,
        }
    }
}

pub const RECORD_COLUMNS: [&str; 8] = [
    "U",
    "strategy",
    "delta_e",
    "power_kW",
    "rotor_load_kN",
    "TIL_pct",
    "reduction_pct",
    "prop_thrust_kN",
];

pub fn record_table(records: &[StrategyRecord]) -> Table {
    let mut table = Table::new(&RECORD_COLUMNS);
    for r in records {
        table.row(&[
            sig6(r.speed),
            r.kind.to_string(),
            sig6(r.delta_e),
            sig6(r.power_kw),
            sig6(r.rotor_load_kn),
            sig6(r.til_pct),
            sig6(r.reduction_pct),
            sig6(r.prop_thrust_kn),
        ]);
    }
    table
}

fn key(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Trims one speed at any elevator setting, continuing from the nearest
/// deflection already solved. δe = 0 is the STrim reference itself, so its
/// TIL is exactly zero.
pub struct TrimProbe<'a> {
    trimmer: &'a Trimmer,
    kind: StrategyKind,
    reference: &'a TrimSolution,
    solved: BTreeMap<i64, TrimSolution>,
}

impl<'a> TrimProbe<'a> {
    pub fn new(trimmer: &'a Trimmer, kind: StrategyKind, reference: &'a TrimSolution) -> Self {
        let mut solved = BTreeMap::new();
        let mut zero = reference.clone();
        zero.kind = kind;
        solved.insert(0, zero);
        Self {
            trimmer,
            kind,
            reference,
            solved,
        }
    }

    pub fn solution(&self, delta_e: f64) -> Option<&TrimSolution> {
        self.solved.get(&key(delta_e))
    }

    fn nearest(&self, k: i64) -> &TrimSolution {
        let below = self.solved.range(..=k).next_back();
        let above = self.solved.range(k..).next();
        match (below, above) {
            (Some(b), Some(a)) => {
                if k - b.0 <= a.0 - k {
                    b.1
                } else {
                    a.1
                }
            }
            (Some(b), None) => b.1,
            (None, Some(a)) => a.1,
            (None, None) => self.reference,
        }
    }

    pub fn trim(&mut self, delta_e: f64) -> Result<&TrimSolution> {
        let k = key(delta_e);
        if !self.solved.contains_key(&k) {
            let start = self.nearest(k).clone();
            let sol = self
                .trimmer
                .trim(self.reference.speed(), self.kind, delta_e, Some(&start))?;
            self.solved.insert(k, sol);
        }
        Ok(&self.solved[&k])
    }
}

impl Probe for TrimProbe<'_> {
    fn probe(&mut self, delta_e: f64) -> Result<ProbePoint> {
        let reference_load = self.reference.rotor_load();
        let sol = self.trim(delta_e)?;
        Ok(ProbePoint {
            delta_e,
            power: sol.power(),
            til: til(sol.rotor_load(), reference_load),
        })
    }
}

/// Monotonicity and unimodality of the elevator response at one speed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub speed: f64,
    /// (δe, power kW, rotor load kN, TIL %) in grid order.
    pub samples: Vec<(f64, f64, f64, f64)>,
    /// Grid points that failed to trim.
    pub failures: Vec<(f64, String)>,
    pub load_monotone: bool,
    pub til_monotone: bool,
    pub power_unimodal: bool,
    /// Power has its minimum strictly inside the sampled range.
    pub power_interior_minimum: bool,
    pub violations: Vec<String>,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty() && self.load_monotone && self.til_monotone && self.power_unimodal
    }
}

/// Indices where `ys` (ordered by decreasing δe) falls by more than the
/// tolerance instead of rising.
fn drops(ys: &[f64], tolerance: f64) -> Vec<usize> {
    let range = span(ys);
    (1..ys.len())
        .filter(|&i| ys[i] < ys[i - 1] - tolerance * range)
        .collect()
}

fn span(ys: &[f64]) -> f64 {
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

/// Sign changes of the first differences, ignoring steps below the tolerance.
fn turns(ys: &[f64], tolerance: f64) -> usize {
    let range = span(ys);
    let mut last = 0i8;
    let mut count = 0;
    for w in ys.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tolerance * range {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Relative tolerance used by the property checks.
pub const PROPERTY_TOLERANCE: f64 = 1e-3;

fn property_report(speed: f64, samples: Vec<(f64, f64, f64, f64)>, failures: Vec<(f64, String)>) -> PropertyReport {
    let mut ordered = samples.clone();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    let power: Vec<f64> = ordered.iter().map(|s| s.1).collect();
    let load: Vec<f64> = ordered.iter().map(|s| s.2).collect();
    let tils: Vec<f64> = ordered.iter().map(|s| s.3).collect();
    let mut violations = Vec::new();
    let load_drops = drops(&load, PROPERTY_TOLERANCE);
    for &i in &load_drops {
        violations.push(format!(
            "rotor load falls from {} to {} kN between delta_e {} and {}",
            sig6(load[i - 1]),
            sig6(load[i]),
            sig6(ordered[i - 1].0),
            sig6(ordered[i].0)
        ));
    }
    let til_drops = drops(&tils, PROPERTY_TOLERANCE);
    for &i in &til_drops {
        violations.push(format!(
            "TIL falls from {} to {} % between delta_e {} and {}",
            sig6(tils[i - 1]),
            sig6(tils[i]),
            sig6(ordered[i - 1].0),
            sig6(ordered[i].0)
        ));
    }
    let power_turns = turns(&power, PROPERTY_TOLERANCE);
    if power_turns > 1 {
        violations.push(format!("power changes direction {power_turns} times"));
    }
    let interior = match power
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
    {
        Some((i, p)) => {
            let range = span(&power);
            i > 0 && i + 1 < power.len() && range > 0.0 && power[0] - p > PROPERTY_TOLERANCE * range && power[power.len() - 1] - p > PROPERTY_TOLERANCE * range
        }
        None => false,
    };
    PropertyReport {
        speed,
        samples: ordered,
        failures,
        load_monotone: load_drops.is_empty(),
        til_monotone: til_drops.is_empty(),
        power_unimodal: power_turns <= 1,
        power_interior_minimum: interior,
        violations,
    }
}

/// Bracketing grid interval of the first engaged speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub engaged: bool,
    /// Last speed not engaged; `None` if engaged from the first grid speed.
    pub lower: Option<f64>,
    /// First engaged speed.
    pub upper: Option<f64>,
}

impl Band {
    fn first(speeds: &[f64], engaged: impl Fn(usize) -> bool) -> Self {
        match (0..speeds.len()).find(|&i| engaged(i)) {
            Some(0) => Band {
                engaged: true,
                lower: None,
                upper: Some(speeds[0]),
            },
            Some(i) => Band {
                engaged: true,
                lower: Some(speeds[i - 1]),
                upper: Some(speeds[i]),
            },
            None => Band {
                engaged: false,
                lower: speeds.last().copied(),
                upper: None,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Engagement {
    pub propeller: Band,
    pub elevator: Band,
}

/// Propeller thrust above this fraction of weight counts as engaged.
pub const PROPELLER_ENGAGED: f64 = 0.02;
/// Elevator deflections beyond this (deg) count as engaged.
pub const ELEVATOR_ENGAGED: f64 = 0.05;

/// Engagement bands from STrim (propeller) and HTrim (elevator) records on
/// the same speed grid.
pub fn engagement_speeds(strim: &[StrategyRecord], htrim: &[StrategyRecord], weight: f64) -> Engagement {
    let s_speeds: Vec<f64> = strim.iter().map(|r| r.speed).collect();
    let h_speeds: Vec<f64> = htrim.iter().map(|r| r.speed).collect();
    Engagement {
        propeller: Band::first(&s_speeds, |i| strim[i].prop_thrust_kn * 1e3 > PROPELLER_ENGAGED * weight),
        elevator: Band::first(&h_speeds, |i| htrim[i].delta_e.abs() > ELEVATOR_ENGAGED),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingViolation {
    pub speed: f64,
    pub quantity: &'static str,
    /// Strategy expected to be larger.
    pub upper: StrategyKind,
    pub lower: StrategyKind,
    pub upper_value: f64,
    pub lower_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub slack: f64,
    pub satisfied: bool,
    pub compared: usize,
    pub violations: Vec<OrderingViolation>,
}

/// Power ordering STrim ≥ HTrim ≥ MPTrim ≥ BL, and rotor-load ordering
/// STrim ≤ HTrim ≤ MPTrim where the elevator is deflected. Strategies that are
/// absent are skipped; comparisons are made at common speeds only.
pub fn check_ordering(records: &BTreeMap<StrategyKind, Vec<StrategyRecord>>, slack: f64) -> OrderingReport {
    use StrategyKind::*;
    let chain: Vec<StrategyKind> = [STrim, HTrim, MPTrim, Baseline]
        .into_iter()
        .filter(|k| records.contains_key(k))
        .collect();
    let at = |k: StrategyKind, speed: f64| records[&k].iter().find(|r| key(r.speed) == key(speed));
    let mut violations = Vec::new();
    let mut compared = 0;
    for pair in chain.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        for a in &records[&hi] {
            let Some(b) = at(lo, a.speed) else { continue };
            compared += 1;
            if b.power_kw > a.power_kw * (1.0 + slack) {
                violations.push(OrderingViolation {
                    speed: a.speed,
                    quantity: "power",
                    upper: hi,
                    lower: lo,
                    upper_value: a.power_kw,
                    lower_value: b.power_kw,
                });
            }
            let elevator = a.delta_e.abs() > ELEVATOR_ENGAGED || b.delta_e.abs() > ELEVATOR_ENGAGED;
            if lo != Baseline && elevator && a.rotor_load_kn > b.rotor_load_kn * (1.0 + slack) {
                violations.push(OrderingViolation {
                    speed: a.speed,
                    quantity: "rotor_load",
                    upper: lo,
                    lower: hi,
                    upper_value: b.rotor_load_kn,
                    lower_value: a.rotor_load_kn,
                });
            }
        }
    }
    violations.sort_by(|a, b| a.speed.total_cmp(&b.speed));
    OrderingReport {
        slack,
        satisfied: violations.is_empty(),
        compared,
        violations,
    }
}

/// Runs strategies over one speed grid, sharing the STrim reference sweep.
pub struct Strategist<'a> {
    trimmer: &'a Trimmer,
    speeds: Vec<f64>,
    reference: Vec<TrimSolution>,
    search: SearchOptions,
}

impl<'a> Strategist<'a> {
    /// Solves the STrim reference sweep over `speeds`.
    pub fn new(trimmer: &'a Trimmer, speeds: &[f64]) -> Result<Self> {
        let reference = trimmer.sweep(StrategyKind::STrim, speeds, &|_| 0.0)?;
        Ok(Self {
            trimmer,
            speeds: speeds.to_vec(),
            reference,
            search: SearchOptions::default(),
        })
    }

    pub fn with_search_options(mut self, search: SearchOptions) -> Self {
        self.search = search;
        self
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn trimmer(&self) -> &Trimmer {
        self.trimmer
    }

    /// STrim solution at a grid speed.
    pub fn reference(&self, speed: f64) -> Option<&TrimSolution> {
        let k = key(speed);
        self.speeds
            .iter()
            .position(|&s| key(s) == k)
            .map(|i| &self.reference[i])
    }

    /// STrim solution at any speed, solved from the nearest grid point when
    /// the speed is off the grid.
    pub fn reference_at(&self, speed: f64) -> Result<TrimSolution> {
        if let Some(r) = self.reference(speed) {
            return Ok(r.clone());
        }
        let nearest = self
            .reference
            .iter()
            .min_by(|a, b| (a.speed() - speed).abs().total_cmp(&(b.speed() - speed).abs()));
        self.trimmer.trim(speed, StrategyKind::STrim, 0.0, nearest)
    }

    /// TIL of trimming at `delta_e`, relative to the STrim load at `speed`.
    pub fn til(&self, speed: f64, delta_e: f64) -> Result<f64> {
        let reference = self.reference_at(speed)?;
        let mut probe = TrimProbe::new(self.trimmer, StrategyKind::HTrim, &reference);
        Ok(probe.probe(delta_e)?.til)
    }

    /// Elevator search at one speed.
    pub fn search(
        &self,
        speed: f64,
        kind: StrategyKind,
        til_cap: f64,
    ) -> std::result::Result<(SearchOutcome, TrimSolution), SearchFailure> {
        let reference = self.reference_at(speed).map_err(|e| SearchFailure {
            delta_e: 0.0,
            error: e,
            trace: SearchTrace::default(),
        })?;
        let mut probe = TrimProbe::new(self.trimmer, kind, &reference);
        let opts = SearchOptions {
            til_cap,
            ..self.search
        };
        let outcome = descent_search(&mut probe, &opts)?;
        let solution = probe
            .solution(outcome.delta_e)
            .cloned()
            .expect("accepted point was trimmed");
        debug!(
            "{kind} {speed} m/s: delta_e {} after {} trims",
            outcome.delta_e, outcome.probes
        );
        Ok((outcome, solution))
    }

    /// Exhaustive 0.01 deg scan at one speed, for checking the search.
    pub fn brute_force(&self, speed: f64, kind: StrategyKind, til_cap: f64) -> Result<ProbePoint> {
        let reference = self.reference_at(speed)?;
        let mut probe = TrimProbe::new(self.trimmer, kind, &reference);
        let opts = SearchOptions {
            til_cap,
            ..self.search
        };
        brute_force_search(&mut probe, &opts)
    }

    /// Records for `kind` at every grid speed. `til_cap` only matters for HTrim.
    pub fn run(&self, kind: StrategyKind, til_cap: f64) -> Result<Vec<StrategyRecord>> {
        match kind {
            StrategyKind::STrim => Ok(self
                .reference
                .iter()
                .map(|s| StrategyRecord::new(kind, s.clone(), s))
                .collect()),
            StrategyKind::Baseline => {
                let sweep = self.trimmer.sweep(kind, &self.speeds, &|_| 0.0)?;
                Ok(sweep
                    .into_iter()
                    .zip(&self.reference)
                    .map(|(s, r)| StrategyRecord::new(kind, s, r))
                    .collect())
            }
            StrategyKind::MPTrim | StrategyKind::HTrim => {
                let cap = if kind == StrategyKind::MPTrim { f64::INFINITY } else { til_cap };
                self.speeds
                    .par_iter()
                    .zip(self.reference.par_iter())
                    .map(|(&speed, reference)| {
                        let (outcome, solution) = self
                            .search(speed, kind, cap)
                            .map_err(|f| f.into_trim_error(speed))?;
                        let mut record = StrategyRecord::new(kind, solution, reference);
                        record.at_domain_edge = outcome.at_domain_edge;
                        Ok(record)
                    })
                    .collect()
            }
        }
    }

    /// Samples power, rotor load and TIL over `grid` at one speed.
    pub fn verify_properties(&self, speed: f64, grid: &[f64]) -> PropertyReport {
        let mut samples = Vec::new();
        let mut failures = Vec::new();
        match self.reference_at(speed) {
            Ok(reference) => {
                let mut probe = TrimProbe::new(self.trimmer, StrategyKind::HTrim, &reference);
                let mut ordered = grid.to_vec();
                ordered.sort_by(|a, b| b.total_cmp(a));
                ordered.dedup_by(|a, b| key(*a) == key(*b));
                for de in ordered {
                    match probe.trim(de) {
                        Ok(sol) => samples.push((
                            de,
                            sol.power() / 1e3,
                            sol.rotor_load() / 1e3,
                            til(sol.rotor_load(), reference.rotor_load()),
                        )),
                        Err(e) => failures.push((de, e.to_string())),
                    }
                }
            }
            Err(e) => failures.push((0.0, e.to_string())),
        }
        property_report(speed, samples, failures)
    }
}

/// Records for one strategy over `speeds`, solving the STrim reference first.
pub fn run_strategy(trimmer: &Trimmer, kind: StrategyKind, speeds: &[f64]) -> Result<Vec<StrategyRecord>> {
    let strategist = Strategist::new(trimmer, speeds)?;
    strategist.run(kind, trimmer.config().calibration.til_cap)
}

/// Largest HTrim-style reduction in a record list, with its speed.
pub fn max_reduction(records: &[StrategyRecord]) -> Option<(f64, f64)> {
    records
        .iter()
        .map(|r| (r.speed, r.reduction_pct))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

impl From<SearchFailure> for TrimError {
    fn from(f: SearchFailure) -> Self {
        f.error
    }
}
