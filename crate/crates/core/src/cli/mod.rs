//! Command-line front end: `sweep`, `elevator-study` and `distribution`.
//!
//! Every command writes plain CSV plus a JSON summary into `--out`. A product
//! that fails leaves no file behind; the process exits nonzero when any
//! requested product failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::airframe::Airframe;
use crate::config::HelicopterConfig;
use crate::controls::ControlId;
use crate::error::{Result, TrimError};
use crate::output::{sig6, OutputSet, Table};
use crate::strategy::{
    check_ordering, engagement_speeds, max_reduction, record_table, til, PropertyReport, StrategyRecord, Strategist,
    TrimProbe,
};
use crate::trim::{speed_grid, sweep_table, StrategyKind, TrimSolution, Trimmer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Slack on the power and load ordering checks.
pub const ORDERING_SLACK: f64 = 0.005;

#[derive(Debug, Parser)]
#[command(name = "cch-trim", version, about = "Trim sweeps and elevator allocation for a coaxial compound helicopter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Speed sweeps of the requested strategies.
    Sweep(CommonArgs),
    /// Power and rotor load against elevator deflection at fixed speeds.
    ElevatorStudy(CommonArgs),
    /// Force and moment breakdown by component for a list of deflections.
    Distribution(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Helicopter description (TOML); the built-in aircraft when absent.
    #[arg(long, env = "CCH_TRIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub vmin: Option<f64>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub dv: Option<f64>,
    /// Explicit speed list, overrides the range (e.g. `70,100`).
    #[arg(long)]
    pub speeds: Option<String>,
    /// Comma-separated subset of BL, STrim, MPTrim, HTrim.
    #[arg(long, default_value = "BL,STrim,MPTrim,HTrim")]
    pub strategies: String,
    /// HTrim rotor-load ceiling in percent; `inf` lifts it.
    #[arg(long)]
    pub til_cap: Option<f64>,
    /// Elevator deflections in degrees: a list `0,-2,-4` or a range `0:-15:-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub de_grid: Option<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Everything one run depends on, after defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub strategies: Vec<StrategyKind>,
    pub speeds: Vec<f64>,
    pub de_grid: Vec<f64>,
    /// Overrides the configured HTrim cap.
    pub til_cap: Option<f64>,
    pub workers: usize,
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| TrimError::Usage(format!("bad {what} value `{s}`")))
        })
        .collect()
}

/// `a:b:step` inclusive, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [_] => parse_list(text, "deflection")?,
        [a, b, step] => {
            let v = parse_list(&format!("{a},{b},{step}"), "deflection")?;
            let [a, b, step] = [v[0], v[1], v[2]];
            if step == 0.0 || (b - a) * step < 0.0 {
                return Err(TrimError::Usage(format!("deflection range `{text}` never reaches its end")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| ((a + step * i as f64) * 1e6).round() / 1e6).collect()
        }
        _ => return Err(TrimError::Usage(format!("cannot read deflection grid `{text}`"))),
    };
    if grid.is_empty() {
        return Err(TrimError::Usage("empty elevator deflection grid".into()));
    }
    Ok(grid)
}

pub fn parse_strategies(text: &str) -> Result<Vec<StrategyKind>> {
    let mut kinds = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<StrategyKind>>>()?;
    if kinds.is_empty() {
        return Err(TrimError::Usage("no strategies requested".into()));
    }
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

impl RunManifest {
    pub fn from_args(command: &Command) -> Result<Self> {
        let (name, args) = match command {
            Command::Sweep(a) => ("sweep", a),
            Command::ElevatorStudy(a) => ("elevator-study", a),
            Command::Distribution(a) => ("distribution", a),
        };
        let speeds = match &args.speeds {
            Some(s) => {
                let v = parse_list(s, "speed")?;
                if v.is_empty() {
                    return Err(TrimError::Usage("empty speed list".into()));
                }
                for &u in &v {
                    speed_grid(u, u, 1.0)?;
                }
                v
            }
            None if args.vmin.is_none() && args.vmax.is_none() && name != "sweep" => {
                vec![if name == "distribution" { 70.0 } else { 100.0 }]
            }
            None => speed_grid(
                args.vmin.unwrap_or(0.0),
                args.vmax.unwrap_or(100.0),
                args.dv.unwrap_or(5.0),
            )?,
        };
        let default_grid = if name == "distribution" { "-6,-3,0,3" } else { "0:-15:-1" };
        let de_grid = parse_grid(args.de_grid.as_deref().unwrap_or(default_grid))?;
        let (lo, hi) = if name == "distribution" {
            ControlId::Elevator.bounds()
        } else {
            (-15.0, 0.0)
        };
        if let Some(d) = de_grid.iter().find(|d| !(lo..=hi).contains(*d)) {
            return Err(TrimError::Usage(format!("elevator deflection {d} outside [{lo}, {hi}]")));
        }
        if let Some(cap) = args.til_cap {
            if !(cap > 0.0) {
                return Err(TrimError::Usage(format!("TIL cap must be positive, got {cap}")));
            }
        }
        let workers = match args.workers {
            Some(0) => return Err(TrimError::Usage("--workers must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(Self {
            command: name,
            config: args.config.clone(),
            out: args.out.clone(),
            strategies: parse_strategies(&args.strategies)?,
            speeds,
            de_grid,
            til_cap: args.til_cap,
            workers,
        })
    }

    pub fn load_config(&self) -> Result<HelicopterConfig> {
        let mut cfg = match &self.config {
            Some(p) => HelicopterConfig::from_file(p)?,
            None => HelicopterConfig::default_cch(),
        };
        if let Some(cap) = self.til_cap {
            cfg.calibration.til_cap = cap;
        }
        Ok(cfg)
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    /// Products that failed, with the reason.
    pub failed: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}

fn manifest_json(m: &RunManifest, cfg: &HelicopterConfig) -> Value {
    json!({
        "command": m.command,
        "config": m.config.as_ref().map(|p| p.display().to_string()),
        "strategies": m.strategies.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "speeds": m.speeds,
        "de_grid": m.de_grid,
        "til_cap": cfg.calibration.til_cap,
    })
}

fn write_json(outputs: &mut OutputSet, path: PathBuf, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| TrimError::Io(e.to_string()))?;
    text.push('\n');
    outputs.write(path, &text)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TrimError::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Commit a finished product: either every file is written or none is kept.
fn commit(outcome: &mut RunOutcome, files: Vec<(PathBuf, String)>) -> Result<()> {
    let mut set = OutputSet::default();
    for (path, text) in files {
        if let Err(e) = set.write(path, &text) {
            set.remove_all();
            return Err(e);
        }
    }
    outcome.written.extend(set.paths().iter().cloned());
    Ok(())
}

fn controls_table(sets: &BTreeMap<StrategyKind, Vec<StrategyRecord>>) -> Table {
    let mut header = vec!["U", "strategy"];
    header.extend(ControlId::ALL.iter().map(|id| id.name()));
    let mut t = Table::new(&header);
    for records in sets.values() {
        for r in records {
            let mut row = vec![sig6(r.speed), r.kind.to_string()];
            row.extend(ControlId::ALL.iter().map(|id| sig6(r.solution.controls.get(*id))));
            t.row(&row);
        }
    }
    t
}

fn power_table(speeds: &[f64], sets: &BTreeMap<StrategyKind, Vec<StrategyRecord>>) -> Table {
    let names: Vec<String> = sets.keys().map(|k| format!("P_{k}_kW")).collect();
    let mut header = vec!["U"];
    header.extend(names.iter().map(String::as_str));
    let mut t = Table::new(&header);
    for (i, u) in speeds.iter().enumerate() {
        let mut row = vec![sig6(*u)];
        row.extend(sets.values().map(|r| sig6(r[i].power_kw)));
        t.row(&row);
    }
    t
}

/// Speed sweeps of every requested strategy.
pub fn cmd_sweep(m: &RunManifest) -> Result<RunOutcome> {
    let cfg = m.load_config()?;
    let weight = cfg.weight();
    let til_cap = cfg.calibration.til_cap;
    let trimmer = Trimmer::new(Airframe::new(cfg.clone()));
    prepare_out(&m.out)?;
    let mut outcome = RunOutcome::default();

    let results: Vec<(StrategyKind, Result<Vec<StrategyRecord>>)> = pool(m.workers)?.install(|| {
        match Strategist::new(&trimmer, &m.speeds) {
            Ok(st) => m
                .strategies
                .par_iter()
                .map(|&k| (k, st.run(k, til_cap)))
                .collect(),
            Err(e) => m.strategies.iter().map(|&k| (k, Err(e.clone()))).collect(),
        }
    });

    let mut sets = BTreeMap::new();
    let mut products = serde_json::Map::new();
    for (kind, result) in results {
        let file = format!("sweep_{kind}.csv");
        match result {
            Ok(records) => {
                let solutions: Vec<TrimSolution> = records.iter().map(|r| r.solution.clone()).collect();
                let rec_file = format!("records_{kind}.csv");
                commit(
                    &mut outcome,
                    vec![
                        (m.out.join(&file), sweep_table(&solutions).as_str().to_string()),
                        (m.out.join(&rec_file), record_table(&records).as_str().to_string()),
                    ],
                )?;
                products.insert(kind.to_string(), json!({"status": "ok", "files": [file, rec_file]}));
                sets.insert(kind, records);
            }
            Err(e) => {
                warn!("{kind} failed: {e}");
                products.insert(kind.to_string(), json!({"status": "failed", "error": e.to_string()}));
                outcome.failed.push((kind.to_string(), e.to_string()));
            }
        }
    }

    if !sets.is_empty() {
        let all: Vec<StrategyRecord> = sets.values().flatten().cloned().collect();
        commit(
            &mut outcome,
            vec![
                (m.out.join("power.csv"), power_table(&m.speeds, &sets).as_str().to_string()),
                (m.out.join("controls.csv"), controls_table(&sets).as_str().to_string()),
                (m.out.join("strategies.csv"), record_table(&all).as_str().to_string()),
            ],
        )?;
    }

    let ordering = check_ordering(&sets, ORDERING_SLACK);
    let engagement = match (sets.get(&StrategyKind::STrim), sets.get(&StrategyKind::HTrim)) {
        (Some(s), Some(h)) => serde_json::to_value(engagement_speeds(s, h, weight)).unwrap_or(Value::Null),
        _ => Value::Null,
    };
    let htrim_max = sets
        .get(&StrategyKind::HTrim)
        .and_then(|r| max_reduction(r))
        .map(|(u, p)| json!({"speed": u, "reduction_pct": p}))
        .unwrap_or(Value::Null);
    let edges: Vec<Value> = sets
        .values()
        .flatten()
        .filter(|r| r.at_domain_edge)
        .map(|r| json!({"strategy": r.kind.name(), "speed": r.speed}))
        .collect();
    let summary = json!({
        "manifest": manifest_json(m, &cfg),
        "products": products,
        "ordering": ordering,
        "engagement": engagement,
        "htrim_max_reduction": htrim_max,
        "elevator_at_range_end": edges,
    });
    let mut set = OutputSet::default();
    write_json(&mut set, m.out.join("summary.json"), &summary)?;
    outcome.written.extend(set.paths().iter().cloned());
    Ok(outcome)
}

fn study_row(u: f64, de: f64, sample: Option<&(f64, f64, f64, f64)>, reference_power_kw: f64) -> Vec<String> {
    match sample {
        Some(&(_, p, l, t)) => vec![
            sig6(u),
            sig6(de),
            sig6(p),
            sig6(l),
            sig6(t),
            sig6(crate::strategy::reduction(p, reference_power_kw)),
            "ok".into(),
        ],
        None => vec![
            sig6(u),
            sig6(de),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            "failed".into(),
        ],
    }
}

/// Power, rotor load and TIL against deflection at each requested speed.
pub fn cmd_elevator_study(m: &RunManifest) -> Result<RunOutcome> {
    let cfg = m.load_config()?;
    let trimmer = Trimmer::new(Airframe::new(cfg.clone()));
    prepare_out(&m.out)?;
    let mut outcome = RunOutcome::default();

    let studies: Vec<(f64, Option<f64>, PropertyReport)> = pool(m.workers)?.install(|| {
        m.speeds
            .par_iter()
            .map(|&u| match Strategist::new(&trimmer, &[u]) {
                Ok(st) => {
                    let reference = st.reference(u).map(|r| r.power() / 1e3);
                    (u, reference, st.verify_properties(u, &m.de_grid))
                }
                Err(e) => {
                    let failures = m.de_grid.iter().map(|&d| (d, e.to_string())).collect();
                    (
                        u,
                        None,
                        PropertyReport {
                            speed: u,
                            samples: vec![],
                            failures,
                            load_monotone: false,
                            til_monotone: false,
                            power_unimodal: false,
                            power_interior_minimum: false,
                            violations: vec![],
                        },
                    )
                }
            })
            .collect()
    });

    let mut grid = m.de_grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let mut table = Table::new(&["U", "delta_e", "power_kW", "rotor_load_kN", "TIL_pct", "reduction_pct", "status"]);
    let mut failed_points = 0;
    for (u, reference, report) in &studies {
        for &de in &grid {
            let sample = report.samples.iter().find(|s| s.0 == de);
            if sample.is_none() {
                failed_points += 1;
                warn!("no trim at {u} m/s, delta_e {de}");
            }
            table.row(&study_row(*u, de, sample, reference.unwrap_or(f64::NAN)));
        }
    }
    if failed_points > 0 {
        info!("{failed_points} study points failed; flagged in the table");
    }
    commit(&mut outcome, vec![(m.out.join("elevator_study.csv"), table.as_str().to_string())])?;

    let reports: Vec<Value> = studies
        .iter()
        .map(|(_, _, r)| {
            json!({
                "speed": r.speed,
                "holds": r.holds(),
                "load_monotone": r.load_monotone,
                "til_monotone": r.til_monotone,
                "power_unimodal": r.power_unimodal,
                "power_interior_minimum": r.power_interior_minimum,
                "violations": r.violations,
                "failures": r.failures.iter().map(|(d, e)| json!({"delta_e": d, "error": e})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let summary = json!({
        "manifest": manifest_json(m, &cfg),
        "properties": reports,
        "failed_points": failed_points,
    });
    let mut set = OutputSet::default();
    write_json(&mut set, m.out.join("summary.json"), &summary)?;
    outcome.written.extend(set.paths().iter().cloned());
    Ok(outcome)
}

/// Shortest round-trip form, so 70 m/s and -6 deg give `U70_de-6`.
fn distribution_file(u: f64, de: f64) -> String {
    format!("distribution_U{u}_de{de}.csv")
}

/// Component force and moment tables for each deflection.
pub fn cmd_distribution(m: &RunManifest) -> Result<RunOutcome> {
    let cfg = m.load_config()?;
    let trimmer = Trimmer::new(Airframe::new(cfg.clone()));
    prepare_out(&m.out)?;
    let mut outcome = RunOutcome::default();

    let mut grid = m.de_grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();

    type Point = (f64, f64, std::result::Result<(TrimSolution, f64), String>);
    let points: Vec<Point> = pool(m.workers)?.install(|| {
        m.speeds
            .par_iter()
            .flat_map_iter(|&u| {
                let reference = trimmer.trim(u, StrategyKind::STrim, 0.0, None);
                let mut out: Vec<Point> = Vec::new();
                match reference {
                    Ok(reference) => {
                        let mut probe = TrimProbe::new(&trimmer, StrategyKind::HTrim, &reference);
                        // walk outwards from neutral so each trim starts next to a solved one
                        let (up, down): (Vec<f64>, Vec<f64>) = grid.iter().partition(|d| **d > 0.0);
                        for &de in down.iter().chain(up.iter().rev()) {
                            let r = probe
                                .trim(de)
                                .map(|s| (s.clone(), til(s.rotor_load(), reference.rotor_load())))
                                .map_err(|e| e.to_string());
                            out.push((u, de, r));
                        }
                    }
                    Err(e) => out.extend(grid.iter().map(|&de| (u, de, Err(e.to_string())))),
                }
                out.sort_by(|a, b| b.1.total_cmp(&a.1));
                out
            })
            .collect()
    });

    let mut index = Table::new(&["U", "delta_e", "power_kW", "rotor_load_kN", "TIL_pct", "status", "file"]);
    let mut files = Vec::new();
    let mut failures = Vec::new();
    for (u, de, r) in &points {
        match r {
            Ok((sol, t)) => {
                let name = distribution_file(*u, *de);
                files.push((m.out.join(&name), sol.breakdown().to_csv().as_str().to_string()));
                index.row(&[
                    sig6(*u),
                    sig6(*de),
                    sig6(sol.power() / 1e3),
                    sig6(sol.rotor_load() / 1e3),
                    sig6(*t),
                    "ok".into(),
                    name,
                ]);
            }
            Err(e) => {
                warn!("no trim at {u} m/s, delta_e {de}: {e}");
                failures.push(json!({"speed": u, "delta_e": de, "error": e}));
                index.row(&[
                    sig6(*u),
                    sig6(*de),
                    String::new(),
                    String::new(),
                    String::new(),
                    "failed".into(),
                    String::new(),
                ]);
            }
        }
    }
    files.push((m.out.join("distribution.csv"), index.as_str().to_string()));
    commit(&mut outcome, files)?;
    let summary = json!({
        "manifest": manifest_json(m, &cfg),
        "failures": failures,
    });
    let mut set = OutputSet::default();
    write_json(&mut set, m.out.join("summary.json"), &summary)?;
    outcome.written.extend(set.paths().iter().cloned());
    Ok(outcome)
}

/// Run a parsed command line and return the process exit status.
pub fn run(cli: Cli) -> i32 {
    let manifest = match RunManifest::from_args(&cli.command) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("cch-trim: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match manifest.command {
        "sweep" => cmd_sweep(&manifest),
        "elevator-study" => cmd_elevator_study(&manifest),
        _ => cmd_distribution(&manifest),
    };
    match result {
        Ok(outcome) => {
            for (product, reason) in &outcome.failed {
                eprintln!("cch-trim: {product} failed: {reason}");
            }
            for p in &outcome.written {
                info!("wrote {}", p.display());
            }
            outcome.exit_code()
        }
        Err(e @ TrimError::Usage(_)) => {
            eprintln!("cch-trim: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("cch-trim: {e}");
            EXIT_FAILED
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(args: &[&str]) -> Result<RunManifest> {
        let mut full = vec!["cch-trim"];
        full.extend_from_slice(args);
        let cli = Cli::try_parse_from(full).map_err(|e| TrimError::Usage(e.to_string()))?;
        RunManifest::from_args(&cli.command)
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0,-2,-4").unwrap(), vec![0.0, -2.0, -4.0]);
        assert_eq!(parse_grid("0:-1:-0.25").unwrap(), vec![0.0, -0.25, -0.5, -0.75, -1.0]);
        assert_eq!(parse_grid("0:-15:-1").unwrap().len(), 16);
        assert!(parse_grid("").is_err());
        assert!(parse_grid(" , ").is_err());
        assert!(parse_grid("0:-3:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn strategy_lists() {
        use StrategyKind::*;
        assert_eq!(parse_strategies("HTrim, strim,HTrim").unwrap(), vec![STrim, HTrim]);
        assert!(matches!(parse_strategies(""), Err(TrimError::Usage(_))));
        assert!(parse_strategies("FastTrim").is_err());
    }

    #[test]
    fn sweep_defaults() {
        let m = manifest(&["sweep", "--workers", "1"]).unwrap();
        assert_eq!(m.speeds.len(), 21);
        assert_eq!(m.strategies.len(), 4);
        assert_eq!(m.til_cap, None);
    }

    #[test]
    fn study_defaults_and_limits() {
        let m = manifest(&["elevator-study", "--de-grid", "0,-2,-4,-6,-7,-10"]).unwrap();
        assert_eq!(m.speeds, vec![100.0]);
        assert_eq!(m.de_grid.len(), 6);
        assert!(manifest(&["elevator-study", "--de-grid", "3"]).is_err());
        assert!(manifest(&["distribution", "--de-grid", "3"]).is_ok());
        assert!(manifest(&["sweep", "--strategies", ""]).is_err());
        assert!(manifest(&["sweep", "--vmax", "120"]).is_err());
        assert!(manifest(&["sweep", "--dv", "0"]).is_err());
        assert!(manifest(&["sweep", "--til-cap", "-1"]).is_err());
        assert!(manifest(&["sweep", "--workers", "0"]).is_err());
    }

    #[test]
    fn til_override() {
        let m = manifest(&["sweep", "--til-cap", "8"]).unwrap();
        assert_eq!(m.load_config().unwrap().calibration.til_cap, 8.0);
    }

    #[test]
    fn step_one_grid_has_101_speeds() {
        let m = manifest(&["sweep", "--dv", "1"]).unwrap();
        assert_eq!(m.speeds.len(), 101);
    }
}
