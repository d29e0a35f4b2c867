//! Staged descent over the elevator deflection.
//!
//! Deflections are handled in integer hundredths of a degree so that the
//! three step sizes (1, 0.1, 0.01 deg) land exactly on a shared grid and
//! repeated probes of the same point hit the memo.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Result, TrimError};

/// Power and load penalty of one elevator setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePoint {
    pub delta_e: f64,
    /// W
    pub power: f64,
    /// %
    pub til: f64,
}

/// Something that can be trimmed at a given elevator deflection.
pub trait Probe {
    fn probe(&mut self, delta_e: f64) -> Result<ProbePoint>;
}

impl<F> Probe for F
where
    F: FnMut(f64) -> Result<ProbePoint>,
{
    fn probe(&mut self, delta_e: f64) -> Result<ProbePoint> {
        self(delta_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// TIL ceiling in percent; `f64::INFINITY` leaves the load unconstrained.
    pub til_cap: f64,
    /// Most negative deflection searched, deg.
    pub lower: f64,
    /// A step is taken only if it lowers the power by more than this
    /// fraction. Keeps solver noise from walking an ineffective elevator to
    /// the end of its range.
    pub power_tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            til_cap: f64::INFINITY,
            lower: -15.0,
            power_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub delta_e: f64,
    pub power: f64,
    pub til: f64,
    pub accepted: bool,
    /// Step size of the pass this probe belongs to, deg.
    pub step: f64,
}

/// Every comparison made by the search, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchTrace {
    pub entries: Vec<TraceEntry>,
    /// Final window `[L, R]`, deg.
    pub window: (f64, f64),
    /// Step of the last pass, deg.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub delta_e: f64,
    pub power: f64,
    pub til: f64,
    /// The optimum sits on the lower end of the deflection range.
    pub at_domain_edge: bool,
    /// Distinct deflections actually trimmed.
    pub probes: usize,
    pub trace: SearchTrace,
}

/// A probe failed part-way; the trace up to that point is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchFailure {
    pub delta_e: f64,
    pub error: TrimError,
    pub trace: SearchTrace,
}

impl fmt::Display for SearchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "probe at delta_e = {} failed after {} comparisons: {}",
            self.delta_e,
            self.trace.entries.len(),
            self.error
        )
    }
}

impl std::error::Error for SearchFailure {}

impl SearchFailure {
    pub fn into_trim_error(self, speed: f64) -> TrimError {
        TrimError::Search {
            speed,
            delta_e: self.delta_e,
            source: Box::new(self.error),
        }
    }
}

fn hundredths(deg: f64) -> i64 {
    (deg * 100.0).round() as i64
}

fn degrees(h: i64) -> f64 {
    h as f64 / 100.0
}

struct Memo<'a, P: Probe> {
    probe: &'a mut P,
    points: BTreeMap<i64, ProbePoint>,
}

impl<P: Probe> Memo<'_, P> {
    fn get(&mut self, h: i64) -> Result<ProbePoint> {
        if let Some(p) = self.points.get(&h) {
            return Ok(*p);
        }
        let p = self.probe.probe(degrees(h))?;
        self.points.insert(h, p);
        Ok(p)
    }
}

/// Walk the deflection down from 0 while the power keeps falling and the TIL
/// stays under the cap. On each stop the window shrinks to the bracket around
/// the last accepted point and the step is refined by ten, from 1 deg down to
/// 0.01 deg. Returns the last accepted point of the finest pass.
pub fn descent_search<P: Probe>(probe: &mut P, opts: &SearchOptions) -> std::result::Result<SearchOutcome, SearchFailure> {
    let lower = hundredths(opts.lower);
    let mut memo = Memo {
        probe,
        points: BTreeMap::new(),
    };
    let mut trace = SearchTrace::default();

    let fail = |h: i64, error: TrimError, trace: &SearchTrace| SearchFailure {
        delta_e: degrees(h),
        error,
        trace: trace.clone(),
    };

    let mut left = lower;
    let mut right = 0i64;
    let mut step = 100i64;
    let mut best = None;
    let mut best_h = 0i64;

    while step >= 1 {
        trace.step = degrees(step);
        let mut current = right;
        let mut current_point = match memo.get(right) {
            Ok(p) => p,
            Err(e) => return Err(fail(right, e, &trace)),
        };
        loop {
            let next = current - step;
            if next < lower {
                break;
            }
            let p = match memo.get(next) {
                Ok(p) => p,
                Err(e) => return Err(fail(next, e, &trace)),
            };
            let lowers_power = p.power < current_point.power - opts.power_tolerance * current_point.power.abs();
            let accepted = lowers_power && p.til <= opts.til_cap;
            trace.entries.push(TraceEntry {
                delta_e: degrees(next),
                power: p.power,
                til: p.til,
                accepted,
                step: degrees(step),
            });
            if !accepted {
                left = next;
                break;
            }
            current = next;
            current_point = p;
            if current == lower {
                left = lower;
                break;
            }
        }
        best = Some(current_point);
        best_h = current;
        trace.window = (degrees(left), degrees((current + step).min(0)));
        // The minimum lies between the failed probe and the point before the
        // last accepted one, so the finer pass restarts one step above it.
        right = (current + step).min(0);
        step /= 10;
    }

    let best = best.expect("at least one pass");
    Ok(SearchOutcome {
        delta_e: degrees(best_h),
        power: best.power,
        til: best.til,
        at_domain_edge: best_h == lower,
        probes: memo.points.len(),
        trace,
    })
}

/// Exhaustive scan of the whole range at 0.01 deg. Returns the feasible point
/// of lowest power, preferring the smaller deflection on ties within the
/// power tolerance.
pub fn brute_force_search<P: Probe>(probe: &mut P, opts: &SearchOptions) -> Result<ProbePoint> {
    let lower = hundredths(opts.lower);
    let mut best = probe.probe(0.0)?;
    let mut h = -1i64;
    while h >= lower {
        let p = probe.probe(degrees(h))?;
        if p.til <= opts.til_cap && p.power < best.power - opts.power_tolerance * best.power.abs() {
            best = p;
        }
        h -= 1;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<ProbePoint> {
        move |d| {
            Ok(ProbePoint {
                delta_e: d,
                power: f(d),
                til: -d,
            })
        }
    }

    #[test]
    fn quadratic_minimum_found_to_a_hundredth() {
        let mut p = synthetic(|d| (d + 3.0) * (d + 3.0) + 100.0);
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert!((out.delta_e + 3.0).abs() < 0.01 + 1e-12, "{}", out.delta_e);
        assert!((out.power - 100.0).abs() < 1e-9);
        assert!(!out.at_domain_edge);
    }

    #[test]
    fn off_grid_minimum() {
        let mut p = synthetic(|d| (d + 6.437) * (d + 6.437));
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert!((out.delta_e + 6.44).abs() < 1e-9, "{}", out.delta_e);
    }

    #[test]
    fn increasing_power_stops_at_zero() {
        let mut p = synthetic(|d| 100.0 - d);
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert_eq!(out.delta_e, 0.0);
        assert_eq!(out.power, 100.0);
    }

    #[test]
    fn flat_power_is_not_deflected() {
        let mut p = synthetic(|_| 42.0);
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert_eq!(out.delta_e, 0.0);
    }

    #[test]
    fn til_cap_binds_before_the_power_minimum() {
        // til = -delta_e, so a 2.5 cap stops at -2.5
        let mut p = synthetic(|d| (d + 8.0) * (d + 8.0));
        let opts = SearchOptions {
            til_cap: 2.5,
            ..SearchOptions::default()
        };
        let out = descent_search(&mut p, &opts).unwrap();
        assert!((out.delta_e + 2.5).abs() < 1e-9, "{}", out.delta_e);
        assert!(out.til <= 2.5);
    }

    #[test]
    fn monotone_decrease_ends_on_the_edge() {
        let mut p = synthetic(|d| 100.0 + d);
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert_eq!(out.delta_e, -15.0);
        assert!(out.at_domain_edge);
    }

    #[test]
    fn trace_shape() {
        let mut p = synthetic(|d| (d + 3.0) * (d + 3.0) + 100.0);
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        let t = &out.trace;
        assert_eq!(t.step, 0.01);
        for e in &t.entries {
            assert!([1.0, 0.1, 0.01].contains(&e.step));
        }
        // deflections strictly decrease within each pass
        for w in t.entries.windows(2) {
            if w[0].step == w[1].step {
                assert!(w[1].delta_e < w[0].delta_e);
            }
        }
        assert!(t.window.0 <= out.delta_e && out.delta_e <= t.window.1);
    }

    #[test]
    fn probes_are_memoized() {
        let mut calls = 0usize;
        let mut p = |d: f64| {
            calls += 1;
            Ok(ProbePoint {
                delta_e: d,
                power: (d + 3.0) * (d + 3.0),
                til: 0.0,
            })
        };
        let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert_eq!(calls, out.probes);
    }

    #[test]
    fn failure_keeps_the_trace() {
        let mut p = |d: f64| {
            if d < -2.0 {
                Err(TrimError::Model("no trim".into()))
            } else {
                Ok(ProbePoint {
                    delta_e: d,
                    power: 10.0 + d,
                    til: 0.0,
                })
            }
        };
        let err = descent_search(&mut p, &SearchOptions::default()).unwrap_err();
        assert_eq!(err.delta_e, -3.0);
        assert_eq!(err.trace.entries.len(), 2);
        assert!(matches!(err.into_trim_error(80.0), TrimError::Search { speed, .. } if speed == 80.0));
    }

    #[test]
    fn brute_force_agrees_on_quadratic() {
        let f = |d: f64| (d + 4.37) * (d + 4.37) + 7.0;
        let mut p = synthetic(f);
        let b = brute_force_search(&mut p, &SearchOptions::default()).unwrap();
        assert!((b.delta_e + 4.37).abs() < 1e-9);
        let mut p = synthetic(f);
        let h = descent_search(&mut p, &SearchOptions::default()).unwrap();
        assert!((h.delta_e - b.delta_e).abs() < 1e-9);
    }
}
