use cch_trim::strategy::{brute_force_search, descent_search, ProbePoint, SearchOptions};
use cch_trim::Result;
use proptest::prelude::*;

/// Smooth unimodal power with its minimum at `m` and an asymmetric shape,
/// TIL growing linearly with deflection.
fn curve(m: f64, left: f64, right: f64, slope: f64) -> impl FnMut(f64) -> Result<ProbePoint> {
    move |d| {
        let x = d - m;
        let power = 1.5e6 + if x < 0.0 { left * x * x } else { right * x * x + 10.0 * right * x.powi(3) };
        Ok(ProbePoint {
            delta_e: d,
            power,
            til: -slope * d,
        })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descent_matches_exhaustive_scan(
        m in -16.0..1.0f64,
        left in 50.0..5000.0f64,
        right in 50.0..5000.0f64,
        slope in 0.2..2.0f64,
        cap in prop_oneof![Just(f64::INFINITY), 1.0..20.0f64],
    ) {
        let opts = SearchOptions { til_cap: cap, ..SearchOptions::default() };
        let fast = descent_search(&mut curve(m, left, right, slope), &opts).unwrap();
        let slow = brute_force_search(&mut curve(m, left, right, slope), &opts).unwrap();
        prop_assert!((fast.delta_e - slow.delta_e).abs() <= 0.01 + 1e-9, "{} vs {}", fast.delta_e, slow.delta_e);
        prop_assert!((fast.power - slow.power).abs() <= 1e-3 * slow.power);
        prop_assert!(fast.til <= cap);
        prop_assert!(fast.delta_e <= 0.0 && fast.delta_e >= -15.0);
        prop_assert_eq!(fast.at_domain_edge, fast.delta_e == -15.0);
    }

    #[test]
    fn trace_invariants(m in -15.0..0.0f64, left in 50.0..5000.0f64) {
        let out = descent_search(&mut curve(m, left, left, 1.0), &SearchOptions::default()).unwrap();
        let steps = [1.0, 0.1, 0.01];
        prop_assert_eq!(out.trace.step, 0.01);
        for e in &out.trace.entries {
            prop_assert!(steps.contains(&e.step));
        }
        // each pass strictly decreases δe, and passes come in step order
        for w in out.trace.entries.windows(2) {
            if w[0].step == w[1].step {
                prop_assert!(w[1].delta_e < w[0].delta_e);
            } else {
                prop_assert!(w[1].step < w[0].step);
            }
        }
        let (l, r) = out.trace.window;
        prop_assert!(l <= out.delta_e && out.delta_e <= r);
        // within a pass, accepted probes lower the power one after another
        for w in out.trace.entries.windows(2) {
            if w[0].step == w[1].step && w[0].accepted && w[1].accepted {
                prop_assert!(w[1].power < w[0].power);
            }
        }
        prop_assert_eq!(out.power, out.trace.entries.iter().filter(|e| e.delta_e == out.delta_e).map(|e| e.power).next().unwrap_or(out.power));
    }
}

#[test]
fn synthetic_quadratic_minimum() {
    let mut p = |d: f64| {
        Ok(ProbePoint {
            delta_e: d,
            power: (d + 3.0) * (d + 3.0) + 100.0,
            til: 0.0,
        })
    };
    let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
    assert!((out.delta_e + 3.0).abs() <= 0.01);
}

#[test]
fn rising_power_stops_immediately() {
    let mut p = |d: f64| {
        Ok(ProbePoint {
            delta_e: d,
            power: 1000.0 - d,
            til: 0.0,
        })
    };
    let out = descent_search(&mut p, &SearchOptions::default()).unwrap();
    assert_eq!(out.delta_e, 0.0);
    assert_eq!(out.trace.entries.iter().filter(|e| e.accepted).count(), 0);
}

#[test]
fn unbounded_cap_is_unconstrained_minimum() {
    let make = |d: f64| {
        Ok(ProbePoint {
            delta_e: d,
            power: (d + 9.5) * (d + 9.5),
            til: -3.0 * d,
        })
    };
    let free = descent_search(&mut { make }, &SearchOptions::default()).unwrap();
    assert!((free.delta_e + 9.5).abs() < 1e-9);
    let capped = descent_search(
        &mut { make },
        &SearchOptions {
            til_cap: 5.0,
            ..SearchOptions::default()
        },
    )
    .unwrap();
    assert!((capped.delta_e + 1.66).abs() < 1e-9, "{}", capped.delta_e);
}
