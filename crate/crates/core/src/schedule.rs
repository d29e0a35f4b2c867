//! Piecewise-linear breakpoint tables used for every calibration schedule.

use serde::Serialize;

use crate::error::{Result, TrimError};

/// A piecewise-linear function given by strictly increasing breakpoints.
/// Outside the table the end values are held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    points: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(TrimError::BadValue {
                key: name.to_string(),
                message: "schedule needs at least one row".into(),
            });
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(TrimError::BadValue {
                key: name.to_string(),
                message: "schedule rows must be finite".into(),
            });
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TrimError::BadValue {
                key: name.to_string(),
                message: "breakpoints must be strictly increasing".into(),
            });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (x0, y0) = pts[0];
        if x <= x0 {
            return y0;
        }
        let (xn, yn) = pts[pts.len() - 1];
        if x >= xn {
            return yn;
        }
        // first breakpoint strictly greater than x
        let k = pts.partition_point(|p| p.0 <= x);
        let (xa, ya) = pts[k - 1];
        let (xb, yb) = pts[k];
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn max_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_clamps() {
        let s = Schedule::new("t", vec![(0.0, 1.0), (0.1, 0.7), (0.4, 0.0)]).unwrap();
        assert_eq!(s.eval(-1.0), 1.0);
        assert_eq!(s.eval(0.0), 1.0);
        assert!((s.eval(0.05) - 0.85).abs() < 1e-15);
        assert!((s.eval(0.25) - 0.35).abs() < 1e-12);
        assert_eq!(s.eval(0.4), 0.0);
        assert_eq!(s.eval(3.0), 0.0);
    }

    #[test]
    fn rejects_unsorted_rows() {
        assert!(Schedule::new("t", vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Schedule::new("t", vec![]).is_err());
        assert!(Schedule::new("t", vec![(f64::NAN, 1.0)]).is_err());
    }
}
