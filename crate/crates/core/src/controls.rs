//! Control and attitude variables, their admissible ranges, and the flight
//! condition. All angles are in degrees.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrimError};

/// Index of one of the eleven trim variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlId {
    Collective,
    DiffCollective,
    LateralCyclic,
    DiffLateralCyclic,
    LongitudinalCyclic,
    DiffLongitudinalCyclic,
    PropellerPitch,
    Elevator,
    Rudder,
    Pitch,
    Roll,
}

impl ControlId {
    pub const ALL: [ControlId; 11] = [
        ControlId::Collective,
        ControlId::DiffCollective,
        ControlId::LateralCyclic,
        ControlId::DiffLateralCyclic,
        ControlId::LongitudinalCyclic,
        ControlId::DiffLongitudinalCyclic,
        ControlId::PropellerPitch,
        ControlId::Elevator,
        ControlId::Rudder,
        ControlId::Pitch,
        ControlId::Roll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlId::Collective => "theta0",
            ControlId::DiffCollective => "theta_diff",
            ControlId::LateralCyclic => "theta1c",
            ControlId::DiffLateralCyclic => "theta1c_diff",
            ControlId::LongitudinalCyclic => "theta1s",
            ControlId::DiffLongitudinalCyclic => "theta1s_diff",
            ControlId::PropellerPitch => "theta_prop",
            ControlId::Elevator => "delta_e",
            ControlId::Rudder => "delta_r",
            ControlId::Pitch => "pitch",
            ControlId::Roll => "roll",
        }
    }

    /// Admissible range in degrees. Attitudes have no tabulated limit; a
    /// generous envelope keeps the solver away from nonsense.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            ControlId::Collective => (0.0, 20.0),
            ControlId::DiffCollective => (-5.0, 5.0),
            ControlId::LateralCyclic => (-6.25, 6.25),
            ControlId::DiffLateralCyclic => (0.0, 4.5),
            ControlId::LongitudinalCyclic => (-10.0, 10.0),
            ControlId::DiffLongitudinalCyclic => (-1.0, 1.0),
            ControlId::PropellerPitch => (0.0, 70.0),
            ControlId::Elevator => (-25.0, 25.0),
            ControlId::Rudder => (-30.0, 30.0),
            ControlId::Pitch => (-20.0, 20.0),
            ControlId::Roll => (-20.0, 20.0),
        }
    }

    /// Whether `bounds` comes from the control table (attitudes do not).
    pub fn is_control(self) -> bool {
        !matches!(self, ControlId::Pitch | ControlId::Roll)
    }
}

/// The eleven control/attitude variables, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlVector {
    pub theta0: f64,
    pub theta_diff: f64,
    pub theta1c: f64,
    pub theta1c_diff: f64,
    pub theta1s: f64,
    pub theta1s_diff: f64,
    pub theta_prop: f64,
    pub delta_e: f64,
    pub delta_r: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// Blade pitch inputs of a single main rotor, in degrees, body-referenced
/// (positive lateral cyclic tilts the disk down on the left, positive
/// longitudinal cyclic tilts it down at the back).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorPitch {
    pub collective: f64,
    pub lateral: f64,
    pub longitudinal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub control: ControlId,
    pub value: f64,
    pub bound: (f64, f64),
}

impl ControlVector {
    pub fn get(&self, id: ControlId) -> f64 {
        match id {
            ControlId::Collective => self.theta0,
            ControlId::DiffCollective => self.theta_diff,
            ControlId::LateralCyclic => self.theta1c,
            ControlId::DiffLateralCyclic => self.theta1c_diff,
            ControlId::LongitudinalCyclic => self.theta1s,
            ControlId::DiffLongitudinalCyclic => self.theta1s_diff,
            ControlId::PropellerPitch => self.theta_prop,
            ControlId::Elevator => self.delta_e,
            ControlId::Rudder => self.delta_r,
            ControlId::Pitch => self.pitch,
            ControlId::Roll => self.roll,
        }
    }

    pub fn set(&mut self, id: ControlId, value: f64) {
        let slot = match id {
            ControlId::Collective => &mut self.theta0,
            ControlId::DiffCollective => &mut self.theta_diff,
            ControlId::LateralCyclic => &mut self.theta1c,
            ControlId::DiffLateralCyclic => &mut self.theta1c_diff,
            ControlId::LongitudinalCyclic => &mut self.theta1s,
            ControlId::DiffLongitudinalCyclic => &mut self.theta1s_diff,
            ControlId::PropellerPitch => &mut self.theta_prop,
            ControlId::Elevator => &mut self.delta_e,
            ControlId::Rudder => &mut self.delta_r,
            ControlId::Pitch => &mut self.pitch,
            ControlId::Roll => &mut self.roll,
        };
        *slot = value;
    }

    pub fn with(mut self, id: ControlId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    /// Controls outside their tabulated range. Closed intervals; attitudes are
    /// not checked.
    pub fn clamp_check(&self) -> Vec<Violation> {
        ControlId::ALL
            .iter()
            .copied()
            .filter(|id| id.is_control())
            .filter_map(|id| {
                let value = self.get(id);
                let (lo, hi) = id.bounds();
                (!(lo..=hi).contains(&value)).then_some(Violation {
                    control: id,
                    value,
                    bound: (lo, hi),
                })
            })
            .collect()
    }

    pub fn upper_rotor(&self) -> RotorPitch {
        RotorPitch {
            collective: self.theta0 + self.theta_diff,
            lateral: self.theta1c + self.theta1c_diff,
            longitudinal: self.theta1s + self.theta1s_diff,
        }
    }

    pub fn lower_rotor(&self) -> RotorPitch {
        RotorPitch {
            collective: self.theta0 - self.theta_diff,
            lateral: self.theta1c - self.theta1c_diff,
            longitudinal: self.theta1s - self.theta1s_diff,
        }
    }

    /// Inverse of [`upper_rotor`](Self::upper_rotor)/[`lower_rotor`](Self::lower_rotor):
    /// rebuilds the mean/differential pairs, leaving the other fields untouched.
    pub fn with_rotor_pitches(mut self, upper: RotorPitch, lower: RotorPitch) -> Self {
        self.theta0 = 0.5 * (upper.collective + lower.collective);
        self.theta_diff = 0.5 * (upper.collective - lower.collective);
        self.theta1c = 0.5 * (upper.lateral + lower.lateral);
        self.theta1c_diff = 0.5 * (upper.lateral - lower.lateral);
        self.theta1s = 0.5 * (upper.longitudinal + lower.longitudinal);
        self.theta1s_diff = 0.5 * (upper.longitudinal - lower.longitudinal);
        self
    }
}

/// Straight and level flight at airspeed `speed` along the earth x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlightCondition {
    pub speed: f64,
    pub air_density: f64,
}

pub const MAX_SPEED: f64 = 100.0;

impl FlightCondition {
    pub fn new(speed: f64, air_density: f64) -> Result<Self> {
        if !(0.0..=MAX_SPEED).contains(&speed) {
            return Err(TrimError::Validation {
                field: "airspeed".into(),
                value: speed,
                bound: format!("[0, {MAX_SPEED}] m/s"),
            });
        }
        if !(air_density > 0.0) {
            return Err(TrimError::Validation {
                field: "air_density".into(),
                value: air_density,
                bound: "> 0".into(),
            });
        }
        Ok(Self { speed, air_density })
    }

    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.air_density * self.speed * self.speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_is_admissible() {
        assert!(ControlVector::default().clamp_check().is_empty());
    }

    #[test]
    fn propeller_pitch_above_range() {
        let v = ControlVector::default().with(ControlId::PropellerPitch, 75.0).clamp_check();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].control, ControlId::PropellerPitch);
        assert_eq!(v[0].value, 75.0);
        assert_eq!(v[0].bound, (0.0, 70.0));
    }

    #[test]
    fn elevator_bound_is_inclusive() {
        let x = ControlVector::default().with(ControlId::Elevator, -25.0);
        assert!(x.clamp_check().is_empty());
    }

    #[test]
    fn attitude_is_not_a_control() {
        let x = ControlVector::default().with(ControlId::Pitch, 45.0);
        assert!(x.clamp_check().is_empty());
    }

    #[test]
    fn flight_condition_range() {
        assert!(FlightCondition::new(100.0, 1.225).is_ok());
        assert!(FlightCondition::new(100.5, 1.225).is_err());
        assert!(FlightCondition::new(10.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn rotor_pitch_reconstruction_round_trips(
            t0 in 0.0..20.0f64, td in -5.0..5.0f64, c in -6.0..6.0f64,
            cd in 0.0..4.5f64, s in -10.0..10.0f64, sd in -1.0..1.0f64,
        ) {
            let x = ControlVector {
                theta0: t0, theta_diff: td, theta1c: c, theta1c_diff: cd,
                theta1s: s, theta1s_diff: sd, ..Default::default()
            };
            let y = ControlVector::default().with_rotor_pitches(x.upper_rotor(), x.lower_rotor());
            for id in ControlId::ALL {
                prop_assert!((x.get(id) - y.get(id)).abs() < 1e-12);
            }
        }
    }
}
