use crate::error::{Error, Result};
use crate::sim::{Aircraft, Command};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Decelerate = 0,
    MaintainSpeed = 1,
    Accelerate = 2,
    Descend = 3,
    MaintainAltitude = 4,
    Climb = 5,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Decelerate,
        Action::MaintainSpeed,
        Action::Accelerate,
        Action::Descend,
        Action::MaintainAltitude,
        Action::Climb,
    ];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or(Error::InvalidAction(i))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_maintain(self) -> bool {
        matches!(self, Action::MaintainSpeed | Action::MaintainAltitude)
    }

    pub fn is_speed_change(self) -> bool {
        matches!(self, Action::Decelerate | Action::Accelerate)
    }

    pub fn is_vertical_change(self) -> bool {
        matches!(self, Action::Descend | Action::Climb)
    }
}

/// Index of the lane nearest to `z_ft`.
pub fn current_lane(lanes_ft: &[f64], z_ft: f64) -> usize {
    let mut best = 0;
    for (i, l) in lanes_ft.iter().enumerate() {
        if (l - z_ft).abs() < (lanes_ft[best] - z_ft).abs() {
            best = i;
        }
    }
    best
}

/// Simulator command for `action`. Speed actions keep any vertical manoeuvre
/// in progress; climb/descend head for the adjacent lane and stop there;
/// maintain-altitude stops vertical motion. Climbing from the top lane or
/// descending from the bottom lane has no effect.
pub fn apply_action(aircraft: &Aircraft, lanes_ft: &[f64], action: usize) -> Result<Command> {
    let action = Action::from_index(action)?;
    let env = &aircraft.envelope;
    let mut cmd = aircraft.command;
    match action {
        Action::Decelerate => cmd.accel_kt_s = -env.max_accel_kt_s,
        Action::MaintainSpeed => cmd.accel_kt_s = 0.0,
        Action::Accelerate => cmd.accel_kt_s = env.max_accel_kt_s,
        Action::MaintainAltitude => {
            cmd = Command {
                accel_kt_s: 0.0,
                vertical_fpm: 0.0,
                target_alt_ft: None,
            };
        }
        Action::Climb | Action::Descend => {
            let lane = current_lane(lanes_ft, aircraft.z_ft);
            let target = if action == Action::Climb {
                lanes_ft.get(lane + 1).copied()
            } else {
                lane.checked_sub(1).map(|l| lanes_ft[l])
            };
            cmd = match target {
                Some(t) => Command {
                    accel_kt_s: 0.0,
                    vertical_fpm: if action == Action::Climb {
                        env.max_vertical_fpm
                    } else {
                        -env.max_vertical_fpm
                    },
                    target_alt_ft: Some(t),
                },
                None => Command::default(),
            };
        }
    }
    Ok(cmd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::network::DEFAULT_LANES_FT;
    use crate::sim::{AircraftType, FlightDemand};
    use std::sync::Arc;

    fn at(z_ft: f64, speed_kt: f64) -> Aircraft {
        let d = FlightDemand {
            id: 0,
            departure_s: 0.0,
            origin: 0,
            destination: 1,
            aircraft_type: AircraftType::Rotorcraft,
            comm: true,
            equipped: true,
            altitude_offset_ft: 0.0,
            lane: 0,
            cruise_kt: speed_kt,
        };
        let mut a = Aircraft::spawn(&d, Arc::new(vec![(0.0, 0.0), (0.0, 50_000.0)]), &DEFAULT_LANES_FT, 0.0);
        a.z_ft = z_ft;
        a
    }

    #[test]
    fn climb_stops_at_next_lane() {
        let mut a = at(700.0, 40.0);
        a.command = apply_action(&a, &DEFAULT_LANES_FT, 5).unwrap();
        assert_eq!(a.command.target_alt_ft, Some(1000.0));
        for _ in 0..60 {
            a.integrate(1.0);
        }
        assert_eq!(a.z_ft, 1000.0);
        assert_eq!(a.command.vertical_fpm, 0.0);
    }

    #[test]
    fn climb_at_top_lane_has_no_effect() {
        let a = at(1600.0, 40.0);
        assert_eq!(apply_action(&a, &DEFAULT_LANES_FT, 5).unwrap(), Command::default());
        let b = at(400.0, 40.0);
        assert_eq!(apply_action(&b, &DEFAULT_LANES_FT, 3).unwrap(), Command::default());
    }

    #[test]
    fn maintain_both_is_zero_command() {
        let mut a = at(1000.0, 40.0);
        a.command = apply_action(&a, &DEFAULT_LANES_FT, 2).unwrap();
        a.command = apply_action(&a, &DEFAULT_LANES_FT, 1).unwrap();
        let cmd = apply_action(&a, &DEFAULT_LANES_FT, 4).unwrap();
        assert_eq!(cmd, Command::default());
    }

    #[test]
    fn speed_action_keeps_latched_climb() {
        let mut a = at(700.0, 40.0);
        a.command = apply_action(&a, &DEFAULT_LANES_FT, 5).unwrap();
        let cmd = apply_action(&a, &DEFAULT_LANES_FT, 0).unwrap();
        assert_eq!(cmd.accel_kt_s, -2.0);
        assert_eq!(cmd.target_alt_ft, Some(1000.0));
        assert_eq!(cmd.vertical_fpm, 500.0);
    }

    #[test]
    fn maintain_altitude_cancels_climb() {
        let mut a = at(700.0, 40.0);
        a.command = apply_action(&a, &DEFAULT_LANES_FT, 5).unwrap();
        assert_eq!(apply_action(&a, &DEFAULT_LANES_FT, 4).unwrap(), Command::default());
    }

    #[test]
    fn offset_altitude_uses_nearest_lane() {
        let a = at(680.0, 40.0);
        assert_eq!(
            apply_action(&a, &DEFAULT_LANES_FT, 5).unwrap().target_alt_ft,
            Some(1000.0)
        );
        assert_eq!(
            apply_action(&a, &DEFAULT_LANES_FT, 3).unwrap().target_alt_ft,
            Some(400.0)
        );
    }

    #[test]
    fn invalid_index_is_rejected() {
        let a = at(700.0, 40.0);
        assert!(matches!(
            apply_action(&a, &DEFAULT_LANES_FT, 6),
            Err(Error::InvalidAction(6))
        ));
    }
}
