use std::f64::consts::PI;

use super::{INTRUDER_DIM, N_ACTIONS, N_WPT, OWNSHIP_DIM};
use crate::sacd::Observation;
use crate::sim::units::{heading_of, wrap_angle};
use crate::sim::{Kinematics, RawObservation};

/// Feature scales applied when building state vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub angle: f64,
    pub altitude_ft: f64,
    pub speed_kt: f64,
    pub accel_kt_s: f64,
    pub vertical_fpm: f64,
    pub distance_m: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            angle: PI,
            altitude_ft: 1600.0,
            speed_kt: 65.0,
            accel_kt_s: 2.0,
            vertical_fpm: 500.0,
            distance_m: 1000.0,
        }
    }
}

impl Normalization {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("norm.angle", self.angle),
            ("norm.altitude_ft", self.altitude_ft),
            ("norm.speed_kt", self.speed_kt),
            ("norm.accel_kt_s", self.accel_kt_s),
            ("norm.vertical_fpm", self.vertical_fpm),
            ("norm.distance_m", self.distance_m),
        ]
    }
}

fn one_hot(out: &mut Vec<f64>, action: u8) {
    for i in 0..N_ACTIONS {
        out.push(if i == action as usize { 1.0 } else { 0.0 });
    }
}

/// Offsets of the next `N_WPT` waypoints from (x, y), padded with the last.
fn waypoint_offsets(out: &mut Vec<f64>, waypoints: &[(f64, f64)], x: f64, y: f64, scale: f64) {
    let last = waypoints.last().copied().unwrap_or((x, y));
    for j in 0..N_WPT {
        let (wx, wy) = waypoints.get(j).copied().unwrap_or(last);
        out.push((wx - x) / scale);
        out.push((wy - y) / scale);
    }
}

fn kinematic_features(out: &mut Vec<f64>, k: &Kinematics, n: &Normalization) {
    let (gs_e, gs_n) = k.ground_speed();
    out.push(k.accel_kt_s / n.accel_kt_s);
    out.push(0.0);
    out.push(k.speed_kt / n.speed_kt);
    out.push(k.vertical_fpm / n.vertical_fpm);
    out.push(gs_e / n.speed_kt);
    out.push(gs_n / n.speed_kt);
}

/// Ownship vector: ψ, z, v̇ₓ, v̇_z, vₓ, v_z, gs_East, gs_North, time fraction,
/// one-hot previous action, waypoint offsets.
pub fn build_ownship_state(own: &Kinematics, time_fraction: f64, n: &Normalization) -> Vec<f64> {
    let mut out = Vec::with_capacity(OWNSHIP_DIM);
    out.push(wrap_angle(own.heading) / n.angle);
    out.push(own.z_ft / n.altitude_ft);
    kinematic_features(&mut out, own, n);
    out.push(time_fraction);
    one_hot(&mut out, own.prev_action);
    waypoint_offsets(&mut out, &own.waypoints, own.x, own.y, n.distance_m);
    out
}

/// Intruder vectors relative to the ownship: ψ_rel, z_rel, v̇ₓ, v̇_z, vₓ, v_z,
/// gs_East, gs_North, bearing, horizontal distance, one-hot previous action,
/// intruder waypoints relative to the ownship position.
pub fn build_intruder_states(own: &Kinematics, intruders: &[Kinematics], n: &Normalization) -> Vec<Vec<f64>> {
    intruders
        .iter()
        .map(|h| {
            let (dx, dy) = (h.x - own.x, h.y - own.y);
            let d = dx.hypot(dy);
            let bearing = if d > 0.0 {
                wrap_angle(heading_of(dx, dy) - own.heading)
            } else {
                0.0
            };
            let mut out = Vec::with_capacity(INTRUDER_DIM);
            out.push(wrap_angle(h.heading - own.heading) / n.angle);
            out.push((h.z_ft - own.z_ft) / n.altitude_ft);
            kinematic_features(&mut out, h, n);
            out.push(bearing / n.angle);
            out.push(d / n.distance_m);
            one_hot(&mut out, h.prev_action);
            waypoint_offsets(&mut out, &h.waypoints, own.x, own.y, n.distance_m);
            out
        })
        .collect()
}

/// Full single-precision observation for the learner.
pub fn build_observation(raw: &RawObservation, time_fraction: f64, n: &Normalization) -> Observation {
    let to32 = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
    Observation {
        ownship: to32(build_ownship_state(&raw.ownship, time_fraction, n)),
        intruders: build_intruder_states(&raw.ownship, &raw.intruders, n)
            .into_iter()
            .map(to32)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kin(x: f64, y: f64, z: f64, heading: f64, speed: f64, wpts: Vec<(f64, f64)>) -> Kinematics {
        Kinematics {
            id: 0,
            x,
            y,
            z_ft: z,
            heading,
            speed_kt: speed,
            accel_kt_s: 0.0,
            vertical_fpm: 0.0,
            prev_action: 1,
            max_accel_kt_s: 2.0,
            waypoints: wpts,
        }
    }

    #[test]
    fn dimensions() {
        let n = Normalization::default();
        let own = kin(0.0, 0.0, 700.0, 0.0, 40.0, vec![(0.0, 100.0)]);
        assert_eq!(build_ownship_state(&own, 0.5, &n).len(), OWNSHIP_DIM);
        let h = build_intruder_states(&own, &[own.clone()], &n);
        assert_eq!(h[0].len(), INTRUDER_DIM);
    }

    #[test]
    fn hover_at_waypoint_has_zero_offsets() {
        let n = Normalization::default();
        let own = kin(10.0, 20.0, 700.0, 0.0, 0.0, vec![(10.0, 20.0)]);
        let s = build_ownship_state(&own, 0.0, &n);
        assert!(s[15..].iter().all(|&v| v == 0.0));
        assert_eq!(&s[9..15], &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn short_route_is_padded_with_final_waypoint() {
        let n = Normalization::default();
        let own = kin(0.0, 0.0, 700.0, 0.0, 40.0, vec![(0.0, 500.0), (300.0, 500.0)]);
        let s = build_ownship_state(&own, 0.0, &n);
        assert_eq!(&s[15..19], &[0.0, 0.5, 0.3, 0.5]);
        for j in 2..N_WPT {
            assert_eq!(&s[15 + 2 * j..17 + 2 * j], &[0.3, 0.5]);
        }
    }

    #[test]
    fn intruder_ahead_at_same_altitude() {
        let n = Normalization::default();
        let own = kin(0.0, 0.0, 700.0, 0.3, 40.0, vec![]);
        let ahead = kin(300.0 * 0.3f64.sin(), 300.0 * 0.3f64.cos(), 700.0, 0.3, 40.0, vec![]);
        let h = &build_intruder_states(&own, &[ahead], &n)[0];
        assert!(h[8].abs() < 1e-12);
        assert_eq!(h[1], 0.0);
        assert!((h[9] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn colocated_intruder_is_degenerate_but_finite() {
        let n = Normalization::default();
        let own = kin(5.0, 5.0, 700.0, 1.0, 40.0, vec![(5.0, 5.0)]);
        let h = &build_intruder_states(&own, &[own.clone()], &n)[0];
        assert_eq!(h[9], 0.0);
        assert_eq!(h[0], 0.0);
        assert!(h[16..].iter().all(|&v| v == 0.0));
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn angles_are_wrapped() {
        let n = Normalization::default();
        let own = kin(0.0, 0.0, 700.0, 3.0, 40.0, vec![]);
        let other = kin(0.0, 100.0, 700.0, -3.0, 40.0, vec![]);
        let h = &build_intruder_states(&own, &[other], &n)[0];
        assert!(h[0].abs() <= 1.0 && h[8].abs() <= 1.0);
    }
}
