//! The Active-Langevin force terms, evaluated pointwise.
//!
//! Each pedestrian (or grid location) feels
//!
//! ```text
//! F_total = F_friction + F_influence + F_self + F_random
//!         = -mu * v_i + alpha * (v_rel - v_i) + xi * v_i + 0
//! ```
//!
//! where `mu` is a crowd friction coefficient built from neighbor distances,
//! `v_rel` aggregates the velocities of neighbors within the influence radius,
//! and `alpha = |v_rel| / |v_avg|` relates that aggregate to the average
//! velocity of the whole observed crowd. The random force is fixed at zero.
//! The sign of the influence term is selectable, see [`InfluenceSign`].

use super::{FlowParams, InfluenceSign, RelVelocityMode, TrackFrame};
use crate::geometry::Vec2;

/// Below this average-velocity magnitude (m/s) the interaction coefficient is 0.
pub const ALPHA_EPSILON: f64 = 1e-9;

/// Friction coefficient of a location given the positions of its neighbors.
///
/// `mu = 1 - sum_j |x_i - x_j| / (n * max_j |x_i - x_j|)`. An empty neighbor
/// list, or neighbors that all coincide with `origin`, give 0.
pub fn neighbor_friction(origin: Vec2, neighbor_positions: &[Vec2]) -> f64 {
    if neighbor_positions.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for &p in neighbor_positions {
        let d = origin.distance(p);
        sum += d;
        max = max.max(d);
    }
    if max <= 0.0 {
        return 0.0;
    }
    let mu = 1.0 - sum / (neighbor_positions.len() as f64 * max);
    // Equidistant neighbors can round a hair below zero.
    mu.max(0.0)
}

/// Component-wise mean velocity of every observation in the frame.
///
/// Summation runs in id order so the result does not depend on the order the
/// observations were listed in.
pub fn average_velocity(frame: &TrackFrame) -> Vec2 {
    if frame.observations.is_empty() {
        return Vec2::ZERO;
    }
    let mut obs: Vec<_> = frame.observations.iter().collect();
    obs.sort_by_key(|o| o.id);
    let sum: Vec2 = obs.iter().map(|o| o.velocity).sum();
    sum / obs.len() as f64
}

/// Aggregate velocity of the neighbors lying within `h` of `center`.
///
/// Neighbors are `(position, velocity)` pairs. A neighbor exactly `h` away
/// is included. No qualifying neighbor yields the zero vector.
pub fn relative_velocity(
    center: Vec2,
    neighbors: &[(Vec2, Vec2)],
    h: f64,
    mode: RelVelocityMode,
) -> Vec2 {
    let mut sum = Vec2::ZERO;
    let mut count = 0usize;
    for &(p, v) in neighbors {
        if center.distance(p) <= h {
            sum += v;
            count += 1;
        }
    }
    match (mode, count) {
        (_, 0) => Vec2::ZERO,
        (RelVelocityMode::Sum, _) => sum,
        (RelVelocityMode::Mean, n) => sum / n as f64,
    }
}

/// `alpha = |v_rel| / |v_avg|`, or 0 when the average velocity vanishes.
pub fn interaction_coefficient(v_rel: Vec2, v_avg: Vec2) -> f64 {
    let avg = v_avg.magnitude();
    if avg < ALPHA_EPSILON {
        0.0
    } else {
        v_rel.magnitude() / avg
    }
}

/// Total Active-Langevin force on a location with velocity `v_i`.
pub fn active_langevin_force(
    v_i: Vec2,
    v_rel: Vec2,
    mu: f64,
    alpha: f64,
    params: &FlowParams,
) -> Vec2 {
    let friction = -mu * v_i;
    let influence = match params.influence_sign {
        InfluenceSign::TowardNeighbors => alpha * (v_rel - v_i),
        InfluenceSign::AsWritten => alpha * (v_i - v_rel),
    };
    let self_propelling = params.xi * v_i;
    friction + influence + self_propelling + params.f_random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::PedObservation;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn friction_hand_values() {
        assert_eq!(neighbor_friction(v(0., 0.), &[v(1., 0.), v(2., 0.)]), 0.25);
        assert_eq!(neighbor_friction(v(0., 0.), &[v(3.7, 0.)]), 0.0);
        let ring: Vec<_> = (0..7)
            .map(|k| Vec2::from_angle(k as f64 * 0.9) * 1.3)
            .collect();
        assert!(neighbor_friction(v(0., 0.), &ring).abs() < 1e-15);
        assert_eq!(neighbor_friction(v(0., 0.), &[]), 0.0);
        assert_eq!(neighbor_friction(v(1., 1.), &[v(1., 1.), v(1., 1.)]), 0.0);
    }

    fn frame(vels: &[Vec2]) -> TrackFrame {
        TrackFrame {
            t: 0.0,
            observations: vels
                .iter()
                .enumerate()
                .map(|(k, &vel)| PedObservation {
                    id: k as u64,
                    position: Vec2::ZERO,
                    velocity: vel,
                })
                .collect(),
        }
    }

    #[test]
    fn average_velocity_examples() {
        assert_eq!(average_velocity(&frame(&[v(1.2, 0.); 4])), v(1.2, 0.));
        assert_eq!(
            average_velocity(&frame(&[v(1., 0.), v(-1., 0.)])),
            v(0., 0.)
        );
        assert_eq!(
            average_velocity(&frame(&[v(1., 0.), v(0., 1.), v(2., -1.)])),
            v(1., 0.)
        );
        assert_eq!(average_velocity(&frame(&[])), Vec2::ZERO);
    }

    #[test]
    fn relative_velocity_examples() {
        let c = v(0., 0.);
        let nb = [(v(1., 0.), v(1., 0.)), (v(0., 3.), v(5., 5.))];
        assert_eq!(
            relative_velocity(c, &nb, 2.0, RelVelocityMode::Mean),
            v(1., 0.)
        );
        assert_eq!(
            relative_velocity(c, &nb, 0.5, RelVelocityMode::Mean),
            Vec2::ZERO
        );
        let two = [(v(1., 0.), v(1., 0.)), (v(-1., 0.), v(1., 0.))];
        assert_eq!(
            relative_velocity(c, &two, 2.0, RelVelocityMode::Sum),
            v(2., 0.)
        );
        assert_eq!(
            relative_velocity(c, &two, 2.0, RelVelocityMode::Mean),
            v(1., 0.)
        );
        // boundary is inclusive
        assert_eq!(
            relative_velocity(c, &[(v(2., 0.), v(0., 1.))], 2.0, RelVelocityMode::Sum),
            v(0., 1.)
        );
    }

    #[test]
    fn interaction_coefficient_examples() {
        assert_eq!(interaction_coefficient(v(1., 0.), v(2., 0.)), 0.5);
        assert_eq!(interaction_coefficient(v(0.3, 0.4), v(0.3, 0.4)), 1.0);
        assert_eq!(interaction_coefficient(v(1., 0.), Vec2::ZERO), 0.0);
    }

    #[test]
    fn force_examples() {
        let toward = FlowParams::default();
        let literal = FlowParams {
            influence_sign: InfluenceSign::AsWritten,
            ..FlowParams::default()
        };
        assert_eq!(
            active_langevin_force(Vec2::ZERO, Vec2::ZERO, 0.4, 2.0, &toward),
            Vec2::ZERO
        );
        let lane = v(1.2, -0.4);
        for p in [&toward, &literal] {
            assert_eq!(active_langevin_force(lane, lane, 0.0, 1.7, p), lane * 0.5);
        }
        assert_eq!(
            active_langevin_force(Vec2::ZERO, v(1., 0.), 0.0, 1.0, &toward),
            v(1., 0.)
        );
        assert_eq!(
            active_langevin_force(Vec2::ZERO, v(1., 0.), 0.0, 1.0, &literal),
            v(-1., 0.)
        );
    }
}
