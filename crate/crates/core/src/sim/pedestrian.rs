use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scenario::{Lane, Pedestrian};
use crate::geometry::{Rect, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PedParams {
    /// Standard deviation of the per-step heading perturbation, radians.
    pub heading_noise: f64,
    /// Pedestrians stop while the robot is this close ahead of them, meters.
    /// Zero disables yielding.
    pub yield_distance: f64,
    /// Half-width of the cone ahead of a pedestrian in which it yields, degrees.
    pub yield_half_angle_deg: f64,
}

impl Default for PedParams {
    fn default() -> Self {
        Self {
            heading_noise: 0.1,
            yield_distance: 0.5,
            yield_half_angle_deg: 60.0,
        }
    }
}

impl PedParams {
    /// Whether a pedestrian at `position` walking along `heading` gives way to
    /// a robot at `robot`.
    pub fn yields(&self, position: Vec2, heading: Vec2, robot: Vec2) -> bool {
        let to_robot = robot - position;
        let d = to_robot.magnitude();
        if d > self.yield_distance || self.yield_distance <= 0.0 {
            return false;
        }
        if d == 0.0 {
            return true;
        }
        to_robot.dot(heading) / d >= self.yield_half_angle_deg.to_radians().cos()
    }
}

/// Advance one pedestrian by `dt` seconds.
///
/// The pedestrian walks at lane speed along its heading, perturbed by a fresh
/// Gaussian angle each step, and stands still for the step when it yields to
/// the robot. On leaving `bounds` it re-enters at the upstream edge of its
/// lane. Exactly one normal deviate is drawn per call.
pub fn ped_step<R: Rng + ?Sized>(
    ped: &Pedestrian,
    lane: &Lane,
    robot: Vec2,
    bounds: &Rect,
    dt: f64,
    params: &PedParams,
    rng: &mut R,
) -> Pedestrian {
    debug_assert!(dt > 0.0);
    let noise: f64 = rng.sample::<f64, _>(StandardNormal) * params.heading_noise;
    let mut next = *ped;
    if params.yields(ped.position, ped.heading, robot) {
        next.velocity = Vec2::ZERO;
        return next;
    }
    next.velocity = ped.heading.rotated(noise) * lane.speed;
    next.position = ped.position + next.velocity * dt;
    if !bounds.contains(next.position) {
        next.position = lane.entry_point(next.position, ped.heading);
    }
    next
}
