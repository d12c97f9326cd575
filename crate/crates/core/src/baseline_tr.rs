//! Trajectory-rollout local planner, the comparison baseline.
//!
//! Each control step forward-simulates a fixed set of (speed, turn-rate)
//! commands under unicycle kinematics, predicts every observed pedestrian at
//! constant velocity over the same horizon, and picks the cheapest command.
//! Any rollout that comes within `collision_radius` of a predicted pedestrian
//! is rejected; when every command is rejected the robot stops. Pedestrians
//! are plain moving obstacles here, which is what makes the planner freeze in
//! dense crowds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfield::PedObservation;
use crate::geometry::Vec2;

/// Velocity command for a unicycle robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    /// Forward speed, m/s.
    pub speed: f64,
    /// Turn rate, rad/s.
    pub turn_rate: f64,
}

impl Command {
    pub const STOP: Command = Command {
        speed: 0.0,
        turn_rate: 0.0,
    };

    pub const fn new(speed: f64, turn_rate: f64) -> Self {
        Self { speed, turn_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    /// Heading, radians from +x.
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading }
    }

    /// Pose after driving `cmd` for `dt` seconds along an exact arc.
    pub fn integrate(self, cmd: Command, dt: f64) -> Pose {
        let Pose { position, heading } = self;
        let dtheta = cmd.turn_rate * dt;
        let delta = if dtheta.abs() < 1e-12 {
            Vec2::from_angle(heading) * (cmd.speed * dt)
        } else {
            let r = cmd.speed / cmd.turn_rate;
            Vec2::new(
                r * ((heading + dtheta).sin() - heading.sin()),
                -r * ((heading + dtheta).cos() - heading.cos()),
            )
        };
        Pose::new(position + delta, heading + dtheta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutParams {
    pub candidates: Vec<Command>,
    /// Lookahead, seconds.
    pub horizon: f64,
    /// Rollout integration step, seconds.
    pub sim_dt: f64,
    pub goal_weight: f64,
    pub clearance_weight: f64,
    /// Clearances above this many meters earn no extra credit.
    pub clearance_cap: f64,
    /// Rollouts passing closer than this to a predicted pedestrian are rejected, meters.
    pub collision_radius: f64,
}

impl Default for RolloutParams {
    fn default() -> Self {
        Self {
            candidates: default_candidates(),
            horizon: 2.0,
            sim_dt: 0.1,
            goal_weight: 1.0,
            clearance_weight: 0.3,
            clearance_cap: 2.0,
            collision_radius: 0.4,
        }
    }
}

impl RolloutParams {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidParameter("candidate set is empty".into()));
        }
        for (name, v) in [
            ("horizon", self.horizon),
            ("sim_dt", self.sim_dt),
            ("collision_radius", self.collision_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.sim_dt).round().max(1.0) as usize
    }
}

/// Speeds {0, 0.5, 1.0} m/s, fastest first, crossed with turn rates
/// {0, ±45, ±90} deg/s, straight first.
pub fn default_candidates() -> Vec<Command> {
    let speeds = [1.0, 0.5, 0.0];
    let turns = [0.0_f64, 45.0, -45.0, 90.0, -90.0].map(f64::to_radians);
    speeds
        .iter()
        .flat_map(|&s| turns.iter().map(move |&w| Command::new(s, w)))
        .collect()
}

/// Poses at `0, dt, ..., horizon` under a constant command.
pub fn rollout(state: Pose, cmd: Command, params: &RolloutParams) -> Vec<Pose> {
    let mut out = Vec::with_capacity(params.steps() + 1);
    out.push(state);
    for k in 1..=params.steps() {
        out.push(state.integrate(cmd, k as f64 * params.sim_dt));
    }
    out
}

/// Constant-velocity predictions, indexed `[timestep][pedestrian]`, aligned
/// with the poses of [`rollout`].
pub fn predict_obstacles(peds: &[PedObservation], params: &RolloutParams) -> Vec<Vec<Vec2>> {
    (0..=params.steps())
        .map(|k| {
            let t = k as f64 * params.sim_dt;
            peds.iter().map(|p| p.position + p.velocity * t).collect()
        })
        .collect()
}

/// Cost of a rollout; lower is better, `+inf` means rejected.
///
/// `goal_weight * d_goal - clearance_weight * min(clearance, cap)`, where
/// `d_goal` is the closest any future pose gets to the goal (the endpoint
/// distance unless the goal lies inside the horizon) and `clearance` is the smallest
/// robot–pedestrian distance over the future poses.
pub fn score(traj: &[Pose], obstacles: &[Vec<Vec2>], goal: Vec2, params: &RolloutParams) -> f64 {
    let mut clearance = params.clearance_cap;
    for (k, pose) in traj.iter().enumerate().skip(1) {
        for &o in obstacles.get(k).map(Vec::as_slice).unwrap_or(&[]) {
            let d = pose.position.distance(o);
            if d < params.collision_radius {
                return f64::INFINITY;
            }
            clearance = clearance.min(d);
        }
    }
    let to_goal = traj
        .iter()
        .skip(1)
        .map(|p| p.position.distance(goal))
        .fold(f64::INFINITY, f64::min);
    params.goal_weight * to_goal - params.clearance_weight * clearance
}

/// Best command for this control step. Ties go to the earlier candidate; if
/// every candidate is rejected the robot stops.
pub fn tr_step(
    state: Pose,
    peds: &[PedObservation],
    goal: Vec2,
    params: &RolloutParams,
) -> Command {
    let obstacles = predict_obstacles(peds, params);
    let mut best = (f64::INFINITY, Command::STOP);
    for &cmd in &params.candidates {
        let s = score(&rollout(state, cmd, params), &obstacles, goal, params);
        if s < best.0 {
            best = (s, cmd);
        }
    }
    best.1
}
