use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pedestrian::{ped_step, PedParams};
use super::scenario::Scenario;
use crate::baseline_tr::{tr_step, Command, Pose, RolloutParams};
use crate::error::{Error, Result};
use crate::flowfield::{FlowField, FlowParams, GridSpec, PedObservation, TrackFrame, TrackLog};
use crate::geometry::Vec2;
use crate::planner::{CostParams, Replanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Fipp,
    Tr,
}

impl PlannerKind {
    pub const BOTH: [PlannerKind; 2] = [PlannerKind::Fipp, PlannerKind::Tr];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Fipp => "fipp",
            PlannerKind::Tr => "tr",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fipp" => Ok(PlannerKind::Fipp),
            "tr" => Ok(PlannerKind::Tr),
            other => Err(Error::InvalidParameter(format!(
                "unknown planner `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reached,
    Timeout,
    Frozen,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Reached => "reached",
            Outcome::Timeout => "timeout",
            Outcome::Frozen => "frozen",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    /// Radians from +x.
    pub heading: f64,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: f64,
    pub robot: RobotState,
    pub pedestrians: Vec<PedObservation>,
    pub done: bool,
}

impl WorldState {
    /// Distance from the robot to the nearest pedestrian, `None` without pedestrians.
    pub fn min_distance(&self) -> Option<f64> {
        self.pedestrians
            .iter()
            .map(|p| p.position.distance(self.robot.position))
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeParams {
    /// Simulation step, seconds.
    pub sim_dt: f64,
    /// Episode time limit, seconds.
    pub max_t: f64,
    /// Robot speed cap, m/s.
    pub v_max: f64,
    /// The goal counts as reached within this distance, meters.
    pub goal_tolerance: f64,
    /// An episode ends frozen after the robot is commanded to stand still
    /// this long without interruption, seconds.
    pub freeze_time: f64,
    /// Flow-field cell size, meters.
    pub cell_size: f64,
    /// Simulation steps between scheduled replans.
    pub replan_period: usize,
    /// Unset, the flow-informed planner treats pedestrians through the flow
    /// cost alone. Set, it also avoids cells whose center lies this close to a
    /// pedestrian, falling back to avoiding only occupied cells when that
    /// leaves no path, meters.
    pub ped_inflation: Option<f64>,
    pub flow: FlowParams,
    pub cost: CostParams,
    pub rollout: RolloutParams,
    pub peds: PedParams,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            sim_dt: 0.1,
            max_t: 120.0,
            v_max: 1.0,
            goal_tolerance: 0.25,
            freeze_time: 10.0,
            cell_size: 0.5,
            replan_period: 5,
            ped_inflation: None,
            flow: FlowParams::default(),
            cost: CostParams::default(),
            rollout: RolloutParams::default(),
            peds: PedParams::default(),
        }
    }
}

impl EpisodeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sim_dt", self.sim_dt),
            ("max_t", self.max_t),
            ("v_max", self.v_max),
            ("cell_size", self.cell_size),
            ("freeze_time", self.freeze_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if let Some(r) = self.ped_inflation {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "ped_inflation must be >= 0, got {r}"
                )));
            }
        }
        self.flow.validate()?;
        self.cost.validate()?;
        self.rollout.validate()
    }

    fn steps(&self, seconds: f64) -> usize {
        (seconds / self.sim_dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub scenario: Scenario,
    pub planner: PlannerKind,
    pub params: EpisodeParams,
    pub outcome: Outcome,
    /// Last planner error, if any step failed to produce a plan.
    pub error: Option<String>,
    /// One state per step, starting at `t = 0`.
    pub records: Vec<WorldState>,
}

impl EpisodeLog {
    /// Time at which the robot reached its goal.
    pub fn reached_at(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Reached => self.records.last().map(|r| r.t),
            _ => None,
        }
    }

    /// The pedestrian observations of every step as a track log.
    pub fn track_log(&self) -> TrackLog {
        TrackLog {
            frames: self
                .records
                .iter()
                .map(|r| TrackFrame {
                    t: r.t,
                    observations: r.pedestrians.clone(),
                })
                .collect(),
        }
    }
}

// One driver per episode; the size gap costs nothing.
#[allow(clippy::large_enum_variant)]
enum Driver {
    Fipp {
        field: FlowField,
        replanner: Replanner,
    },
    Tr,
}

/// Run one episode of `scenario` under `planner`.
///
/// Planner failures never abort the episode: the robot stands still for that
/// step and the message is kept in [`EpisodeLog::error`].
pub fn run_episode(
    scenario: &Scenario,
    planner: PlannerKind,
    params: &EpisodeParams,
) -> Result<EpisodeLog> {
    params.validate()?;
    scenario.validate()?;
    let dt = params.sim_dt;
    let goal = scenario.robot_goal;
    let mut rng = pedestrian_rng(scenario.seed);

    let mut driver = match planner {
        PlannerKind::Fipp => {
            let spec = GridSpec::covering(scenario.bounds, params.cell_size)?;
            let mut replanner = Replanner::new(params.cost, params.replan_period);
            replanner.goal_tolerance = params.goal_tolerance;
            Driver::Fipp {
                field: FlowField::new(spec),
                replanner,
            }
        }
        PlannerKind::Tr => Driver::Tr,
    };

    let mut peds = scenario.pedestrians.clone();
    let mut robot = RobotState {
        position: scenario.robot_start,
        heading: (goal - scenario.robot_start).angle(),
        velocity: Vec2::ZERO,
    };
    let observe =
        |peds: &[super::Pedestrian]| peds.iter().map(|p| p.observation()).collect::<Vec<_>>();
    let mut records = vec![WorldState {
        t: 0.0,
        robot,
        pedestrians: observe(&peds),
        done: false,
    }];
    let max_steps = params.steps(params.max_t);
    let freeze_steps = params.steps(params.freeze_time).max(1);
    let mut still = 0usize;
    let mut error = None;

    let mut step = 0usize;
    let outcome = loop {
        if robot.position.distance(goal) <= params.goal_tolerance {
            break Outcome::Reached;
        }
        if step >= max_steps {
            break Outcome::Timeout;
        }
        if still >= freeze_steps {
            break Outcome::Frozen;
        }
        let t = step as f64 * dt;
        let observations = &records.last().expect("records start non-empty").pedestrians;

        let next = match &mut driver {
            Driver::Fipp { field, replanner } => {
                let frame = TrackFrame {
                    t,
                    observations: observations.clone(),
                };
                field.deposit_frame(&frame, &params.flow)?;
                field.update_field(&params.flow);
                let planned = match params.ped_inflation {
                    None => replanner.replan_step(field, robot.position, goal, &[]),
                    Some(r) => {
                        let inflated =
                            blocked_cells(&field.spec, observations, r, robot.position, goal);
                        replanner
                            .replan_step(field, robot.position, goal, &inflated)
                            .or_else(|_| {
                                let occupied = blocked_cells(
                                    &field.spec,
                                    observations,
                                    0.0,
                                    robot.position,
                                    goal,
                                );
                                replanner.replan_step(field, robot.position, goal, &occupied)
                            })
                    }
                };
                let target = match planned {
                    Ok(s) => s.target,
                    Err(e) => {
                        error = Some(e.to_string());
                        robot.position
                    }
                };
                holonomic_step(robot, target, params.v_max, dt)
            }
            Driver::Tr => {
                let pose = Pose::new(robot.position, robot.heading);
                let mut cmd = tr_step(pose, observations, goal, &params.rollout);
                cmd.speed = cmd.speed.clamp(0.0, params.v_max);
                unicycle_step(robot, cmd, dt)
            }
        };
        let moved = next.velocity.magnitude() > 1e-12;
        still = if moved { 0 } else { still + 1 };

        for ped in &mut peds {
            let lane = &scenario.lanes[ped.lane];
            *ped = ped_step(
                ped,
                lane,
                robot.position,
                &scenario.bounds,
                dt,
                &params.peds,
                &mut rng,
            );
        }
        robot = next;
        records.push(WorldState {
            t: (step + 1) as f64 * dt,
            robot,
            pedestrians: observe(&peds),
            done: false,
        });
        step += 1;
    };
    if let Some(last) = records.last_mut() {
        last.done = true;
    }
    Ok(EpisodeLog {
        scenario: scenario.clone(),
        planner,
        params: params.clone(),
        outcome,
        error,
        records,
    })
}

fn pedestrian_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Pedestrian tracks of `scenario` with no robot present, sampled every `dt`
/// seconds for `duration` seconds.
pub fn record_tracks(
    scenario: &Scenario,
    duration: f64,
    dt: f64,
    params: &PedParams,
) -> Result<TrackLog> {
    scenario.validate()?;
    for (name, v) in [("duration", duration), ("dt", dt)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be > 0, got {v}"
            )));
        }
    }
    let params = PedParams {
        yield_distance: 0.0,
        ..*params
    };
    let mut rng = pedestrian_rng(scenario.seed);
    let mut peds = scenario.pedestrians.clone();
    let steps = (duration / dt).round() as usize;
    let mut frames = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        if k > 0 {
            for ped in &mut peds {
                *ped = ped_step(
                    ped,
                    &scenario.lanes[ped.lane],
                    Vec2::ZERO,
                    &scenario.bounds,
                    dt,
                    &params,
                    &mut rng,
                );
            }
        }
        frames.push(TrackFrame {
            t: k as f64 * dt,
            observations: peds.iter().map(|p| p.observation()).collect(),
        });
    }
    Ok(TrackLog { frames })
}

/// Cells holding a pedestrian or with their center within `inflation` of
/// one, except the robot's and the goal's.
fn blocked_cells(
    spec: &GridSpec,
    peds: &[PedObservation],
    inflation: f64,
    robot: Vec2,
    goal: Vec2,
) -> Vec<bool> {
    let mut blocked = vec![false; spec.cell_count()];
    let reach = spec.offsets_within(inflation + spec.cell_size);
    for p in peds {
        let Some(c) = spec.cell_at(p.position) else {
            continue;
        };
        blocked[c] = true;
        for &(di, dj) in &reach {
            if let Some(n) = spec.offset(c, di, dj) {
                if spec.center_of(n).distance(p.position) <= inflation {
                    blocked[n] = true;
                }
            }
        }
    }
    for p in [robot, goal] {
        if let Some(c) = spec.cell_at(p) {
            blocked[c] = false;
        }
    }
    blocked
}

/// Move straight toward `target` at up to `v_max`, stopping on it.
fn holonomic_step(robot: RobotState, target: Vec2, v_max: f64, dt: f64) -> RobotState {
    let delta = target - robot.position;
    let dist = delta.magnitude();
    if dist < 1e-12 {
        return RobotState {
            velocity: Vec2::ZERO,
            ..robot
        };
    }
    let travel = dist.min(v_max * dt);
    let step = delta * (travel / dist);
    RobotState {
        position: robot.position + step,
        heading: delta.angle(),
        velocity: step / dt,
    }
}

fn unicycle_step(robot: RobotState, cmd: Command, dt: f64) -> RobotState {
    let next = Pose::new(robot.position, robot.heading).integrate(cmd, dt);
    let velocity = if cmd.speed > 0.0 {
        (next.position - robot.position) / dt
    } else {
        Vec2::ZERO
    };
    RobotState {
        position: next.position,
        heading: next.heading,
        velocity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::sim::{generate_scenario, ScenarioKind, LANE_SPEED};

    fn empty_world() -> Scenario {
        Scenario::empty(
            Rect::from_size(20.0, 20.0),
            Vec2::new(2.0, 3.0),
            Vec2::new(17.0, 15.0),
        )
    }

    #[test]
    fn empty_world_reaches_in_straight_line_time() {
        let s = empty_world();
        let ideal = s.robot_start.distance(s.robot_goal) / 1.0;
        for planner in PlannerKind::BOTH {
            let log = run_episode(&s, planner, &EpisodeParams::default()).unwrap();
            assert_eq!(log.outcome, Outcome::Reached, "{planner}");
            let t = log.reached_at().unwrap();
            assert!(
                (t - ideal).abs() <= 0.1 * ideal,
                "{planner}: {t} vs {ideal}"
            );
            assert!(log.error.is_none());
        }
    }

    #[test]
    fn records_are_time_ordered_and_capped() {
        let s = generate_scenario(ScenarioKind::DoubleFlow, Some(30), 5).unwrap();
        let p = EpisodeParams::default();
        for planner in PlannerKind::BOTH {
            let log = run_episode(&s, planner, &p).unwrap();
            assert!(log.records.windows(2).all(|w| w[1].t > w[0].t));
            assert_eq!(log.records.iter().filter(|r| r.done).count(), 1);
            assert!(log.records.last().unwrap().done);
            for r in &log.records {
                assert!(r.robot.velocity.magnitude() <= p.v_max + 1e-9);
                assert_eq!(r.pedestrians.len(), s.n_peds);
                assert!(r
                    .pedestrians
                    .iter()
                    .all(|o| o.velocity.magnitude() <= LANE_SPEED + 1e-9));
            }
        }
    }

    #[test]
    fn downstream_goal_follows_the_lane() {
        for seed in 1..=5 {
            let mut s = generate_scenario(ScenarioKind::SingleFlow, Some(30), seed).unwrap();
            s.robot_start = Vec2::new(3.0, 10.0);
            s.robot_goal = Vec2::new(17.0, 10.0);
            let lane = s.lanes[0].direction;
            let log = run_episode(&s, PlannerKind::Fipp, &EpisodeParams::default()).unwrap();
            let mean = log
                .records
                .iter()
                .fold(Vec2::ZERO, |acc, r| acc + r.robot.velocity);
            assert!(mean.dot(lane) > 0.0, "seed {seed}");
        }
    }

    #[test]
    fn blocking_variant_keeps_its_distance() {
        let s = generate_scenario(ScenarioKind::Wall, None, 2).unwrap();
        let p = EpisodeParams {
            ped_inflation: Some(1.0),
            max_t: 30.0,
            ..EpisodeParams::default()
        };
        let log = run_episode(&s, PlannerKind::Fipp, &p).unwrap();
        // The wall leaves no gap wide enough, so the robot falls back to
        // squeezing between occupied cells rather than stalling.
        assert_eq!(log.outcome, Outcome::Reached);
        let bad = EpisodeParams {
            ped_inflation: Some(-1.0),
            ..EpisodeParams::default()
        };
        assert!(run_episode(&s, PlannerKind::Fipp, &bad).is_err());
    }

    #[test]
    fn recorded_tracks_ignore_the_robot() {
        let mut s = generate_scenario(ScenarioKind::SingleFlow, Some(30), 3).unwrap();
        let log = record_tracks(&s, 5.0, 0.1, &PedParams::default()).unwrap();
        assert_eq!(log.frames.len(), 51);
        assert!(log.frames.iter().all(|f| f.observations.len() == 30));
        assert_eq!(
            log,
            record_tracks(&s, 5.0, 0.1, &PedParams::default()).unwrap()
        );
        // Moving the robot onto a pedestrian's path changes nothing.
        s.robot_start = s.pedestrians[0].position + Vec2::new(0.3, 0.0);
        assert_eq!(
            log,
            record_tracks(&s, 5.0, 0.1, &PedParams::default()).unwrap()
        );
        assert!(record_tracks(&s, 0.0, 0.1, &PedParams::default()).is_err());
    }

    #[test]
    fn episodes_are_reproducible() {
        let s = generate_scenario(ScenarioKind::Intersection, Some(35), 9).unwrap();
        for planner in PlannerKind::BOTH {
            let a = run_episode(&s, planner, &EpisodeParams::default()).unwrap();
            let b = run_episode(&s, planner, &EpisodeParams::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn wall_freezes_the_rollout_baseline() {
        let s = generate_scenario(ScenarioKind::Wall, None, 1).unwrap();
        let log = run_episode(&s, PlannerKind::Tr, &EpisodeParams::default()).unwrap();
        assert_eq!(log.outcome, Outcome::Frozen);
    }

    #[test]
    fn short_timeout() {
        let s = empty_world();
        let p = EpisodeParams {
            max_t: 1.0,
            ..EpisodeParams::default()
        };
        let log = run_episode(&s, PlannerKind::Fipp, &p).unwrap();
        assert_eq!(log.outcome, Outcome::Timeout);
        assert!((log.records.last().unwrap().t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = EpisodeParams {
            sim_dt: 0.0,
            ..EpisodeParams::default()
        };
        assert!(run_episode(&empty_world(), PlannerKind::Tr, &p).is_err());
    }

    #[test]
    fn holonomic_step_stops_on_target() {
        let r = RobotState::default();
        let next = holonomic_step(r, Vec2::new(0.05, 0.0), 1.0, 0.1);
        assert_eq!(next.position, Vec2::new(0.05, 0.0));
        let far = holonomic_step(r, Vec2::new(3.0, 4.0), 1.0, 0.1);
        assert!((far.position.magnitude() - 0.1).abs() < 1e-12);
        assert!((far.velocity.magnitude() - 1.0).abs() < 1e-12);
    }
}
