//! Deterministic crowd-and-robot simulator.
//!
//! Pedestrians walk their lanes without interacting with each other, yield
//! to a robot standing right in front of them, and re-enter upstream when
//! they leave the world. The robot runs either the flow-informed planner
//! (holonomic, tracking waypoints) or the trajectory-rollout baseline
//! (unicycle). All randomness comes from the scenario seed.

mod episode;
pub mod log;
mod pedestrian;
mod scenario;

pub use episode::{
    record_tracks, run_episode, EpisodeLog, EpisodeParams, Outcome, PlannerKind, RobotState,
    WorldState,
};
pub use pedestrian::{ped_step, PedParams};
pub use scenario::{
    generate_scenario, Lane, Pedestrian, Scenario, ScenarioKind, DEFAULT_PED_RANGE, LANE_SPEED,
    MIN_SEPARATION, SPAWN_DEPTH, WALL_SPACING, WORLD_SIZE,
};
