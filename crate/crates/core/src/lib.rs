//! Flow-informed path planning.
//!
//! The crate extracts a crowd flow field from pedestrian tracks, plans robot
//! paths on that field with a cost that penalizes moving against the crowd,
//! and compares the result against a trajectory-rollout local planner inside
//! a small deterministic crowd simulator.
//!
//! * [`flowfield`]: Active-Langevin forces on a mesh grid, advection.
//! * [`planner`]: A* with flow-aware edge costs, receding-horizon execution.
//! * [`baseline_tr`]: the trajectory-rollout baseline.
//! * [`sim`]: scenarios, pedestrians and episodes.
//! * [`metrics`]: proxemic violations, efficiency and planner comparison.
//! * [`bench`]: scenario sweeps over both planners.

pub mod baseline_tr;
pub mod bench;
pub mod error;
pub mod flowfield;
pub mod geometry;
pub mod metrics;
pub mod planner;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::{Rect, Vec2};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/flow-fields.md")]
    mod flow_fields {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
