//! Flow-informed grid search.
//!
//! Every action from one cell to an adjacent one costs
//!
//! ```text
//! c_a = c_r + c_f        (edge cost, accumulated as g)
//! f   = g + c_g          (c_g: weighted distance to the goal, the A* heuristic)
//! ```
//!
//! with `c_r` the weighted step length and `c_f` the [`flow_cost`] of moving
//! in the step direction through the destination cell's force. A path's total
//! cost splits into the traversal part `C_T` (sum of `c_r`) and the flow part
//! `C_F` (sum of `c_f`).

mod astar;
pub mod export;
mod replan;

use serde::{Deserialize, Serialize};

pub use astar::plan;
pub use replan::{ReplanStep, Replanner};

use crate::error::{Error, Result};
use crate::flowfield::{FlowField, GridSpec};
use crate::geometry::Vec2;

/// Flows weaker than this (force units) are ignored by [`flow_cost`].
pub const FLOW_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (0, 1), (-1, 0), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (1, 1),
                (0, 1),
                (-1, 1),
                (-1, 0),
                (-1, -1),
                (0, -1),
                (1, -1),
            ],
        }
    }

    pub fn allows(self, di: isize, dj: isize) -> bool {
        self.offsets().contains(&(di, dj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    /// Weight of the flow term.
    pub lambda_flow: f64,
    /// Cost per meter traveled.
    pub step_weight: f64,
    /// Weight of the straight-line distance to the goal.
    pub heuristic_weight: f64,
    pub connectivity: Connectivity,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            lambda_flow: 2.0,
            step_weight: 1.0,
            heuristic_weight: 1.0,
            connectivity: Connectivity::Eight,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("lambda_flow", self.lambda_flow),
            ("step_weight", self.step_weight),
            ("heuristic_weight", self.heuristic_weight),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }

    /// Whether the heuristic never overestimates the remaining cost.
    pub fn is_admissible(&self) -> bool {
        self.heuristic_weight <= self.step_weight
    }
}

/// Cost of one edge, split into its traversal and flow parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeCost {
    pub traversal: f64,
    pub flow: f64,
}

impl EdgeCost {
    pub fn total(&self) -> f64 {
        self.traversal + self.flow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Cell indices from start to goal.
    pub path: Vec<usize>,
    /// Cell centers along `path`.
    pub waypoints: Vec<Vec2>,
    /// Cost of the edge entering each path cell; zero for the start cell.
    pub edges: Vec<EdgeCost>,
    /// Accumulated traversal cost, `C_T`.
    pub cost_t: f64,
    /// Accumulated flow cost, `C_F`.
    pub cost_f: f64,
    /// Total path cost, `C_phi`.
    pub cost_total: f64,
    /// Number of nodes expanded by the search.
    pub expanded: usize,
}

/// Penalty for moving along `action_dir` through `flow`:
/// `lambda * |flow| * (1 - cos theta) / 2`.
///
/// Zero when moving with the flow, `lambda * |flow|` when moving straight
/// against it.
pub fn flow_cost(action_dir: Vec2, flow: Vec2, lambda_flow: f64) -> f64 {
    let magnitude = flow.magnitude();
    if magnitude < FLOW_EPSILON {
        return 0.0;
    }
    let Some(dir) = action_dir.normalized() else {
        return 0.0;
    };
    let cos = (dir.dot(flow) / magnitude).clamp(-1.0, 1.0);
    lambda_flow * magnitude * (1.0 - cos) / 2.0
}

/// Cost parts of moving between two adjacent cells.
pub fn edge_cost_parts(
    field: &FlowField,
    from: usize,
    to: usize,
    params: &CostParams,
) -> Result<EdgeCost> {
    let spec = &field.spec;
    let (fi, fj) = spec.coords(from);
    let (ti, tj) = spec.coords(to);
    let di = ti as isize - fi as isize;
    let dj = tj as isize - fj as isize;
    if to >= spec.cell_count() || !params.connectivity.allows(di, dj) {
        return Err(Error::NotAdjacent { from, to });
    }
    Ok(step_cost(field, to, di, dj, params))
}

/// Total cost of moving between two adjacent cells.
pub fn edge_cost(field: &FlowField, from: usize, to: usize, params: &CostParams) -> Result<f64> {
    edge_cost_parts(field, from, to, params).map(|e| e.total())
}

pub(crate) fn step_cost(
    field: &FlowField,
    to: usize,
    di: isize,
    dj: isize,
    params: &CostParams,
) -> EdgeCost {
    let step = Vec2::new(di as f64, dj as f64) * field.spec.cell_size;
    EdgeCost {
        traversal: params.step_weight * step.magnitude(),
        flow: flow_cost(step, field.force_at(to), params.lambda_flow),
    }
}

/// Weighted straight-line distance between two cell centers.
pub fn heuristic(spec: &GridSpec, cell: usize, goal: usize, params: &CostParams) -> f64 {
    params.heuristic_weight * spec.center_of(cell).distance(spec.center_of(goal))
}
