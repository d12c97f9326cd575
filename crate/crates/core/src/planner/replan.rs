use super::{plan, CostParams};
use crate::error::Result;
use crate::flowfield::FlowField;
use crate::geometry::Vec2;

/// Next target handed to the robot's controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplanStep {
    pub target: Vec2,
    /// Waypoints left after `target`.
    pub remaining: usize,
    pub replanned: bool,
}

/// Receding-horizon execution of [`plan`]: keeps the current path, advances
/// along it as the robot arrives at waypoints, and replans every `period`
/// calls or when the next waypoint's cell becomes blocked.
#[derive(Debug, Clone)]
pub struct Replanner {
    pub params: CostParams,
    pub period: usize,
    /// Distance at which a waypoint counts as reached, meters.
    pub arrive_radius: f64,
    /// Distance at which the goal counts as reached, meters.
    pub goal_tolerance: f64,
    waypoints: Vec<Vec2>,
    next: usize,
    since_plan: usize,
    goal: Option<Vec2>,
}

impl Replanner {
    pub fn new(params: CostParams, period: usize) -> Self {
        Self {
            params,
            period: period.max(1),
            arrive_radius: 0.1,
            goal_tolerance: 0.25,
            waypoints: Vec::new(),
            next: 0,
            since_plan: 0,
            goal: None,
        }
    }

    /// Waypoints not yet reached, the current target first.
    pub fn remaining_path(&self) -> &[Vec2] {
        self.waypoints.get(self.next..).unwrap_or(&[])
    }

    pub fn replan_step(
        &mut self,
        field: &FlowField,
        robot: Vec2,
        goal: Vec2,
        blocked: &[bool],
    ) -> Result<ReplanStep> {
        if robot.distance(goal) <= self.goal_tolerance {
            self.waypoints.clear();
            self.next = 0;
            return Ok(ReplanStep {
                target: goal,
                remaining: 0,
                replanned: false,
            });
        }

        let next_blocked = self
            .waypoints
            .get(self.next)
            .and_then(|&w| field.spec.cell_at(w))
            .is_some_and(|c| blocked.get(c).copied().unwrap_or(false));
        let stale = self.goal != Some(goal)
            || self.next >= self.waypoints.len()
            || self.since_plan >= self.period
            || next_blocked;

        if stale {
            let result = plan(field, robot, goal, &self.params, blocked)?;
            // The first waypoint is the robot's own cell.
            let mut waypoints = result.waypoints[1..].to_vec();
            match waypoints.last_mut() {
                Some(last) => *last = goal,
                None => waypoints.push(goal),
            }
            self.waypoints = waypoints;
            self.next = 0;
            self.since_plan = 0;
            self.goal = Some(goal);
        }

        while self.next + 1 < self.waypoints.len()
            && robot.distance(self.waypoints[self.next]) <= self.arrive_radius
        {
            self.next += 1;
        }
        self.since_plan += 1;
        Ok(ReplanStep {
            target: self.waypoints[self.next],
            remaining: self.waypoints.len() - self.next - 1,
            replanned: stale,
        })
    }
}
