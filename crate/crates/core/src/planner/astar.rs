use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{heuristic, step_cost, CostParams, EdgeCost, PlanResult};
use crate::error::{Error, Result};
use crate::flowfield::FlowField;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    h: f64,
    g: f64,
    cell: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap and we pop lowest (f, h, cell) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

/// Minimum-cost path between the cells containing `start` and `goal`.
///
/// `blocked[k]` marks cell `k` as impassable; an empty slice blocks nothing.
/// Ties are broken by lower `f`, then lower heuristic, then lower cell index.
pub fn plan(
    field: &FlowField,
    start: Vec2,
    goal: Vec2,
    params: &CostParams,
    blocked: &[bool],
) -> Result<PlanResult> {
    params.validate()?;
    let spec = &field.spec;
    let start_cell = spec.cell_at(start).ok_or(Error::OutOfBounds(start))?;
    let goal_cell = spec.cell_at(goal).ok_or(Error::OutOfBounds(goal))?;
    let is_blocked = |c: usize| blocked.get(c).copied().unwrap_or(false);
    if is_blocked(start_cell) || is_blocked(goal_cell) {
        return Err(Error::NoPath);
    }

    let n = spec.cell_count();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let mut expanded = 0usize;

    g[start_cell] = 0.0;
    let h0 = heuristic(spec, start_cell, goal_cell, params);
    heap.push(Entry {
        f: h0,
        h: h0,
        g: 0.0,
        cell: start_cell,
    });

    while let Some(entry) = heap.pop() {
        if entry.g > g[entry.cell] {
            continue;
        }
        let best = g[goal_cell];
        // Keep expanding entries tied with the incumbent within rounding, so
        // the result is the float-exact minimum even when the heuristic is
        // inconsistent by a few ulps. Improvements reopen nodes.
        if best.is_finite() && entry.f > best + 1e-9 * best.max(1.0) {
            break;
        }
        expanded += 1;
        if entry.cell == goal_cell {
            continue;
        }
        for &(di, dj) in params.connectivity.offsets() {
            let Some(next) = spec.offset(entry.cell, di, dj) else {
                continue;
            };
            if is_blocked(next) {
                continue;
            }
            let candidate = entry.g + step_cost(field, next, di, dj, params).total();
            if candidate < g[next] {
                g[next] = candidate;
                parent[next] = entry.cell;
                let h = heuristic(spec, next, goal_cell, params);
                heap.push(Entry {
                    f: candidate + h,
                    h,
                    g: candidate,
                    cell: next,
                });
            }
        }
    }

    if !g[goal_cell].is_finite() {
        return Err(Error::NoPath);
    }

    let mut path = vec![goal_cell];
    while let Some(&last) = path.last() {
        if last == start_cell {
            break;
        }
        path.push(parent[last]);
    }
    path.reverse();

    let mut edges = vec![EdgeCost::default()];
    for w in path.windows(2) {
        let (fi, fj) = spec.coords(w[0]);
        let (ti, tj) = spec.coords(w[1]);
        edges.push(step_cost(
            field,
            w[1],
            ti as isize - fi as isize,
            tj as isize - fj as isize,
            params,
        ));
    }
    let cost_t = edges.iter().map(|e| e.traversal).sum();
    let cost_f = edges.iter().map(|e| e.flow).sum();
    Ok(PlanResult {
        waypoints: path.iter().map(|&c| spec.center_of(c)).collect(),
        path,
        edges,
        cost_t,
        cost_f,
        cost_total: g[goal_cell],
        expanded,
    })
}
