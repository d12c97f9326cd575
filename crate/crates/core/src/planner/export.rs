//! Plan export: one row per path cell, then a summary comment.
//!
//! ```text
//! # i,j,cx,cy,edge_cost_T,edge_cost_F
//! 0,0,0.25,0.25,0,0
//! 1,1,0.75,0.75,0.7071067811865476,0
//! # summary C_T=0.7071067811865476 C_F=0 C_phi=0.7071067811865476 expanded=2
//! ```

use std::io::Write;

use super::PlanResult;
use crate::error::Result;
use crate::flowfield::GridSpec;

pub const PLAN_HEADER: &str = "# i,j,cx,cy,edge_cost_T,edge_cost_F";

pub fn summary_line(plan: &PlanResult) -> String {
    format!(
        "C_T={} C_F={} C_phi={} expanded={}",
        plan.cost_t, plan.cost_f, plan.cost_total, plan.expanded
    )
}

pub fn write_plan<W: Write>(mut w: W, spec: &GridSpec, plan: &PlanResult) -> Result<()> {
    writeln!(w, "{PLAN_HEADER}")?;
    for (&cell, edge) in plan.path.iter().zip(&plan.edges) {
        let (i, j) = spec.coords(cell);
        let c = spec.center(i, j);
        writeln!(
            w,
            "{i},{j},{},{},{},{}",
            c.x, c.y, edge.traversal, edge.flow
        )?;
    }
    writeln!(w, "# summary {}", summary_line(plan))?;
    Ok(())
}
