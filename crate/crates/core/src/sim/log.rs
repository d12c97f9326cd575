//! Episode logs as JSON lines.
//!
//! The first line is a header object holding the scenario, planner, parameters
//! and outcome. Every following line is one step:
//!
//! ```text
//! {"t":0.1,"robot":{"x":..,"y":..,"vx":..,"vy":..,"heading":..},"peds":[[id,x,y,vx,vy],..],"done":false}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeLog, EpisodeParams, Outcome, PlannerKind, RobotState, WorldState};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::flowfield::PedObservation;
use crate::geometry::Vec2;

#[derive(Serialize, Deserialize)]
struct Header {
    scenario: Scenario,
    planner: PlannerKind,
    params: EpisodeParams,
    outcome: Outcome,
    error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RobotRow {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    heading: f64,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: f64,
    robot: RobotRow,
    peds: Vec<(u64, f64, f64, f64, f64)>,
    done: bool,
}

impl From<&WorldState> for Row {
    fn from(s: &WorldState) -> Self {
        let r = &s.robot;
        Row {
            t: s.t,
            robot: RobotRow {
                x: r.position.x,
                y: r.position.y,
                vx: r.velocity.x,
                vy: r.velocity.y,
                heading: r.heading,
            },
            peds: s
                .pedestrians
                .iter()
                .map(|p| (p.id, p.position.x, p.position.y, p.velocity.x, p.velocity.y))
                .collect(),
            done: s.done,
        }
    }
}

impl From<Row> for WorldState {
    fn from(row: Row) -> Self {
        WorldState {
            t: row.t,
            robot: RobotState {
                position: Vec2::new(row.robot.x, row.robot.y),
                heading: row.robot.heading,
                velocity: Vec2::new(row.robot.vx, row.robot.vy),
            },
            pedestrians: row
                .peds
                .into_iter()
                .map(|(id, x, y, vx, vy)| PedObservation {
                    id,
                    position: Vec2::new(x, y),
                    velocity: Vec2::new(vx, vy),
                })
                .collect(),
            done: row.done,
        }
    }
}

pub fn write_episode_log<W: Write>(mut w: W, log: &EpisodeLog) -> Result<()> {
    let header = Header {
        scenario: log.scenario.clone(),
        planner: log.planner,
        params: log.params.clone(),
        outcome: log.outcome,
        error: log.error.clone(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for state in &log.records {
        serde_json::to_writer(&mut w, &Row::from(state))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episode_log<R: BufRead>(r: R) -> Result<EpisodeLog> {
    let mut lines = r.lines().enumerate().filter_map(|(k, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((k as u64 + 1, other)),
    });
    let parse_err = |line: u64, e: serde_json::Error| Error::Parse {
        line,
        message: e.to_string(),
    };
    let (line, first) = lines.next().ok_or(Error::EmptyLog)?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| parse_err(line, e))?;
    let mut records = Vec::new();
    for (line, text) in lines {
        let row: Row = serde_json::from_str(&text?).map_err(|e| parse_err(line, e))?;
        records.push(WorldState::from(row));
    }
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(EpisodeLog {
        scenario: header.scenario,
        planner: header.planner,
        params: header.params,
        outcome: header.outcome,
        error: header.error,
        records,
    })
}
