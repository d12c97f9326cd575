use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfield::PedObservation;
use crate::geometry::{Rect, Vec2};

/// Side length of the default square world, meters.
pub const WORLD_SIZE: f64 = 20.0;
/// Walking speed of generated lanes, m/s.
pub const LANE_SPEED: f64 = 0.8;
/// Minimum straight-line distance between the robot's start and goal, meters.
pub const MIN_SEPARATION: f64 = 12.0;
/// Depth of the strip at a lane's upstream end where pedestrians re-enter, meters.
pub const SPAWN_DEPTH: f64 = 2.0;
/// Default pedestrian count range when none is requested.
pub const DEFAULT_PED_RANGE: std::ops::RangeInclusive<usize> = 25..=50;

/// Generated pedestrians keep at least this far from the robot's start, meters.
const START_CLEARANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Pedestrians walk straight lines with random headings.
    Chaotic,
    /// One lane across the world.
    SingleFlow,
    /// Two adjacent antiparallel lanes.
    DoubleFlow,
    /// Two perpendicular lanes crossing in the middle.
    Intersection,
    /// Stationary pedestrians standing shoulder to shoulder across the world.
    Wall,
}

impl ScenarioKind {
    /// The four crowd-flow families used for benchmarking.
    pub const FLOWS: [ScenarioKind; 4] = [
        ScenarioKind::Chaotic,
        ScenarioKind::SingleFlow,
        ScenarioKind::DoubleFlow,
        ScenarioKind::Intersection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Chaotic => "chaotic",
            ScenarioKind::SingleFlow => "single_flow",
            ScenarioKind::DoubleFlow => "double_flow",
            ScenarioKind::Intersection => "intersection",
            ScenarioKind::Wall => "wall",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chaotic" => Ok(ScenarioKind::Chaotic),
            "single_flow" => Ok(ScenarioKind::SingleFlow),
            "double_flow" => Ok(ScenarioKind::DoubleFlow),
            "intersection" => Ok(ScenarioKind::Intersection),
            "wall" => Ok(ScenarioKind::Wall),
            other => Err(Error::UnknownScenarioKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    /// Area the lane's pedestrians occupy.
    pub region: Rect,
    /// Unit walking direction.
    pub direction: Vec2,
    /// m/s.
    pub speed: f64,
    /// Pedestrians entering per second.
    pub spawn_rate: f64,
}

impl Lane {
    /// Strip of `region` at the upstream end, `depth` meters deep.
    pub fn spawn_zone(&self, depth: f64) -> Rect {
        let Rect { min, max } = self.region;
        let d = self.direction;
        let mut zone = self.region;
        if d.x > 0.0 {
            zone.max.x = (min.x + depth).min(max.x);
        } else if d.x < 0.0 {
            zone.min.x = (max.x - depth).max(min.x);
        }
        if d.y > 0.0 {
            zone.max.y = (min.y + depth).min(max.y);
        } else if d.y < 0.0 {
            zone.min.y = (max.y - depth).max(min.y);
        }
        zone
    }

    /// Where a pedestrian walking along `heading` through `p` entered the
    /// region: `p` moved back along `heading` to the region's edge.
    pub fn entry_point(&self, p: Vec2, heading: Vec2) -> Vec2 {
        let p = self.region.clamp(p);
        let Rect { min, max } = self.region;
        let back = |pos: f64, lo: f64, hi: f64, d: f64| {
            if d > 0.0 {
                (pos - lo) / d
            } else if d < 0.0 {
                (pos - hi) / d
            } else {
                f64::INFINITY
            }
        };
        let t = back(p.x, min.x, max.x, heading.x).min(back(p.y, min.y, max.y, heading.y));
        if t.is_finite() {
            self.region.clamp(p - heading * t)
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u64,
    /// Index into the scenario's lanes.
    pub lane: usize,
    pub position: Vec2,
    /// Unit direction the pedestrian intends to walk.
    pub heading: Vec2,
    /// Velocity over the last step.
    pub velocity: Vec2,
}

impl Pedestrian {
    pub fn observation(&self) -> PedObservation {
        PedObservation {
            id: self.id,
            position: self.position,
            velocity: self.velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub bounds: Rect,
    pub lanes: Vec<Lane>,
    pub n_peds: usize,
    pub robot_start: Vec2,
    pub robot_goal: Vec2,
    pub seed: u64,
    /// Initial pedestrian states.
    pub pedestrians: Vec<Pedestrian>,
}

impl Scenario {
    /// A world with no pedestrians.
    pub fn empty(bounds: Rect, robot_start: Vec2, robot_goal: Vec2) -> Self {
        Self {
            kind: ScenarioKind::Chaotic,
            bounds,
            lanes: Vec::new(),
            n_peds: 0,
            robot_start,
            robot_goal,
            seed: 0,
            pedestrians: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bounds.contains(self.robot_start) || !self.bounds.contains(self.robot_goal) {
            return Err(Error::InvalidParameter(
                "robot start and goal must lie inside the world bounds".into(),
            ));
        }
        for lane in &self.lanes {
            if (lane.direction.magnitude() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "lane directions must be unit length".into(),
                ));
            }
            if !(lane.speed >= 0.0 && lane.speed.is_finite()) {
                return Err(Error::InvalidParameter("lane speed must be >= 0".into()));
            }
        }
        for p in &self.pedestrians {
            if p.lane >= self.lanes.len() {
                return Err(Error::InvalidParameter(format!(
                    "pedestrian {} refers to missing lane {}",
                    p.id, p.lane
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }
}

fn band_x(y0: f64, y1: f64) -> Rect {
    Rect::new(Vec2::new(0.0, y0), Vec2::new(WORLD_SIZE, y1))
}

fn band_y(x0: f64, x1: f64) -> Rect {
    Rect::new(Vec2::new(x0, 0.0), Vec2::new(x1, WORLD_SIZE))
}

fn lane(region: Rect, direction: Vec2, speed: f64) -> Lane {
    Lane {
        region,
        direction,
        speed,
        spawn_rate: 0.0,
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, r: Rect) -> Vec2 {
    r.at(rng.random(), rng.random())
}

/// Build a scenario of `kind`. With `n_peds` unset the count is drawn from
/// [`DEFAULT_PED_RANGE`]. The result depends only on the arguments.
///
/// Start and goal are uniform over the world shrunk by 1 m, outside every
/// spawn zone, and at least [`MIN_SEPARATION`] apart.
pub fn generate_scenario(kind: ScenarioKind, n_peds: Option<usize>, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if kind == ScenarioKind::Wall {
        return Ok(wall_scenario(&mut rng, seed));
    }
    let n_peds = match n_peds {
        Some(0) => return Err(Error::InvalidParameter("n_peds must be >= 1".into())),
        Some(n) => n,
        None => rng.random_range(DEFAULT_PED_RANGE),
    };
    let bounds = Rect::from_size(WORLD_SIZE, WORLD_SIZE);
    let east = Vec2::new(1.0, 0.0);
    let north = Vec2::new(0.0, 1.0);
    let mut lanes = match kind {
        ScenarioKind::Chaotic => vec![lane(bounds, east, LANE_SPEED)],
        ScenarioKind::SingleFlow => vec![lane(band_x(6.0, 14.0), east, LANE_SPEED)],
        ScenarioKind::DoubleFlow => vec![
            lane(band_x(4.0, 10.0), east, LANE_SPEED),
            lane(band_x(10.0, 16.0), -east, LANE_SPEED),
        ],
        ScenarioKind::Intersection => vec![
            lane(band_x(7.0, 13.0), east, LANE_SPEED),
            lane(band_y(7.0, 13.0), north, LANE_SPEED),
        ],
        ScenarioKind::Wall => unreachable!(),
    };

    let spawn_zones: Vec<Rect> = lanes.iter().map(|l| l.spawn_zone(SPAWN_DEPTH)).collect();
    let outside_spawn = |p: Vec2| spawn_zones.iter().all(|z| !z.contains(p));
    let inner = Rect::new(
        Vec2::new(1.0, 1.0),
        Vec2::new(WORLD_SIZE - 1.0, WORLD_SIZE - 1.0),
    );
    let draw = |rng: &mut ChaCha8Rng| loop {
        let p = uniform_in(rng, inner);
        if outside_spawn(p) {
            break p;
        }
    };
    let (robot_start, robot_goal) = loop {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if a.distance(b) >= MIN_SEPARATION {
            break (a, b);
        }
    };

    let mut pedestrians = Vec::with_capacity(n_peds);
    for id in 0..n_peds {
        let lane_idx = id % lanes.len();
        let l = lanes[lane_idx];
        let heading = if kind == ScenarioKind::Chaotic {
            Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU))
        } else {
            l.direction
        };
        let position = loop {
            let p = uniform_in(&mut rng, l.region);
            if p.distance(robot_start) >= START_CLEARANCE {
                break p;
            }
        };
        pedestrians.push(Pedestrian {
            id: id as u64,
            lane: lane_idx,
            position,
            heading,
            velocity: heading * l.speed,
        });
    }

    for (k, l) in lanes.iter_mut().enumerate() {
        let count = pedestrians.iter().filter(|p| p.lane == k).count();
        let length =
            l.region.width() * l.direction.x.abs() + l.region.height() * l.direction.y.abs();
        l.spawn_rate = count as f64 * l.speed / length;
    }

    Ok(Scenario {
        kind,
        bounds,
        lanes,
        n_peds,
        robot_start,
        robot_goal,
        seed,
        pedestrians,
    })
}

/// Spacing of the pedestrian wall, meters.
pub const WALL_SPACING: f64 = 0.7;

/// A column of stationary pedestrians across the whole world at mid-width,
/// with the robot on one side and its goal on the other. Gaps are narrower
/// than two collision radii of the rollout baseline.
fn wall_scenario(rng: &mut ChaCha8Rng, seed: u64) -> Scenario {
    let bounds = Rect::from_size(WORLD_SIZE, WORLD_SIZE);
    let east = Vec2::new(1.0, 0.0);
    let wall = lane(bounds, east, 0.0);
    let offset = rng.random_range(0.0..WALL_SPACING);
    let x = WORLD_SIZE / 2.0 + rng.random_range(-0.5..0.5);
    let n = ((WORLD_SIZE - offset) / WALL_SPACING).ceil() as usize;
    let pedestrians: Vec<_> = (0..n)
        .map(|k| Pedestrian {
            id: k as u64,
            lane: 0,
            position: Vec2::new(x, offset + k as f64 * WALL_SPACING),
            heading: east,
            velocity: Vec2::ZERO,
        })
        .collect();
    let robot_start = uniform_in(
        rng,
        Rect::new(Vec2::new(2.0, 2.0), Vec2::new(5.0, WORLD_SIZE - 2.0)),
    );
    let robot_goal = uniform_in(
        rng,
        Rect::new(
            Vec2::new(WORLD_SIZE - 5.0, 2.0),
            Vec2::new(WORLD_SIZE - 2.0, WORLD_SIZE - 2.0),
        ),
    );
    Scenario {
        kind: ScenarioKind::Wall,
        bounds,
        lanes: vec![wall],
        n_peds: pedestrians.len(),
        robot_start,
        robot_goal,
        seed,
        pedestrians,
    }
}
