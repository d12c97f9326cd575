//! Crowd flow fields on a 2D mesh grid.
//!
//! Pedestrian observations are binned into the nearest grid cell, where they
//! update a smoothed velocity estimate ([`FlowField::deposit_frame`]). The
//! Active-Langevin force is then evaluated at every cell
//! ([`FlowField::update_field`]), which spreads the crowd's motion into cells
//! that no pedestrian has reached yet. The resulting force vectors are what
//! the planner consults and what [`advect`] moves test particles through.

mod advect;
pub mod forces;
pub mod io;

use serde::{Deserialize, Serialize};

pub use advect::{
    advect, mean_deviation, predict_tracks, resample_by_arc_length, trajectory_deviation,
    TrackPrediction,
};
pub use forces::{
    active_langevin_force, average_velocity, interaction_coefficient, neighbor_friction,
    relative_velocity,
};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};

/// Default cap on observed pedestrian speed, m/s.
pub const DEFAULT_V_PED_MAX: f64 = 3.0;

/// A single tracked pedestrian at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedObservation {
    pub id: u64,
    pub position: Vec2,
    pub velocity: Vec2,
}

/// All observations sharing one timestamp.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackFrame {
    pub t: f64,
    pub observations: Vec<PedObservation>,
}

/// A time-ordered sequence of frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackLog {
    pub frames: Vec<TrackFrame>,
}

impl TrackLog {
    /// Per-pedestrian trajectories, split wherever a pedestrian disappears for
    /// a frame or jumps further than `max_jump` meters between frames.
    pub fn trajectories(&self, max_jump: f64) -> Vec<(u64, Vec<Vec2>)> {
        use std::collections::BTreeMap;
        // id -> (first frame, last frame, positions)
        let mut open: BTreeMap<u64, (usize, usize, Vec<Vec2>)> = BTreeMap::new();
        let mut done = Vec::new();
        for (k, frame) in self.frames.iter().enumerate() {
            for o in &frame.observations {
                let entry = open.entry(o.id).or_insert_with(|| (k, k, Vec::new()));
                let continues = entry.1 + 1 == k
                    && entry
                        .2
                        .last()
                        .is_some_and(|p| p.distance(o.position) <= max_jump);
                if !entry.2.is_empty() && !continues {
                    done.push((o.id, entry.0, std::mem::take(&mut entry.2)));
                    entry.0 = k;
                }
                entry.1 = k;
                entry.2.push(o.position);
            }
        }
        done.extend(
            open.into_iter()
                .map(|(id, (start, _, path))| (id, start, path)),
        );
        done.sort_by_key(|&(id, start, _)| (id, start));
        done.into_iter().map(|(id, _, path)| (id, path)).collect()
    }
}

/// Geometry of the mesh grid. Cell `(i, j)` covers
/// `[origin.x + i*cell_size, origin.x + (i+1)*cell_size)` in x and likewise in y;
/// cells are stored row-major, index `j * width + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(origin: Vec2, cell_size: f64, width: usize, height: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one cell in each direction".into(),
            ));
        }
        Ok(Self {
            origin,
            cell_size,
            width,
            height,
        })
    }

    /// Smallest grid of `cell_size` cells covering `bounds`.
    pub fn covering(bounds: Rect, cell_size: f64) -> Result<Self> {
        let w = (bounds.width() / cell_size - 1e-9).ceil().max(1.0) as usize;
        let h = (bounds.height() / cell_size - 1e-9).ceil().max(1.0) as usize;
        Self::new(bounds.min, cell_size, w, h)
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin
                + Vec2::new(
                    self.width as f64 * self.cell_size,
                    self.height as f64 * self.cell_size,
                ),
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        self.origin
            + Vec2::new(
                (i as f64 + 0.5) * self.cell_size,
                (j as f64 + 0.5) * self.cell_size,
            )
    }

    pub fn center_of(&self, index: usize) -> Vec2 {
        let (i, j) = self.coords(index);
        self.center(i, j)
    }

    /// Cell containing `p`, or `None` when `p` lies outside the grid.
    pub fn cell_at(&self, p: Vec2) -> Option<usize> {
        if !p.is_finite() {
            return None;
        }
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if fx < 0.0 || fy < 0.0 || fx > self.width as f64 || fy > self.height as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(self.width - 1);
        let j = (fy.floor() as usize).min(self.height - 1);
        Some(self.index(i, j))
    }

    /// Nearest cell to `p`, clamping points outside the grid onto its border.
    pub fn nearest_cell(&self, p: Vec2) -> usize {
        let b = self.bounds();
        self.cell_at(b.clamp(p))
            .expect("clamped point lies on the grid")
    }

    /// Offsets `(di, dj)` of all other cells whose centers lie within `radius`.
    pub fn offsets_within(&self, radius: f64) -> Vec<(isize, isize)> {
        let reach = (radius / self.cell_size).floor() as isize;
        let mut out = Vec::new();
        for dj in -reach..=reach {
            for di in -reach..=reach {
                if (di, dj) == (0, 0) {
                    continue;
                }
                let d = (di as f64).hypot(dj as f64) * self.cell_size;
                if d <= radius * (1.0 + 1e-12) {
                    out.push((di, dj));
                }
            }
        }
        out
    }

    pub fn offset(&self, index: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.coords(index);
        let ni = i.checked_add_signed(di)?;
        let nj = j.checked_add_signed(dj)?;
        (ni < self.width && nj < self.height).then(|| self.index(ni, nj))
    }
}

/// How neighbor velocities are aggregated into the relative velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelVelocityMode {
    /// Vector mean of in-radius neighbors.
    #[default]
    Mean,
    /// Vector sum of in-radius neighbors.
    Sum,
}

/// Orientation of the influence term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceSign {
    /// `alpha * (v_rel - v_i)`: a location is pulled toward its neighbors' motion.
    #[default]
    TowardNeighbors,
    /// `alpha * (v_i - v_rel)`, the literal form of the driving-force equation.
    AsWritten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Self-propelling coefficient.
    pub xi: f64,
    /// Influence radius, meters.
    pub h: f64,
    pub rel_velocity_mode: RelVelocityMode,
    pub influence_sign: InfluenceSign,
    /// Weight of a new observation in a cell's moving average.
    pub ema_decay: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            xi: 0.5,
            h: 1.0,
            rel_velocity_mode: RelVelocityMode::Mean,
            influence_sign: InfluenceSign::TowardNeighbors,
            ema_decay: 0.3,
        }
    }
}

impl FlowParams {
    /// Defaults with `h` set to twice the cell size.
    pub fn for_cell_size(cell_size: f64) -> Self {
        Self {
            h: 2.0 * cell_size,
            ..Self::default()
        }
    }

    /// The random force is held at zero.
    pub fn f_random(&self) -> Vec2 {
        Vec2::ZERO
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "xi must be >= 0, got {}",
                self.xi
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "h must be > 0, got {}",
                self.h
            )));
        }
        if !(0.0..=1.0).contains(&self.ema_decay) {
            return Err(Error::InvalidParameter(format!(
                "ema_decay must lie in [0, 1], got {}",
                self.ema_decay
            )));
        }
        Ok(())
    }

    /// Advection scale that turns a uniform lane's force back into its speed.
    pub fn natural_speed_scale(&self) -> f64 {
        if self.xi > 0.0 {
            1.0 / self.xi
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowCell {
    /// Smoothed velocity estimate of the crowd at this cell.
    pub velocity: Vec2,
    /// Active-Langevin force from the last field update.
    pub force: Vec2,
    /// Observations deposited in the current frame.
    pub occupancy: u32,
    /// Friction coefficient from the last field update.
    pub mu: f64,
    /// Observations deposited over the field's lifetime. Zero means the cell
    /// carries no velocity estimate.
    pub samples: u64,
}

impl FlowCell {
    pub fn has_velocity(&self) -> bool {
        self.samples > 0
    }
}

/// Outcome of depositing one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepositReport {
    pub deposited: usize,
    pub out_of_bounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub spec: GridSpec,
    pub cells: Vec<FlowCell>,
    pub frame_count: u64,
    /// Mean velocity of the most recently deposited frame.
    pub frame_average: Vec2,
    last_t: Option<f64>,
}

impl FlowField {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            cells: vec![FlowCell::default(); spec.cell_count()],
            spec,
            frame_count: 0,
            frame_average: Vec2::ZERO,
            last_t: None,
        }
    }

    /// A field whose forces are given directly, as read back from an export.
    pub fn from_forces(spec: GridSpec, forces: Vec<Vec2>) -> Result<Self> {
        if forces.len() != spec.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} forces, got {}",
                spec.cell_count(),
                forces.len()
            )));
        }
        let mut field = Self::new(spec);
        for (cell, force) in field.cells.iter_mut().zip(forces) {
            cell.force = force;
        }
        Ok(field)
    }

    /// A field holding the same force in every cell.
    pub fn uniform(spec: GridSpec, force: Vec2) -> Self {
        let forces = vec![force; spec.cell_count()];
        Self::from_forces(spec, forces).expect("length matches by construction")
    }

    pub fn cell(&self, i: usize, j: usize) -> &FlowCell {
        &self.cells[self.spec.index(i, j)]
    }

    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut FlowCell {
        let idx = self.spec.index(i, j);
        &mut self.cells[idx]
    }

    pub fn force_at(&self, index: usize) -> Vec2 {
        self.cells[index].force
    }

    /// Bin a frame's observations into their cells and blend the per-cell mean
    /// velocity into each cell's moving average.
    ///
    /// Observations outside the grid are dropped and counted.
    pub fn deposit_frame(
        &mut self,
        frame: &TrackFrame,
        params: &FlowParams,
    ) -> Result<DepositReport> {
        if let Some(previous) = self.last_t {
            if frame.t <= previous {
                return Err(Error::NonMonotonicTime {
                    t: frame.t,
                    previous,
                });
            }
        }
        self.last_t = Some(frame.t);
        self.frame_count += 1;
        self.frame_average = average_velocity(frame);

        let mut binned: Vec<(usize, u64, Vec2)> = Vec::with_capacity(frame.observations.len());
        let mut report = DepositReport::default();
        for o in &frame.observations {
            match self.spec.cell_at(o.position) {
                Some(idx) => binned.push((idx, o.id, o.velocity)),
                None => report.out_of_bounds += 1,
            }
        }
        report.deposited = binned.len();
        // Sorting fixes the summation order, so input order cannot leak into the result.
        binned.sort_by_key(|&(idx, id, _)| (idx, id));

        for cell in &mut self.cells {
            cell.occupancy = 0;
        }
        let decay = params.ema_decay;
        for group in binned.chunk_by(|a, b| a.0 == b.0) {
            let idx = group[0].0;
            let mean = group.iter().map(|&(_, _, v)| v).sum::<Vec2>() / group.len() as f64;
            let cell = &mut self.cells[idx];
            cell.velocity = if cell.has_velocity() {
                (1.0 - decay) * cell.velocity + decay * mean
            } else {
                // First observation. Blending with the implicit zero would
                // bias fresh cells toward standstill.
                mean
            };
            cell.occupancy = group.len() as u32;
            cell.samples += group.len() as u64;
        }
        Ok(report)
    }

    /// Evaluate the Active-Langevin force at every cell against a snapshot of
    /// the current velocities and occupancies.
    pub fn update_field(&mut self, params: &FlowParams) {
        let offsets = self.spec.offsets_within(params.h);
        let v_avg = self.frame_average;
        let mut occupied = Vec::with_capacity(offsets.len());
        let mut moving = Vec::with_capacity(offsets.len());
        let mut next = Vec::with_capacity(self.cells.len());
        for idx in 0..self.cells.len() {
            let center = self.spec.center_of(idx);
            occupied.clear();
            moving.clear();
            for &(di, dj) in &offsets {
                let Some(n) = self.spec.offset(idx, di, dj) else {
                    continue;
                };
                let cell = &self.cells[n];
                let pos = self.spec.center_of(n);
                if cell.occupancy > 0 {
                    occupied.push(pos);
                }
                if cell.has_velocity() {
                    moving.push((pos, cell.velocity));
                }
            }
            let v_i = self.cells[idx].velocity;
            let mu = neighbor_friction(center, &occupied);
            let v_rel = relative_velocity(center, &moving, params.h, params.rel_velocity_mode);
            let alpha = interaction_coefficient(v_rel, v_avg);
            next.push((mu, active_langevin_force(v_i, v_rel, mu, alpha, params)));
        }
        for (cell, (mu, force)) in self.cells.iter_mut().zip(next) {
            cell.mu = mu;
            cell.force = force;
        }
    }

    /// Bilinear interpolation of cell forces. Points off the grid take the
    /// value of the nearest border.
    pub fn sample_flow(&self, p: Vec2) -> Vec2 {
        let s = &self.spec;
        let gx = ((p.x - s.origin.x) / s.cell_size - 0.5).clamp(0.0, (s.width - 1) as f64);
        let gy = ((p.y - s.origin.y) / s.cell_size - 0.5).clamp(0.0, (s.height - 1) as f64);
        let i0 = gx.floor() as usize;
        let j0 = gy.floor() as usize;
        let i1 = (i0 + 1).min(s.width - 1);
        let j1 = (j0 + 1).min(s.height - 1);
        let tx = gx - i0 as f64;
        let ty = gy - j0 as f64;
        let f = |i, j| self.cells[s.index(i, j)].force;
        let bottom = f(i0, j0) * (1.0 - tx) + f(i1, j0) * tx;
        let top = f(i0, j1) * (1.0 - tx) + f(i1, j1) * tx;
        bottom * (1.0 - ty) + top * ty
    }

    /// Replay every frame of a log, then evaluate the forces once.
    pub fn extract(spec: GridSpec, log: &TrackLog, params: &FlowParams) -> Result<(Self, usize)> {
        params.validate()?;
        let mut field = Self::new(spec);
        let mut dropped = 0;
        for frame in &log.frames {
            dropped += field.deposit_frame(frame, params)?.out_of_bounds;
        }
        field.update_field(params);
        Ok((field, dropped))
    }
}
