use serde::{Deserialize, Serialize};

use super::{FlowField, TrackLog};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Move a test particle through the field with forward Euler steps,
/// `p_{k+1} = p_k + dt * speed_scale * F(p_k)`.
///
/// Returns `steps + 1` points, starting with `start`.
pub fn advect(
    field: &FlowField,
    start: Vec2,
    dt: f64,
    steps: usize,
    speed_scale: f64,
) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = start;
    out.push(p);
    for _ in 0..steps {
        p += field.sample_flow(p) * (dt * speed_scale);
        out.push(p);
    }
    out
}

/// Resample a polyline to `n` points evenly spaced along its arc length.
pub fn resample_by_arc_length(points: &[Vec2], n: usize) -> Vec<Vec2> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    if n == 1 || points.len() == 1 {
        return vec![points[0]; n];
    }
    let mut cumulative = Vec::with_capacity(points.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in points.windows(2) {
        total += w[0].distance(w[1]);
        cumulative.push(total);
    }
    if total == 0.0 {
        return vec![points[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 {
            ((s - cumulative[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out
}

/// Mean pointwise Euclidean distance between two trajectories.
///
/// Trajectories of equal length are compared sample by sample. Otherwise both
/// are first resampled by arc length to the longer one's point count.
pub fn trajectory_deviation(predicted: &[Vec2], actual: &[Vec2]) -> Result<f64> {
    if predicted.is_empty() || actual.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mean = |a: &[Vec2], b: &[Vec2]| {
        a.iter().zip(b).map(|(p, q)| p.distance(*q)).sum::<f64>() / a.len() as f64
    };
    if predicted.len() == actual.len() {
        return Ok(mean(predicted, actual));
    }
    let n = predicted.len().max(actual.len());
    Ok(mean(
        &resample_by_arc_length(predicted, n),
        &resample_by_arc_length(actual, n),
    ))
}

/// One observed track and its advected prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPrediction {
    pub id: u64,
    pub predicted: Vec<Vec2>,
    pub actual: Vec<Vec2>,
    pub deviation: f64,
}

/// Advect from the first position of every track in `log` for as many steps
/// as the track has, and measure the deviation from what was observed.
///
/// Tracks are split as in [`TrackLog::trajectories`]; single-point tracks
/// are skipped.
pub fn predict_tracks(
    field: &FlowField,
    log: &TrackLog,
    dt: f64,
    speed_scale: f64,
    max_jump: f64,
) -> Result<Vec<TrackPrediction>> {
    let mut out = Vec::new();
    for (id, actual) in log.trajectories(max_jump) {
        if actual.len() < 2 {
            continue;
        }
        let predicted = advect(field, actual[0], dt, actual.len() - 1, speed_scale);
        let deviation = trajectory_deviation(&predicted, &actual)?;
        out.push(TrackPrediction {
            id,
            predicted,
            actual,
            deviation,
        });
    }
    Ok(out)
}

/// Mean of the per-track deviations; `None` without tracks.
pub fn mean_deviation(predictions: &[TrackPrediction]) -> Option<f64> {
    if predictions.is_empty() {
        return None;
    }
    Some(predictions.iter().map(|p| p.deviation).sum::<f64>() / predictions.len() as f64)
}
