//! Social-compliance and efficiency metrics over episode logs, and the
//! two-planner comparison report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{EpisodeLog, Outcome, ScenarioKind};

/// Robot–pedestrian distance below which a step counts as a social violation, meters.
pub const VIOLATION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxemicZone {
    /// Closer than 1 m.
    Intimate,
    /// 1 m to 4 m.
    Social,
    BeyondSocial,
}

pub fn proxemic_zone(d: f64) -> Result<ProxemicZone> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::NegativeDistance(d));
    }
    Ok(if d < 1.0 {
        ProxemicZone::Intimate
    } else if d <= 4.0 {
        ProxemicZone::Social
    } else {
        ProxemicZone::BeyondSocial
    })
}

/// `(steps, events)` for a sequence of per-step minimum distances: steps
/// closer than `threshold`, and maximal runs of such steps. Steps without
/// pedestrians (`None`) never violate.
pub fn count_violations<I>(min_distances: I, threshold: f64) -> (usize, usize)
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut steps = 0;
    let mut events = 0;
    let mut inside = false;
    for d in min_distances {
        let violating = d.is_some_and(|d| d < threshold);
        if violating {
            steps += 1;
            if !inside {
                events += 1;
            }
        }
        inside = violating;
    }
    (steps, events)
}

/// `(violations_steps, violation_events)` of an episode.
pub fn social_violations(log: &EpisodeLog, threshold: f64) -> Result<(usize, usize)> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    if log.records.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(count_violations(
        log.records.iter().map(|r| r.min_distance()),
        threshold,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    /// Time of arrival, or the episode's time limit when the goal was not reached, s.
    pub time_to_goal: f64,
    /// m.
    pub path_length: f64,
    /// m/s.
    pub avg_velocity: f64,
}

pub fn efficiency(log: &EpisodeLog) -> Result<Efficiency> {
    let (first, last) = match (log.records.first(), log.records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyLog),
    };
    let path_length = log
        .records
        .windows(2)
        .map(|w| w[0].robot.position.distance(w[1].robot.position))
        .sum::<f64>();
    let time_to_goal = match log.outcome {
        Outcome::Reached => last.t - first.t,
        Outcome::Timeout | Outcome::Frozen => log.params.max_t,
    };
    if time_to_goal.is_nan() || time_to_goal <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    Ok(Efficiency {
        time_to_goal,
        path_length,
        avg_velocity: path_length / time_to_goal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub planner: String,
    pub outcome: Outcome,
    pub violations_steps: usize,
    pub violation_events: usize,
    pub time_to_goal: f64,
    pub path_length: f64,
    pub avg_velocity: f64,
    /// Closest robot–pedestrian approach over the episode, m.
    pub min_distance: Option<f64>,
}

impl MetricsReport {
    pub fn from_log(log: &EpisodeLog, threshold: f64) -> Result<Self> {
        let (violations_steps, violation_events) = social_violations(log, threshold)?;
        let eff = efficiency(log)?;
        Ok(Self {
            kind: log.scenario.kind,
            seed: log.scenario.seed,
            planner: log.planner.to_string(),
            outcome: log.outcome,
            violations_steps,
            violation_events,
            time_to_goal: eff.time_to_goal,
            path_length: eff.path_length,
            avg_velocity: eff.avg_velocity,
            min_distance: log
                .records
                .iter()
                .filter_map(|r| r.min_distance())
                .reduce(f64::min),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Some(Stats {
            n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub episodes: usize,
    pub reached: usize,
    pub timeout: usize,
    pub frozen: usize,
    pub violation_events: Stats,
    pub violations_steps: Stats,
    /// Unreached episodes count at the time limit.
    pub time_to_goal: Stats,
    pub path_length: Stats,
    /// Over reached episodes only; `None` when none reached.
    pub avg_velocity: Option<Stats>,
}

impl PlannerSummary {
    fn of(planner: &str, reports: &[&MetricsReport]) -> Self {
        let stat = |f: fn(&MetricsReport) -> f64| {
            let v: Vec<f64> = reports.iter().map(|r| f(r)).collect();
            Stats::of(&v).expect("summaries are built from non-empty sets")
        };
        let count = |o: Outcome| reports.iter().filter(|r| r.outcome == o).count();
        let reached_velocities: Vec<f64> = reports
            .iter()
            .filter(|r| r.outcome == Outcome::Reached)
            .map(|r| r.avg_velocity)
            .collect();
        Self {
            planner: planner.to_string(),
            episodes: reports.len(),
            reached: count(Outcome::Reached),
            timeout: count(Outcome::Timeout),
            frozen: count(Outcome::Frozen),
            violation_events: stat(|r| r.violation_events as f64),
            violations_steps: stat(|r| r.violations_steps as f64),
            time_to_goal: stat(|r| r.time_to_goal),
            path_length: stat(|r| r.path_length),
            avg_velocity: Stats::of(&reached_velocities),
        }
    }
}

/// Differences `a - b` between two summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub violation_events_median: f64,
    pub violation_events_mean: f64,
    pub violations_steps_median: f64,
    pub time_to_goal_median: f64,
    pub time_to_goal_mean: f64,
    pub path_length_mean: f64,
}

impl Deltas {
    fn between(a: &PlannerSummary, b: &PlannerSummary) -> Self {
        Self {
            violation_events_median: a.violation_events.median - b.violation_events.median,
            violation_events_mean: a.violation_events.mean - b.violation_events.mean,
            violations_steps_median: a.violations_steps.median - b.violations_steps.median,
            time_to_goal_median: a.time_to_goal.median - b.time_to_goal.median,
            time_to_goal_mean: a.time_to_goal.mean - b.time_to_goal.mean,
            path_length_mean: a.path_length.mean - b.path_length.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindComparison {
    pub kind: ScenarioKind,
    pub a: PlannerSummary,
    pub b: PlannerSummary,
    pub deltas: Deltas,
    /// Planner with the strictly lower median violation-event count.
    pub winner: Option<String>,
    /// Episodes in which each planner had fewer violation events, and ties.
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub threshold: f64,
    pub a: PlannerSummary,
    pub b: PlannerSummary,
    pub deltas: Deltas,
    pub winner: Option<String>,
    pub per_kind: Vec<KindComparison>,
}

fn planner_label(reports: &[MetricsReport]) -> String {
    let first = &reports[0].planner;
    if reports.iter().all(|r| &r.planner == first) {
        first.clone()
    } else {
        "mixed".to_string()
    }
}

fn winner(a: &PlannerSummary, b: &PlannerSummary) -> Option<String> {
    let (x, y) = (a.violation_events.median, b.violation_events.median);
    if x < y {
        Some(a.planner.clone())
    } else if y < x {
        Some(b.planner.clone())
    } else {
        None
    }
}

/// Compare two planners run over the same (kind, seed) episodes.
pub fn compare(a: &[MetricsReport], b: &[MetricsReport], threshold: f64) -> Result<Comparison> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "each planner needs at least one report".into(),
        ));
    }
    let key = |r: &MetricsReport| (r.kind, r.seed);
    let index = |set: &[MetricsReport]| -> Result<BTreeMap<(ScenarioKind, u64), usize>> {
        let mut m = BTreeMap::new();
        for (k, r) in set.iter().enumerate() {
            if m.insert(key(r), k).is_some() {
                return Err(Error::MismatchedScenarios);
            }
        }
        Ok(m)
    };
    let ia = index(a)?;
    let ib = index(b)?;
    if !ia.keys().eq(ib.keys()) {
        return Err(Error::MismatchedScenarios);
    }
    let (la, lb) = (planner_label(a), planner_label(b));

    let mut per_kind = Vec::new();
    let kinds: Vec<ScenarioKind> = {
        let mut k: Vec<_> = ia.keys().map(|&(kind, _)| kind).collect();
        k.dedup();
        k
    };
    for kind in kinds {
        let pairs: Vec<(&MetricsReport, &MetricsReport)> = ia
            .range((kind, 0)..=(kind, u64::MAX))
            .map(|(k, &i)| (&a[i], &b[ib[k]]))
            .collect();
        let ra: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let rb: Vec<_> = pairs.iter().map(|p| p.1).collect();
        let sa = PlannerSummary::of(&la, &ra);
        let sb = PlannerSummary::of(&lb, &rb);
        let mut wins = (0, 0, 0);
        for (x, y) in &pairs {
            match x.violation_events.cmp(&y.violation_events) {
                std::cmp::Ordering::Less => wins.0 += 1,
                std::cmp::Ordering::Greater => wins.1 += 1,
                std::cmp::Ordering::Equal => wins.2 += 1,
            }
        }
        per_kind.push(KindComparison {
            kind,
            deltas: Deltas::between(&sa, &sb),
            winner: winner(&sa, &sb),
            a: sa,
            b: sb,
            a_wins: wins.0,
            b_wins: wins.1,
            ties: wins.2,
        });
    }

    let all_a: Vec<_> = ia.values().map(|&i| &a[i]).collect();
    let all_b: Vec<_> = ib.values().map(|&i| &b[i]).collect();
    let sa = PlannerSummary::of(&la, &all_a);
    let sb = PlannerSummary::of(&lb, &all_b);
    Ok(Comparison {
        threshold,
        deltas: Deltas::between(&sa, &sb),
        winner: winner(&sa, &sb),
        a: sa,
        b: sb,
        per_kind,
    })
}

impl Comparison {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned plain-text table, one row per scenario kind and planner.
    pub fn to_table(&self) -> String {
        let header = [
            "scenario",
            "planner",
            "n",
            "reached",
            "frozen",
            "timeout",
            "events_med",
            "events_mean",
            "steps_med",
            "ttg_med",
            "ttg_mean",
            "vel_mean",
        ];
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut push = |scope: &str, s: &PlannerSummary| {
            rows.push(vec![
                scope.to_string(),
                s.planner.clone(),
                s.episodes.to_string(),
                s.reached.to_string(),
                s.frozen.to_string(),
                s.timeout.to_string(),
                format!("{:.1}", s.violation_events.median),
                format!("{:.2}", s.violation_events.mean),
                format!("{:.1}", s.violations_steps.median),
                format!("{:.1}", s.time_to_goal.median),
                format!("{:.1}", s.time_to_goal.mean),
                s.avg_velocity
                    .map_or("-".to_string(), |v| format!("{:.3}", v.mean)),
            ]);
        };
        for k in &self.per_kind {
            push(k.kind.as_str(), &k.a);
            push(k.kind.as_str(), &k.b);
        }
        push("all", &self.a);
        push("all", &self.b);

        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let mut line = |cells: &[&str]| {
            let text: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c < 2 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", text.join("  ").trim_end());
        };
        line(&header);
        for r in &rows {
            let cells: Vec<&str> = r.iter().map(String::as_str).collect();
            line(&cells);
        }
        out.push('\n');
        for k in &self.per_kind {
            let _ = writeln!(
                out,
                "{}: winner {} ({} {} / {} {} / {} tied episodes)",
                k.kind,
                k.winner.as_deref().unwrap_or("none"),
                k.a_wins,
                k.a.planner,
                k.b_wins,
                k.b.planner,
                k.ties
            );
        }
        let _ = writeln!(
            out,
            "all: winner {}",
            self.winner.as_deref().unwrap_or("none")
        );
        out
    }
}
