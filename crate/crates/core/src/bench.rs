//! Scenario sweeps: every (kind, seed, planner) combination, run in parallel
//! and merged in a fixed order.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compare, Comparison, MetricsReport, VIOLATION_THRESHOLD};
use crate::sim::{
    generate_scenario, run_episode, EpisodeLog, EpisodeParams, PlannerKind, ScenarioKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub kinds: Vec<ScenarioKind>,
    pub seeds: Vec<u64>,
    /// Pedestrians per scenario; drawn per seed when unset.
    pub n_peds: Option<usize>,
    pub threshold: f64,
    pub episode: EpisodeParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            kinds: ScenarioKind::FLOWS.to_vec(),
            seeds: (1..=20).collect(),
            n_peds: None,
            threshold: VIOLATION_THRESHOLD,
            episode: EpisodeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub planner: PlannerKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Ordered by (kind, seed, planner).
    pub episodes: Vec<MetricsReport>,
    pub failures: Vec<EpisodeFailure>,
    /// FIPP against the baseline over the (kind, seed) pairs where both ran.
    pub comparison: Option<Comparison>,
}

/// Every job of the sweep in merge order.
pub fn jobs(config: &BenchConfig) -> Vec<(ScenarioKind, u64, PlannerKind)> {
    let kinds: BTreeSet<_> = config.kinds.iter().copied().collect();
    let seeds: BTreeSet<_> = config.seeds.iter().copied().collect();
    let mut out = Vec::new();
    for &kind in &kinds {
        for &seed in &seeds {
            for planner in PlannerKind::BOTH {
                out.push((kind, seed, planner));
            }
        }
    }
    out
}

/// Run the sweep. `sink` sees every finished episode log (from worker
/// threads, in no particular order); its errors count as episode failures.
pub fn run_bench<F>(config: &BenchConfig, sink: F) -> Result<BenchReport>
where
    F: Fn(&EpisodeLog) -> Result<()> + Sync,
{
    if config.seeds.is_empty() || config.kinds.is_empty() {
        return Err(Error::InvalidParameter(
            "a sweep needs at least one kind and one seed".into(),
        ));
    }
    config.episode.validate()?;
    let results: Vec<_> = jobs(config)
        .into_par_iter()
        .map(|(kind, seed, planner)| {
            let run = || -> Result<MetricsReport> {
                let scenario = generate_scenario(kind, config.n_peds, seed)?;
                let log = run_episode(&scenario, planner, &config.episode)?;
                sink(&log)?;
                MetricsReport::from_log(&log, config.threshold)
            };
            run().map_err(|e| EpisodeFailure {
                kind,
                seed,
                planner,
                message: e.to_string(),
            })
        })
        .collect();

    let mut episodes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(report) => episodes.push(report),
            Err(f) => failures.push(f),
        }
    }
    let comparison = paired_comparison(&episodes, config.threshold)?;
    Ok(BenchReport {
        episodes,
        failures,
        comparison,
    })
}

fn paired_comparison(episodes: &[MetricsReport], threshold: f64) -> Result<Option<Comparison>> {
    let of = |p: PlannerKind| -> Vec<MetricsReport> {
        episodes
            .iter()
            .filter(|r| r.planner == p.as_str())
            .cloned()
            .collect()
    };
    let (fipp, tr) = (of(PlannerKind::Fipp), of(PlannerKind::Tr));
    let keys = |set: &[MetricsReport]| -> BTreeSet<(ScenarioKind, u64)> {
        set.iter().map(|r| (r.kind, r.seed)).collect()
    };
    let both: BTreeSet<_> = keys(&fipp).intersection(&keys(&tr)).copied().collect();
    let keep = |set: Vec<MetricsReport>| -> Vec<MetricsReport> {
        set.into_iter()
            .filter(|r| both.contains(&(r.kind, r.seed)))
            .collect()
    };
    let (fipp, tr) = (keep(fipp), keep(tr));
    if fipp.is_empty() {
        return Ok(None);
    }
    compare(&fipp, &tr, threshold).map(Some)
}
