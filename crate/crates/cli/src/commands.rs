//! One function per subcommand. Each writes into `cfg.out` and returns the
//! text to print.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fipp::bench::{run_bench, BenchConfig};
use fipp::flowfield::io::{read_field, read_track_log, write_field, write_track_log};
use fipp::flowfield::{
    advect, mean_deviation, predict_tracks, FlowField, GridSpec, TrackPrediction,
};
use fipp::metrics::MetricsReport;
use fipp::planner::export::{summary_line, write_plan};
use fipp::planner::plan as plan_path;
use fipp::sim::log::write_episode_log;
use fipp::sim::{generate_scenario, run_episode, EpisodeLog};
use fipp::{Rect, Vec2};
use serde::Serialize;

use crate::config::RunConfig;
use crate::exit::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Create the output directory and persist the effective configuration.
pub fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::internal(format!("{}: {e}", cfg.out.display())))?;
    write_text(&cfg.out.join(CONFIG_FILE), &cfg.to_toml()?)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> fipp::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|()| w.flush().map_err(Into::into))
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

fn load_field(path: &Path) -> Result<FlowField, CliError> {
    read_field(open(path)?).map_err(|e| CliError::from(e).context(path.display()))
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    inputs: Vec<String>,
    outputs: Vec<&'a str>,
    summary: T,
}

fn write_manifest<T: Serialize>(
    cfg: &RunConfig,
    command: &str,
    inputs: &[&Path],
    outputs: &[&str],
    summary: T,
) -> Result<(), CliError> {
    let m = Manifest {
        command,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.to_vec(),
        summary,
    };
    write_json(&cfg.out.join(MANIFEST_FILE), &m)
}

#[derive(Serialize)]
struct ExtractSummary {
    frames: usize,
    observations: usize,
    dropped: usize,
    cells: usize,
}

pub fn extract(cfg: &RunConfig, tracks: &Path) -> Result<String, CliError> {
    let log = read_track_log(open(tracks)?, cfg.v_ped_max)
        .map_err(|e| CliError::from(e).context(tracks.display()))?;
    let bounds = Rect::from_size(cfg.world.width, cfg.world.height);
    let spec = GridSpec::covering(bounds, cfg.params.cell_size)?;
    let (field, dropped) = FlowField::extract(spec, &log, &cfg.params.flow)?;
    write_with(&cfg.out.join("field.csv"), |w| write_field(w, &field))?;
    let summary = ExtractSummary {
        frames: log.frames.len(),
        observations: log.frames.iter().map(|f| f.observations.len()).sum(),
        dropped,
        cells: spec.cell_count(),
    };
    let text = format!(
        "extracted {} frames ({} observations, {} outside the grid) onto {}x{} cells",
        summary.frames, summary.observations, summary.dropped, spec.width, spec.height
    );
    write_manifest(cfg, "extract", &[tracks], &["field.csv"], summary)?;
    Ok(text)
}

#[derive(Serialize)]
struct PredictSummary {
    trajectories: usize,
    mean_deviation: Option<f64>,
}

pub fn predict(
    cfg: &RunConfig,
    field_path: &Path,
    tracks: Option<&Path>,
    starts: &[Vec2],
) -> Result<String, CliError> {
    let field = load_field(field_path)?;
    let scale = cfg.speed_scale();
    let mut inputs: Vec<&Path> = vec![field_path];
    let mut outputs = vec!["trajectories.csv"];
    let mut rows: Vec<(u64, Vec<Vec2>)> = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            (
                k as u64,
                advect(&field, s, cfg.predict.dt, cfg.predict.steps, scale),
            )
        })
        .collect();
    let mut predictions: Vec<TrackPrediction> = Vec::new();
    if let Some(path) = tracks {
        inputs.push(path);
        let log = read_track_log(open(path)?, cfg.v_ped_max)
            .map_err(|e| CliError::from(e).context(path.display()))?;
        predictions = predict_tracks(&field, &log, cfg.predict.dt, scale, cfg.predict.max_jump)?;
        rows.extend(predictions.iter().map(|p| (p.id, p.predicted.clone())));
        outputs.push("deviation.csv");
    }
    if rows.is_empty() {
        return Err(CliError::input(
            "give at least one --start or a --tracks log",
        ));
    }

    write_with(&cfg.out.join("trajectories.csv"), |w| {
        writeln!(w, "# trajectory,id,k,x,y")?;
        for (n, (id, points)) in rows.iter().enumerate() {
            for (k, p) in points.iter().enumerate() {
                writeln!(w, "{n},{id},{k},{},{}", p.x, p.y)?;
            }
        }
        Ok(())
    })?;
    let mean = mean_deviation(&predictions);
    if tracks.is_some() {
        write_with(&cfg.out.join("deviation.csv"), |w| {
            writeln!(w, "# id,points,deviation")?;
            for p in &predictions {
                writeln!(w, "{},{},{}", p.id, p.actual.len(), p.deviation)?;
            }
            if let Some(m) = mean {
                writeln!(w, "# mean {m}")?;
            }
            Ok(())
        })?;
    }
    let text = match mean {
        Some(m) => format!(
            "{} trajectories; mean deviation {m:.4} m over {} tracks",
            rows.len(),
            predictions.len()
        ),
        None => format!("{} trajectories", rows.len()),
    };
    let summary = PredictSummary {
        trajectories: rows.len(),
        mean_deviation: mean,
    };
    write_manifest(cfg, "predict", &inputs, &outputs, summary)?;
    Ok(text)
}

/// Read `i,j` rows into a per-cell mask.
fn load_blocked(path: &Path, spec: &GridSpec) -> Result<Vec<bool>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut blocked = vec![false; spec.cell_count()];
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || {
            CliError::input(format!(
                "{}: line {}: expected `i,j`",
                path.display(),
                k + 1
            ))
        };
        let (i, j) = line.split_once(',').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let j: usize = j.trim().parse().map_err(|_| bad())?;
        if i >= spec.width || j >= spec.height {
            return Err(CliError::input(format!(
                "{}: line {}: cell ({i}, {j}) lies outside the grid",
                path.display(),
                k + 1
            )));
        }
        blocked[spec.index(i, j)] = true;
    }
    Ok(blocked)
}

pub fn plan(
    cfg: &RunConfig,
    field_path: &Path,
    start: Vec2,
    goal: Vec2,
    blocked: Option<&Path>,
) -> Result<String, CliError> {
    let field = load_field(field_path)?;
    let mut inputs = vec![field_path];
    let mask = match blocked {
        Some(path) => {
            inputs.push(path);
            load_blocked(path, &field.spec)?
        }
        None => Vec::new(),
    };
    let result = plan_path(&field, start, goal, &cfg.params.cost, &mask)?;
    write_with(&cfg.out.join("plan.csv"), |w| {
        write_plan(w, &field.spec, &result)
    })?;
    let line = summary_line(&result);
    write_manifest(cfg, "plan", &inputs, &["plan.csv"], &line)?;
    Ok(line)
}

pub fn simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let scenario = generate_scenario(cfg.scenario.kind, cfg.scenario.n_peds, cfg.seed)?;
    let log = run_episode(&scenario, cfg.scenario.planner, &cfg.params)?;
    let report = MetricsReport::from_log(&log, cfg.threshold)?;
    write_text(
        &cfg.out.join("scenario.json"),
        &(scenario.to_json()? + "\n"),
    )?;
    write_with(&cfg.out.join("episode.jsonl"), |w| {
        write_episode_log(w, &log)
    })?;
    write_with(&cfg.out.join("tracks.csv"), |w| {
        write_track_log(w, &log.track_log())
    })?;
    write_json(&cfg.out.join("metrics.json"), &report)?;
    let text = format!(
        "{} seed {} {}: {} after {:.1} s, {} violation events, path {:.2} m",
        report.kind,
        report.seed,
        report.planner,
        report.outcome,
        report.time_to_goal,
        report.violation_events,
        report.path_length
    );
    write_manifest(
        cfg,
        "simulate",
        &[],
        &[
            "scenario.json",
            "episode.jsonl",
            "tracks.csv",
            "metrics.json",
        ],
        &report,
    )?;
    Ok(text)
}

pub fn episode_file(log: &EpisodeLog) -> PathBuf {
    PathBuf::from(format!(
        "{}_{:04}_{}.jsonl",
        log.scenario.kind, log.scenario.seed, log.planner
    ))
}

pub fn bench(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = cfg.out.join("episodes");
    fs::create_dir_all(&dir).map_err(|e| CliError::internal(format!("{}: {e}", dir.display())))?;
    let config = BenchConfig {
        kinds: cfg.bench.kinds.clone(),
        seeds: cfg.bench.seeds.clone(),
        n_peds: cfg.scenario.n_peds,
        threshold: cfg.threshold,
        episode: cfg.params.clone(),
    };
    let report = run_bench(&config, |log| {
        let path = dir.join(episode_file(log));
        let mut w = BufWriter::new(File::create(&path)?);
        write_episode_log(&mut w, log)?;
        w.flush()?;
        Ok(())
    })?;
    write_json(&cfg.out.join("report.json"), &report)?;
    let mut text = match &report.comparison {
        Some(c) => c.to_table(),
        None => "no episode pair finished\n".to_string(),
    };
    for f in &report.failures {
        text.push_str(&format!(
            "failed: {} seed {} {}: {}\n",
            f.kind, f.seed, f.planner, f.message
        ));
    }
    write_text(&cfg.out.join("summary.txt"), &text)?;
    #[derive(Serialize)]
    struct BenchSummary {
        episodes: usize,
        failures: usize,
    }
    write_manifest(
        cfg,
        "bench",
        &[],
        &["episodes/", "report.json", "summary.txt"],
        BenchSummary {
            episodes: report.episodes.len(),
            failures: report.failures.len(),
        },
    )?;
    Ok(text.trim_end().to_string())
}
