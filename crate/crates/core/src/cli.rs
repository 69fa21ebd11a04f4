//! The `run`, `compare` and `sweep` commands, callable without the binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::engine::{run, RunOutput};
use crate::error::{Error, Result};
use crate::metrics::{
    min_r_mean, neck_window, peak_neck_iteration, total_obstructed, wide_window, write_csv, MetricsRecord, WindowMeans,
};
use crate::output::{
    config_hash, metrics_svg, trajectory_svg, write_file, write_json, write_trajectory, RunManifest, MANIFEST_FILE,
    METRICS_FILE, TRAJECTORY_FILE, TRAJECTORY_SVG,
};

pub const COMPARE_CSV: &str = "compare.csv";
pub const COMPARE_SUMMARY: &str = "compare_summary.json";
pub const COMPARE_SVG: &str = "compare_metrics.svg";
pub const SWEEP_CSV: &str = "sweep_r_mean.csv";
pub const SWEEP_SUMMARY: &str = "sweep_summary.json";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
}

pub fn load_config(path: &Path, overrides: Overrides) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_file(path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(k) = overrides.iterations {
        cfg.iterations = k;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::file(dir))
}

fn buffered(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(Error::file(path))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(Error::file(path))
}

/// Runs one scenario and writes metrics, trajectory, SVG plot and manifest into `out`.
pub fn run_to_dir(config: &ScenarioConfig, out: &Path) -> Result<(RunOutput, RunManifest)> {
    let started = Instant::now();
    let result = run(config)?;
    create_dir(out)?;

    let metrics_path = out.join(METRICS_FILE);
    let mut w = buffered(&metrics_path)?;
    write_csv(&mut w, &result.metrics)?;
    finish(w, &metrics_path)?;

    let traj_path = out.join(TRAJECTORY_FILE);
    let mut w = buffered(&traj_path)?;
    write_trajectory(&mut w, &result.trajectory)?;
    finish(w, &traj_path)?;

    let svg_path = out.join(TRAJECTORY_SVG);
    write_file(
        &svg_path,
        trajectory_svg(&config.corridor()?, &result.trajectory).as_bytes(),
    )?;

    let manifest_path = out.join(MANIFEST_FILE);
    let manifest = RunManifest {
        config_hash: config_hash(config),
        seed: config.seed,
        outputs: vec![metrics_path, traj_path, svg_path, manifest_path.clone()],
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs: started.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path, &manifest)?;
    Ok((result, manifest))
}

pub fn cmd_run(config_path: &Path, out: &Path, overrides: Overrides) -> Result<RunManifest> {
    let cfg = load_config(config_path, overrides)?;
    run_to_dir(&cfg, out).map(|(_, m)| m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// Means over the neck window; `None` if the crowd never reached the neck.
    pub neck_window: Option<WindowMeans>,
    pub wide_window: Option<WindowMeans>,
    pub total_n_obs: usize,
    pub peak_n_neck_iteration: Option<usize>,
}

impl RunSummary {
    pub fn of(metrics: &[MetricsRecord]) -> Self {
        RunSummary {
            neck_window: neck_window(metrics).and_then(|w| WindowMeans::over(&metrics[w])),
            wide_window: WindowMeans::over(wide_window(metrics)),
            total_n_obs: total_obstructed(metrics),
            peak_n_neck_iteration: peak_neck_iteration(metrics),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub seed: u64,
    pub agents: usize,
    pub adaptive: RunSummary,
    pub non_adaptive: RunSummary,
    /// Adaptive minus non-adaptive neck-window means.
    pub neck_window_difference: Option<WindowMeans>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub adaptive: Vec<MetricsRecord>,
    pub non_adaptive: Vec<MetricsRecord>,
    pub summary: CompareSummary,
}

/// The same scenario and seed with width adaptation switched on and off.
pub fn compare(config: &ScenarioConfig) -> Result<Comparison> {
    let with = |avid| {
        let mut cfg = config.clone();
        cfg.avid = avid;
        run(&cfg).map(|o| o.metrics)
    };
    let adaptive = with(true)?;
    let non_adaptive = with(false)?;
    let a = RunSummary::of(&adaptive);
    let b = RunSummary::of(&non_adaptive);
    let difference = match (&a.neck_window, &b.neck_window) {
        (Some(x), Some(y)) => Some(x.minus(y)),
        _ => None,
    };
    Ok(Comparison {
        summary: CompareSummary {
            seed: config.seed,
            agents: config.agents,
            adaptive: a,
            non_adaptive: b,
            neck_window_difference: difference,
        },
        adaptive,
        non_adaptive,
    })
}

pub fn write_compare_csv<W: Write>(mut out: W, a: &[MetricsRecord], b: &[MetricsRecord]) -> Result<()> {
    writeln!(
        out,
        "iteration,v_mean_adaptive,v_mean_non_adaptive,r_mean_adaptive,r_mean_non_adaptive,\
         n_obs_adaptive,n_obs_non_adaptive,n_neck_adaptive,n_neck_non_adaptive"
    )?;
    for (x, y) in a.iter().zip(b) {
        writeln!(
            out,
            "{},{:.12},{:.12},{:.12},{:.12},{},{},{},{}",
            x.iteration, x.v_mean, y.v_mean, x.r_mean, y.r_mean, x.n_obs, y.n_obs, x.n_neck, y.n_neck
        )?;
    }
    Ok(())
}

pub fn cmd_compare(config_path: &Path, out: &Path, overrides: Overrides) -> Result<CompareSummary> {
    let cfg = load_config(config_path, overrides)?;
    let c = compare(&cfg)?;
    create_dir(out)?;
    let csv = out.join(COMPARE_CSV);
    let mut w = buffered(&csv)?;
    write_compare_csv(&mut w, &c.adaptive, &c.non_adaptive)?;
    finish(w, &csv)?;
    write_json(&out.join(COMPARE_SUMMARY), &c.summary)?;
    let svg = metrics_svg(&[("adaptive", &c.adaptive), ("non-adaptive", &c.non_adaptive)]);
    write_file(&out.join(COMPARE_SVG), svg.as_bytes())?;
    Ok(c.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub agents: usize,
    pub min_r_mean: Option<f64>,
    pub min_r_mean_iteration: Option<usize>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub runs: Vec<(usize, Vec<MetricsRecord>)>,
    pub entries: Vec<SweepEntry>,
}

/// One run per population size, all with the config's seed. Runs are
/// independent and execute on separate threads.
pub fn sweep(config: &ScenarioConfig, populations: &[usize]) -> Result<Sweep> {
    if populations.is_empty() || populations.contains(&0) {
        return Err(Error::Input("sweep needs one or more positive population sizes".into()));
    }
    let results: Vec<Result<Vec<MetricsRecord>>> = std::thread::scope(|s| {
        let handles: Vec<_> = populations
            .iter()
            .map(|&n| {
                let mut cfg = config.clone();
                cfg.agents = n;
                s.spawn(move || run(&cfg).map(|o| o.metrics))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let runs = populations
        .iter()
        .copied()
        .zip(results)
        .map(|(n, r)| r.map(|m| (n, m)))
        .collect::<Result<Vec<_>>>()?;
    let entries = runs
        .iter()
        .map(|(n, m)| {
            let min = min_r_mean(m);
            SweepEntry {
                agents: *n,
                min_r_mean: min.map(|x| x.1),
                min_r_mean_iteration: min.map(|x| x.0),
                summary: RunSummary::of(m),
            }
        })
        .collect();
    Ok(Sweep { runs, entries })
}

pub fn write_sweep_csv<W: Write>(mut out: W, runs: &[(usize, Vec<MetricsRecord>)]) -> Result<()> {
    let header: Vec<String> = runs.iter().map(|(n, _)| format!("r_mean_n{n}")).collect();
    writeln!(out, "iteration,{}", header.join(","))?;
    let rows = runs.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut line = format!("{}", i + 1);
        for (_, m) in runs {
            match m.get(i) {
                Some(r) => line.push_str(&format!(",{:.12}", r.r_mean)),
                None => line.push(','),
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn cmd_sweep(
    config_path: &Path,
    populations: &[usize],
    out: &Path,
    overrides: Overrides,
) -> Result<Vec<SweepEntry>> {
    let cfg = load_config(config_path, overrides)?;
    let s = sweep(&cfg, populations)?;
    create_dir(out)?;
    let csv = out.join(SWEEP_CSV);
    let mut w = buffered(&csv)?;
    write_sweep_csv(&mut w, &s.runs)?;
    finish(w, &csv)?;
    write_json(&out.join(SWEEP_SUMMARY), &s.entries)?;
    Ok(s.entries)
}

/// Output directory used when none is given: `out/<command>`.
pub fn default_out_dir(command: &str) -> PathBuf {
    Path::new("out").join(command)
}
