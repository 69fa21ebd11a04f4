//! Per-iteration crowd observables and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::Neighborhood;
use crate::geometry::RegionLabel;
use crate::vec2::Vec2;

pub const CSV_HEADER: &str = "iteration,v_mean,r_mean,n_obs,n_neck";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    pub v_mean: f64,
    pub r_mean: f64,
    pub n_obs: usize,
    pub n_neck: usize,
}

/// Band `|x - center| <= half_width` around the corridor neck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeckBand {
    pub center: f64,
    pub half_width: f64,
}

impl NeckBand {
    pub fn contains(&self, p: Vec2) -> bool {
        (p.x - self.center).abs() <= self.half_width
    }
}

pub fn mean_speed(velocities: &[Vec2]) -> Result<f64> {
    if velocities.is_empty() {
        return Err(Error::Input("mean speed of an empty crowd".into()));
    }
    Ok(velocities.iter().map(|v| v.norm()).sum::<f64>() / velocities.len() as f64)
}

/// Average over agents of the mean distance to their neighbours.
/// Agents without neighbours are left out; returns 0 if every agent is isolated.
pub fn mean_neighbor_distance(positions: &[Vec2], neighborhoods: &[Neighborhood]) -> f64 {
    let mut total = 0.0;
    let mut counted = 0usize;
    for hood in neighborhoods {
        let n = hood.len() - 1;
        if n == 0 {
            continue;
        }
        let x = positions[hood.agent_id];
        total += hood.others().map(|l| positions[l].distance(x)).sum::<f64>() / n as f64;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

pub fn count_obstructed(regions: &[RegionLabel]) -> usize {
    regions.iter().filter(|r| **r == RegionLabel::II).count()
}

pub fn count_at_neck(positions: &[Vec2], band: &NeckBand) -> usize {
    positions.iter().filter(|p| band.contains(**p)).count()
}

pub fn write_csv<W: Write>(mut out: W, records: &[MetricsRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:.12},{:.12},{},{}",
            r.iteration, r.v_mean, r.r_mean, r.n_obs, r.n_neck
        )?;
    }
    Ok(())
}

/// Means of the four observables over a run of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMeans {
    pub iterations: usize,
    pub v_mean: f64,
    pub r_mean: f64,
    pub n_obs: f64,
    pub n_neck: f64,
}

impl WindowMeans {
    pub fn over(records: &[MetricsRecord]) -> Option<Self> {
        if records.is_empty() {
            return None;
        }
        let n = records.len() as f64;
        let mean = |f: fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        Some(WindowMeans {
            iterations: records.len(),
            v_mean: mean(|r| r.v_mean),
            r_mean: mean(|r| r.r_mean),
            n_obs: mean(|r| r.n_obs as f64),
            n_neck: mean(|r| r.n_neck as f64),
        })
    }

    /// Component-wise `self - other`; `iterations` is kept from `self`.
    pub fn minus(&self, other: &WindowMeans) -> WindowMeans {
        WindowMeans {
            iterations: self.iterations,
            v_mean: self.v_mean - other.v_mean,
            r_mean: self.r_mean - other.r_mean,
            n_obs: self.n_obs - other.n_obs,
            n_neck: self.n_neck - other.n_neck,
        }
    }
}

/// Index range of the neck window: from the first to the last record with
/// any agent in the neck band. `None` if the crowd never reaches the neck.
pub fn neck_window(records: &[MetricsRecord]) -> Option<std::ops::Range<usize>> {
    let first = records.iter().position(|r| r.n_neck > 0)?;
    let last = records.iter().rposition(|r| r.n_neck > 0)?;
    Some(first..last + 1)
}

/// Records before the crowd first reaches the neck.
pub fn wide_window(records: &[MetricsRecord]) -> &[MetricsRecord] {
    match neck_window(records) {
        Some(w) => &records[..w.start],
        None => records,
    }
}

pub fn total_obstructed(records: &[MetricsRecord]) -> usize {
    records.iter().map(|r| r.n_obs).sum()
}

/// Iteration of the largest neck count; the earliest one on ties.
pub fn peak_neck_iteration(records: &[MetricsRecord]) -> Option<usize> {
    let peak = records.iter().map(|r| r.n_neck).max()?;
    records.iter().find(|r| r.n_neck == peak).map(|r| r.iteration)
}

pub fn min_r_mean(records: &[MetricsRecord]) -> Option<(usize, f64)> {
    records
        .iter()
        .map(|r| (r.iteration, r.r_mean))
        .fold(None, |best, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        })
}
