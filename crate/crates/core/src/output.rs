//! File formats: metrics CSV, trajectory JSON lines, run manifest and SVG plots.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::engine::TrajectoryLog;
use crate::error::{Error, Result};
use crate::geometry::Corridor;
use crate::metrics::MetricsRecord;
use crate::vec2::Vec2;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_SVG: &str = "trajectory.svg";

const WALL_SEGMENTS: usize = 200;
const SVG_WIDTH: f64 = 900.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_secs: f64,
}

/// SHA-256 of the canonical config text, so equal configs hash equally
/// regardless of comments, key order or the platform's line endings.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_text().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(Error::file(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// One JSON object per agent and logged iteration, iteration-major.
pub fn write_trajectory<W: Write>(mut out: W, log: &TrajectoryLog) -> Result<()> {
    for rec in log.records() {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

struct Bounds {
    lo: Vec2,
    hi: Vec2,
}

impl Bounds {
    fn of<'a>(points: impl IntoIterator<Item = &'a Vec2>) -> Self {
        let mut b = Bounds {
            lo: Vec2::new(f64::INFINITY, f64::INFINITY),
            hi: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            b.lo = Vec2::new(b.lo.x.min(p.x), b.lo.y.min(p.y));
            b.hi = Vec2::new(b.hi.x.max(p.x), b.hi.y.max(p.y));
        }
        if !b.lo.is_finite() || !b.hi.is_finite() {
            b = Bounds {
                lo: Vec2::ZERO,
                hi: Vec2::new(1.0, 1.0),
            };
        }
        b
    }
}

fn path_data(points: &[Vec2]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.3} {:.3}", if i == 0 { "M" } else { " L" }, p.x, -p.y);
    }
    d
}

/// Corridor walls, one path per agent and the target path, in world units
/// with y pointing up.
pub fn trajectory_svg(corridor: &Corridor, log: &TrajectoryLog) -> String {
    let (x0, x1) = corridor.domain();
    let wall = |f: &dyn Fn(f64) -> f64| -> Vec<Vec2> {
        (0..=WALL_SEGMENTS)
            .map(|i| {
                let x = x0 + (x1 - x0) * i as f64 / WALL_SEGMENTS as f64;
                Vec2::new(x, f(x))
            })
            .collect()
    };
    let upper = wall(&|x| corridor.upper().value(x));
    let lower = wall(&|x| corridor.lower().value(x));
    let n = log.frames.first().map_or(0, |f| f.agents.len());
    let agents: Vec<Vec<Vec2>> = (0..n).map(|k| log.path(k)).collect();
    let target = log.target_path();

    let b = Bounds::of(upper.iter().chain(&lower).chain(agents.iter().flatten()).chain(&target));
    let pad = 0.03 * (b.hi.x - b.lo.x).max(b.hi.y - b.lo.y).max(1.0);
    let (w, h) = (b.hi.x - b.lo.x + 2.0 * pad, b.hi.y - b.lo.y + 2.0 * pad);
    let stroke = 0.002 * w.max(h);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        SVG_WIDTH,
        SVG_WIDTH * h / w,
        b.lo.x - pad,
        -b.hi.y - pad,
        w,
        h
    );
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{w:.3}" height="{h:.3}" fill="white"/>"#,
        b.lo.x - pad,
        -b.hi.y - pad
    );
    for (id, pts) in [("upper-wall", &upper), ("lower-wall", &lower)] {
        let _ = writeln!(
            s,
            r#"<path id="{id}" d="{}" fill="none" stroke="black" stroke-width="{:.4}"/>"#,
            path_data(pts),
            2.0 * stroke
        );
    }
    for (k, pts) in agents.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<path id="agent-{k}" d="{}" fill="none" stroke="steelblue" stroke-opacity="0.6" stroke-width="{stroke:.4}"/>"#,
            path_data(pts)
        );
    }
    let _ = writeln!(
        s,
        r#"<path id="target" d="{}" fill="none" stroke="crimson" stroke-dasharray="{:.4}" stroke-width="{:.4}"/>"#,
        path_data(&target),
        4.0 * stroke,
        1.5 * stroke
    );
    s.push_str("</svg>\n");
    s
}

/// Four stacked panels (v_mean, r_mean, n_obs, n_neck), one polyline per series.
pub fn metrics_svg(series: &[(&str, &[MetricsRecord])]) -> String {
    const PANEL_W: f64 = 600.0;
    const PANEL_H: f64 = 150.0;
    const GAP: f64 = 30.0;
    const COLORS: [&str; 4] = ["crimson", "steelblue", "darkgreen", "darkorange"];
    type Getter = fn(&MetricsRecord) -> f64;
    let panels: [(&str, Getter); 4] = [
        ("v_mean", |r| r.v_mean),
        ("r_mean", |r| r.r_mean),
        ("n_obs", |r| r.n_obs as f64),
        ("n_neck", |r| r.n_neck as f64),
    ];
    let iters = series
        .iter()
        .flat_map(|(_, m)| m.iter().map(|r| r.iteration))
        .max()
        .unwrap_or(1)
        .max(1) as f64;

    let mut s = String::new();
    let height = 4.0 * (PANEL_H + GAP) + GAP;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#,
        PANEL_W + 2.0 * GAP
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (name, get)) in panels.iter().enumerate() {
        let top = GAP + i as f64 * (PANEL_H + GAP);
        let values = series.iter().flat_map(|(_, m)| m.iter().map(get));
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (lo, hi) = if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0), lo.max(0.0) + 1.0)
        };
        let _ = writeln!(
            s,
            r#"<rect x="{GAP}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="gray"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{name} [{lo:.3}, {hi:.3}]</text>"#,
            GAP + 4.0,
            top - 6.0
        );
        for (j, (_, m)) in series.iter().enumerate() {
            let pts = m.iter().fold(String::new(), |mut acc, r| {
                let x = GAP + PANEL_W * r.iteration as f64 / iters;
                let y = top + PANEL_H * (1.0 - (get(r) - lo) / (hi - lo));
                let _ = write!(acc, "{}{x:.2},{y:.2}", if acc.is_empty() { "" } else { " " });
                acc
            });
            let _ = writeln!(
                s,
                r#"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                COLORS[j % COLORS.len()]
            );
        }
    }
    for (j, (label, _)) in series.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}">{label}</text>"#,
            GAP + 150.0 * j as f64,
            height - 8.0,
            COLORS[j % COLORS.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_comments_and_layout() {
        let a = ScenarioConfig::parse("agents = 12\nseed = 3\n").unwrap();
        let b = ScenarioConfig::parse("# note\r\nseed=3\r\n\r\nagents   =  12\r\n").unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        let c = ScenarioConfig::parse("agents = 13\nseed = 3\n").unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn path_data_flips_y() {
        assert_eq!(
            path_data(&[Vec2::new(1.0, 2.0), Vec2::new(3.0, -4.5)]),
            "M1.000 -2.000 L3.000 4.500"
        );
    }
}
