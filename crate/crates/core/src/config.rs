//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # comments run to end of line
//! agents = 40
//! avid = true
//! x_domain = [-76, -14]
//! target = waypoints
//! ```
//!
//! Every key is optional; unset keys keep their default. Unknown or
//! repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Corridor, WallFunction, WallSide};
use crate::motion::MotionParams;
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TargetModel {
    Static {
        position: Vec2,
    },
    /// Moves at constant speed along the polyline and stops at its last vertex.
    Waypoints {
        points: Vec<Vec2>,
        speed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub agents: usize,
    pub iterations: usize,
    pub seed: u64,
    pub motion: MotionParams,
    pub neighborhood_radius: f64,
    /// Step size of the target-location adaptation.
    pub mu: f64,
    /// Step size of the group-velocity adaptation.
    pub nu: f64,
    /// Standard deviation of the range measurement noise.
    pub noise_std: f64,
    pub avid: bool,
    /// Recompute neighbourhoods every iteration; otherwise keep the initial ones.
    pub rebuild_neighborhoods: bool,
    /// Ascending-power coefficients.
    pub upper_wall: Vec<f64>,
    pub lower_wall: Vec<f64>,
    pub x_domain: (f64, f64),
    pub spawn_box: Rect,
    /// Minimum pairwise distance between spawned agents.
    pub spawn_spacing: f64,
    pub target: TargetModel,
    pub neck_half_width: Option<f64>,
}

/// Abscissas of the default target path; the path follows the corridor mid-curve.
/// The default target follows the corridor mid-curve up to the neck, then
/// leaves along its tangent into open space.
const DEFAULT_WAYPOINT_XS: [f64; 5] = [-52.0, -40.0, -30.0, -20.0, -14.0];
const DEFAULT_RUN_OUT_X: f64 = 110.0;

impl Default for ScenarioConfig {
    fn default() -> Self {
        let upper = WallFunction::vertex_parabola(0.008, 10.0, 20.0, WallSide::Upper);
        let lower = WallFunction::vertex_parabola(0.008, -10.0, 14.0, WallSide::Lower);
        let mid = |x: f64| 0.5 * (upper.value(x) + lower.value(x));
        let mut points: Vec<Vec2> = DEFAULT_WAYPOINT_XS.iter().map(|&x| Vec2::new(x, mid(x))).collect();
        let end = *points.last().expect("waypoints");
        let slope = 0.5 * (upper.slope(end.x) + lower.slope(end.x));
        points.push(Vec2::new(
            DEFAULT_RUN_OUT_X,
            end.y + slope * (DEFAULT_RUN_OUT_X - end.x),
        ));
        ScenarioConfig {
            agents: 40,
            iterations: 120,
            seed: 1,
            motion: MotionParams::default(),
            neighborhood_radius: 3.5,
            mu: 0.5,
            nu: 0.5,
            noise_std: 0.1,
            avid: true,
            rebuild_neighborhoods: true,
            upper_wall: upper.coeffs().to_vec(),
            lower_wall: lower.coeffs().to_vec(),
            x_domain: (-76.0, -14.0),
            spawn_box: Rect {
                x_min: -73.0,
                y_min: 46.2,
                x_max: -60.0,
                y_max: 58.8,
            },
            spawn_spacing: 1.5,
            target: TargetModel::Waypoints { points, speed: 2.0 },
            neck_half_width: None,
        }
    }
}

/// Where each key was set, for error messages.
type KeyLines = BTreeMap<String, usize>;

fn config_err(key: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        line,
        msg: msg.into(),
    }
}

enum Value {
    Scalar(String),
    List(Vec<String>),
}

fn split_value(raw: &str) -> std::result::Result<Value, String> {
    let raw = raw.trim();
    if let Some(rest) = raw.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or("unterminated array")?;
        let items: Vec<String> = inner
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        Ok(Value::List(items))
    } else if raw.is_empty() {
        Err("missing value".into())
    } else {
        Ok(Value::Scalar(raw.to_string()))
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, line: usize, s: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| config_err(key, line, format!("`{s}` is not a valid number")))
}

fn scalar<'a>(key: &str, line: usize, v: &'a Value) -> Result<&'a str> {
    match v {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err(config_err(key, line, "expected a single value, found an array")),
    }
}

fn list(key: &str, line: usize, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::List(items) => items.iter().map(|s| parse_num::<f64>(key, line, s)).collect(),
        Value::Scalar(_) => Err(config_err(key, line, "expected an array like [1, 2]")),
    }
}

fn fixed_list<const N: usize>(key: &str, line: usize, v: &Value) -> Result<[f64; N]> {
    let xs = list(key, line, v)?;
    xs.try_into()
        .map_err(|xs: Vec<f64>| config_err(key, line, format!("expected {N} numbers, found {}", xs.len())))
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut lines = KeyLines::new();
        let mut target_kind: Option<String> = None;
        let mut target_position: Option<Vec2> = None;
        let mut target_waypoints: Option<Vec<Vec2>> = None;
        let mut target_speed: Option<f64> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(content, line, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_err("", line, "missing key before `=`"));
            }
            if let Some(prev) = lines.insert(key.to_string(), line) {
                return Err(config_err(key, line, format!("already set on line {prev}")));
            }
            let v = split_value(value).map_err(|m| config_err(key, line, m))?;
            let num = |v: &Value| -> Result<f64> { parse_num(key, line, scalar(key, line, v)?) };
            let m = &mut cfg.motion;
            match key {
                "agents" => cfg.agents = parse_num(key, line, scalar(key, line, &v)?)?,
                "iterations" => cfg.iterations = parse_num(key, line, scalar(key, line, &v)?)?,
                "seed" => cfg.seed = parse_num(key, line, scalar(key, line, &v)?)?,
                "dt" => m.dt = num(&v)?,
                "neighborhood_radius" => cfg.neighborhood_radius = num(&v)?,
                "desired_distance" => m.desired_distance = num(&v)?,
                "min_distance" => m.min_distance = num(&v)?,
                "tolerable_distance" => m.tolerable_distance = num(&v)?,
                "standard_width" => m.standard_width = num(&v)?,
                "alpha" => m.alpha = num(&v)?,
                "alpha_max" => m.alpha_max = num(&v)?,
                "lambda" => m.lambda = num(&v)?,
                "gamma" => m.gamma = num(&v)?,
                "eta" => m.eta = num(&v)?,
                "mu" => cfg.mu = num(&v)?,
                "nu" => cfg.nu = num(&v)?,
                "noise_std" => cfg.noise_std = num(&v)?,
                "avid" => cfg.avid = parse_bool(key, line, scalar(key, line, &v)?)?,
                "rebuild_neighborhoods" => cfg.rebuild_neighborhoods = parse_bool(key, line, scalar(key, line, &v)?)?,
                "upper_wall" => cfg.upper_wall = list(key, line, &v)?,
                "lower_wall" => cfg.lower_wall = list(key, line, &v)?,
                "x_domain" => {
                    let [a, b] = fixed_list(key, line, &v)?;
                    cfg.x_domain = (a, b);
                }
                "spawn_box" => {
                    let [x_min, y_min, x_max, y_max] = fixed_list(key, line, &v)?;
                    cfg.spawn_box = Rect {
                        x_min,
                        y_min,
                        x_max,
                        y_max,
                    };
                }
                "spawn_spacing" => cfg.spawn_spacing = num(&v)?,
                "target" => target_kind = Some(scalar(key, line, &v)?.to_string()),
                "target_position" => {
                    let [x, y] = fixed_list(key, line, &v)?;
                    target_position = Some(Vec2::new(x, y));
                }
                "target_waypoints" => {
                    let xs = list(key, line, &v)?;
                    if xs.is_empty() || xs.len() % 2 != 0 {
                        return Err(config_err(key, line, "expected a non-empty flat list of x, y pairs"));
                    }
                    target_waypoints = Some(xs.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect());
                }
                "target_speed" => target_speed = Some(num(&v)?),
                "neck_half_width" => {
                    let s = scalar(key, line, &v)?;
                    cfg.neck_half_width = if s == "auto" {
                        None
                    } else {
                        Some(parse_num(key, line, s)?)
                    };
                }
                _ => return Err(config_err(key, line, "unknown key")),
            }
        }

        let line_of = |k: &str| lines.get(k).copied().unwrap_or(0);
        let kind = target_kind.unwrap_or_else(|| match cfg.target {
            TargetModel::Static { .. } => "static".into(),
            TargetModel::Waypoints { .. } => "waypoints".into(),
        });
        match kind.as_str() {
            "static" => {
                for k in ["target_waypoints", "target_speed"] {
                    if lines.contains_key(k) {
                        return Err(config_err(k, line_of(k), "only valid with `target = waypoints`"));
                    }
                }
                let position = target_position
                    .ok_or_else(|| config_err("target_position", line_of("target"), "required for a static target"))?;
                cfg.target = TargetModel::Static { position };
            }
            "waypoints" => {
                if lines.contains_key("target_position") {
                    return Err(config_err(
                        "target_position",
                        line_of("target_position"),
                        "only valid with `target = static`",
                    ));
                }
                if let TargetModel::Waypoints { points, speed } = &mut cfg.target {
                    if let Some(p) = target_waypoints {
                        *points = p;
                    }
                    if let Some(s) = target_speed {
                        *speed = s;
                    }
                }
            }
            other => {
                return Err(config_err(
                    "target",
                    line_of("target"),
                    format!("`{other}` is not one of static, waypoints"),
                ))
            }
        }

        cfg.validate_with_lines(&lines)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(&KeyLines::new())
    }

    fn validate_with_lines(&self, lines: &KeyLines) -> Result<()> {
        let line_of = |k: &str| lines.get(k).copied().unwrap_or(0);
        let fail = |k: &str, msg: String| Err(config_err(k, line_of(k), msg));
        let m = &self.motion;

        if self.agents == 0 {
            return fail("agents", "at least one agent is required".into());
        }
        let positive = [
            ("dt", m.dt),
            ("neighborhood_radius", self.neighborhood_radius),
            ("desired_distance", m.desired_distance),
            ("min_distance", m.min_distance),
            ("tolerable_distance", m.tolerable_distance),
            ("standard_width", m.standard_width),
            ("alpha", m.alpha),
            ("alpha_max", m.alpha_max),
            ("mu", self.mu),
            ("nu", self.nu),
            ("spawn_spacing", self.spawn_spacing),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return fail(k, format!("must be positive, got {v}"));
            }
        }
        for (k, v) in [("gamma", m.gamma), ("eta", m.eta), ("noise_std", self.noise_std)] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(k, format!("must be non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&m.lambda) {
            return fail("lambda", format!("must lie in [0, 1], got {}", m.lambda));
        }
        if self.nu > 1.0 {
            return fail("nu", format!("must not exceed 1, got {}", self.nu));
        }
        if m.min_distance > m.desired_distance {
            return fail(
                "min_distance",
                format!(
                    "min_distance = {} exceeds desired_distance = {}",
                    m.min_distance, m.desired_distance
                ),
            );
        }
        if m.alpha > m.alpha_max {
            return fail(
                "alpha",
                format!("alpha = {} exceeds alpha_max = {}", m.alpha, m.alpha_max),
            );
        }
        if let Some(h) = self.neck_half_width {
            if !(h >= 0.0) || !h.is_finite() {
                return fail("neck_half_width", format!("must be non-negative, got {h}"));
            }
        }

        let corridor = self.corridor().map_err(|e| {
            let key = if lines.contains_key("x_domain") {
                "x_domain"
            } else {
                "upper_wall"
            };
            config_err(key, line_of(key), e.to_string())
        })?;

        let b = &self.spawn_box;
        if !(b.x_min < b.x_max && b.y_min < b.y_max) {
            return fail(
                "spawn_box",
                "expected [x_min, y_min, x_max, y_max] with min < max".into(),
            );
        }
        const EDGE_SAMPLES: usize = 256;
        for i in 0..=EDGE_SAMPLES {
            let x = b.x_min + (b.x_max - b.x_min) * i as f64 / EDGE_SAMPLES as f64;
            let inside = x > self.x_domain.0
                && x < self.x_domain.1
                && corridor.lower().value(x) < b.y_min
                && corridor.upper().value(x) > b.y_max;
            if !inside {
                return fail("spawn_box", format!("spawn box leaves the corridor near x = {x}"));
            }
        }

        match &self.target {
            TargetModel::Static { position } => {
                if !position.is_finite() {
                    return fail("target_position", "must be finite".into());
                }
            }
            TargetModel::Waypoints { points, speed } => {
                if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
                    return fail("target_waypoints", "need at least one finite waypoint".into());
                }
                if !(*speed >= 0.0) || !speed.is_finite() {
                    return fail("target_speed", format!("must be non-negative, got {speed}"));
                }
            }
        }
        Ok(())
    }

    pub fn corridor(&self) -> Result<Corridor> {
        Corridor::new(
            WallFunction::new(self.upper_wall.clone(), WallSide::Upper)?,
            WallFunction::new(self.lower_wall.clone(), WallSide::Lower)?,
            self.x_domain.0,
            self.x_domain.1,
        )
    }

    /// Full config in the text format; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let m = &self.motion;
        let mut s = String::new();
        let list = |xs: &[f64]| {
            let parts: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", parts.join(", "))
        };
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("agents", self.agents.to_string());
        put("iterations", self.iterations.to_string());
        put("seed", self.seed.to_string());
        put("dt", format!("{:?}", m.dt));
        put("neighborhood_radius", format!("{:?}", self.neighborhood_radius));
        put("desired_distance", format!("{:?}", m.desired_distance));
        put("min_distance", format!("{:?}", m.min_distance));
        put("tolerable_distance", format!("{:?}", m.tolerable_distance));
        put("standard_width", format!("{:?}", m.standard_width));
        put("alpha", format!("{:?}", m.alpha));
        put("alpha_max", format!("{:?}", m.alpha_max));
        put("lambda", format!("{:?}", m.lambda));
        put("gamma", format!("{:?}", m.gamma));
        put("eta", format!("{:?}", m.eta));
        put("mu", format!("{:?}", self.mu));
        put("nu", format!("{:?}", self.nu));
        put("noise_std", format!("{:?}", self.noise_std));
        put("avid", self.avid.to_string());
        put("rebuild_neighborhoods", self.rebuild_neighborhoods.to_string());
        put("upper_wall", list(&self.upper_wall));
        put("lower_wall", list(&self.lower_wall));
        put("x_domain", list(&[self.x_domain.0, self.x_domain.1]));
        let b = &self.spawn_box;
        put("spawn_box", list(&[b.x_min, b.y_min, b.x_max, b.y_max]));
        put("spawn_spacing", format!("{:?}", self.spawn_spacing));
        match &self.target {
            TargetModel::Static { position } => {
                put("target", "static".into());
                put("target_position", list(&[position.x, position.y]));
            }
            TargetModel::Waypoints { points, speed } => {
                put("target", "waypoints".into());
                let flat: Vec<f64> = points.iter().flat_map(|p| [p.x, p.y]).collect();
                put("target_waypoints", list(&flat));
                put("target_speed", format!("{speed:?}"));
            }
        }
        put(
            "neck_half_width",
            self.neck_half_width
                .map_or_else(|| "auto".to_string(), |h| format!("{h:?}")),
        );
        s
    }
}

fn parse_bool(key: &str, line: usize, s: &str) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(key, line, format!("`{s}` is not true or false"))),
    }
}
