//! Per-agent velocity construction and position update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::COINCIDENT_EPS;
use crate::geometry::{Corridor, RegionLabel};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Weight of the pursuit/avoidance component; `1 - lambda` weights the group velocity.
    pub lambda: f64,
    /// Weight of the spacing term.
    pub gamma: f64,
    /// Gain of the wall-repulsion part of the avoidance component.
    pub eta: f64,
    /// Wall distance below which an agent is obstructed.
    pub tolerable_distance: f64,
    pub dt: f64,
    /// Standard desired inter-agent distance.
    pub desired_distance: f64,
    /// Smallest desired distance, reached as the corridor closes.
    pub min_distance: f64,
    /// Standard velocity weight.
    pub alpha: f64,
    pub alpha_max: f64,
    /// Corridor width at and above which the standard terms apply.
    pub standard_width: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            lambda: 0.5,
            gamma: 2.0,
            eta: 2.0,
            tolerable_distance: 2.0,
            dt: 0.5,
            desired_distance: 3.0,
            min_distance: 2.0,
            alpha: 2.0,
            alpha_max: 4.0,
            standard_width: 16.0,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerable_distance", self.tolerable_distance),
            ("dt", self.dt),
            ("desired_distance", self.desired_distance),
            ("min_distance", self.min_distance),
            ("alpha", self.alpha),
            ("alpha_max", self.alpha_max),
            ("standard_width", self.standard_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Input(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.gamma >= 0.0) || !(self.eta >= 0.0) {
            return Err(Error::Input("gamma and eta must be non-negative".into()));
        }
        if self.min_distance > self.desired_distance {
            return Err(Error::Input("min_distance must not exceed desired_distance".into()));
        }
        if self.alpha > self.alpha_max {
            return Err(Error::Input("alpha must not exceed alpha_max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub target_estimate: Vec2,
    pub group_velocity: Vec2,
    pub desired_distance: f64,
    pub velocity_weight: f64,
    pub region: RegionLabel,
}

impl AgentState {
    /// At rest, estimating the target at its own position.
    pub fn at_rest(id: usize, position: Vec2, params: &MotionParams) -> Self {
        AgentState {
            id,
            position,
            velocity: Vec2::ZERO,
            target_estimate: position,
            group_velocity: Vec2::ZERO,
            desired_distance: params.desired_distance,
            velocity_weight: params.alpha,
            region: RegionLabel::I,
        }
    }
}

/// Pursuit component, blended with wall repulsion in region II and zero in region III.
pub fn pursuit_avoidance_velocity(
    agent: &AgentState,
    region: RegionLabel,
    obstacle: Vec2,
    params: &MotionParams,
) -> Result<Vec2> {
    if region == RegionLabel::III {
        return Ok(Vec2::ZERO);
    }
    let pursuit = (agent.target_estimate - agent.position)
        .normalized(COINCIDENT_EPS)
        .ok_or_else(|| Error::DegenerateGeometry(format!("agent {} sits on its target estimate", agent.id)))?;
    if region == RegionLabel::I {
        return Ok(pursuit);
    }
    let away = agent.position - obstacle;
    let dist = away.norm();
    if !(dist > COINCIDENT_EPS) {
        return Err(Error::DegenerateGeometry(format!(
            "agent {} touches the wall",
            agent.id
        )));
    }
    let push = params.eta * (params.tolerable_distance - dist);
    Ok((pursuit + away * (push / dist)) * 0.5)
}

/// Mean over neighbours of `(1 - r/|x_l - x_k|)(x_l - x_k)`: attraction beyond
/// `r`, repulsion inside it. Zero for an agent without neighbours.
pub fn local_distance_term(
    position: Vec2,
    neighbors: impl IntoIterator<Item = Vec2>,
    desired_distance: f64,
) -> Result<Vec2> {
    let mut sum = Vec2::ZERO;
    let mut count = 0usize;
    for other in neighbors {
        let offset = other - position;
        let dist = offset.norm();
        if !(dist > COINCIDENT_EPS) {
            return Err(Error::DegenerateGeometry(format!(
                "two agents coincide at ({}, {})",
                position.x, position.y
            )));
        }
        sum += offset * (1.0 - desired_distance / dist);
        count += 1;
    }
    Ok(if count == 0 { Vec2::ZERO } else { sum / count as f64 })
}

/// Desired distance and velocity weight for a local corridor width.
///
/// Below the standard width both are interpolated linearly in
/// `width / standard_width` towards `(min_distance, alpha_max)`.
pub fn avid_update(width: f64, params: &MotionParams) -> (f64, f64) {
    if width < params.standard_width {
        let t = (width / params.standard_width).max(0.0);
        (
            (1.0 - t) * params.min_distance + t * params.desired_distance,
            t * params.alpha + (1.0 - t) * params.alpha_max,
        )
    } else {
        (params.desired_distance, params.alpha)
    }
}

/// `lambda * alpha_k * va + (1 - lambda) * vg + gamma * delta`
pub fn compose_velocity(va: Vec2, vg: Vec2, delta: Vec2, velocity_weight: f64, params: &MotionParams) -> Vec2 {
    va * (params.lambda * velocity_weight) + vg * (1.0 - params.lambda) + delta * params.gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrated {
    pub position: Vec2,
    /// Velocity actually realised this step; zero when the agent held still.
    pub velocity: Vec2,
    pub held: bool,
}

/// Explicit Euler step, rejected (agent holds still) if it would cross a wall.
pub fn integrate_position(position: Vec2, velocity: Vec2, corridor: &Corridor, params: &MotionParams) -> Integrated {
    let candidate = position + velocity * params.dt;
    if corridor.admits_step(position, candidate) {
        Integrated {
            position: candidate,
            velocity,
            held: false,
        }
    } else {
        Integrated {
            position,
            velocity: Vec2::ZERO,
            held: true,
        }
    }
}
