//! Scenario setup and the per-iteration schedule.
//!
//! One iteration runs these phases in order, each over all agents before the
//! next begins:
//!
//! 1. rebuild neighbourhoods
//! 2. measure the target
//! 3. adapt target and group-velocity estimates
//! 4. combine estimates over neighbourhoods
//! 5. tangent-chord width at each agent
//! 6. adaptive desired distance and velocity weight
//! 7. region classification (look-ahead with the previous velocity)
//! 8. velocity composition
//! 9. position update with containment
//! 10. target motion
//! 11. metrics
//!
//! Phases 3 and 5-8 read only the snapshot taken at the start of the phase,
//! so the order in which agents are visited inside a phase does not matter.
//!
//! Walls exist only over the corridor's x-domain. An agent that has left
//! through a mouth has no width, and uses the standard spacing and velocity
//! weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ScenarioConfig, TargetModel};
use crate::error::{Error, Result};
use crate::estimation::{
    adapt_group_velocity, adapt_target, build_neighborhoods, combine_estimates, measure_target, CombinationWeights,
    EstimateIntermediates, Neighborhood, TargetMeasurement, COINCIDENT_EPS,
};
use crate::geometry::{Corridor, RegionLabel};
use crate::metrics::{count_at_neck, count_obstructed, mean_neighbor_distance, mean_speed, MetricsRecord, NeckBand};
use crate::motion::{
    avid_update, compose_velocity, integrate_position, local_distance_term, pursuit_avoidance_velocity, AgentState,
    MotionParams,
};
use crate::vec2::Vec2;

/// Attempts allowed when placing agents at minimum spacing.
pub const SPAWN_RETRY_CAP: usize = 100_000;

/// Sampling step for locating the neck.
pub const NECK_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub position: Vec2,
    pub model: TargetModel,
    /// Index of the waypoint currently being approached.
    next_waypoint: usize,
}

impl TargetState {
    pub fn new(model: TargetModel) -> Self {
        let position = match &model {
            TargetModel::Static { position } => *position,
            TargetModel::Waypoints { points, .. } => points[0],
        };
        TargetState {
            position,
            model,
            next_waypoint: 1,
        }
    }

    /// Move along the waypoint polyline at the configured speed; clamps at the end.
    pub fn advance(&mut self, dt: f64) {
        let TargetModel::Waypoints { points, speed } = &self.model else {
            return;
        };
        let mut budget = speed * dt;
        while budget > 0.0 && self.next_waypoint < points.len() {
            let goal = points[self.next_waypoint];
            let leg = goal - self.position;
            let len = leg.norm();
            if len <= budget {
                self.position = goal;
                budget -= len;
                self.next_waypoint += 1;
            } else {
                self.position += leg * (budget / len);
                budget = 0.0;
            }
        }
    }
}

/// Everything logged about one agent at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentRecord {
    pub iteration: usize,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub region: RegionLabel,
    pub r: f64,
    pub alpha: f64,
    /// Tangent-chord width; `None` while the agent is outside the walled span.
    pub width: Option<f64>,
    pub width_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub iteration: usize,
    pub target: Vec2,
    pub agents: Vec<AgentRecord>,
}

/// Initial state plus one frame per executed iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub frames: Vec<Frame>,
}

impl TrajectoryLog {
    pub fn records(&self) -> impl Iterator<Item = &AgentRecord> {
        self.frames.iter().flat_map(|f| f.agents.iter())
    }

    /// Path of one agent across all frames.
    pub fn path(&self, agent: usize) -> Vec<Vec2> {
        self.frames
            .iter()
            .map(|f| Vec2::new(f.agents[agent].x, f.agents[agent].y))
            .collect()
    }

    pub fn target_path(&self) -> Vec<Vec2> {
        self.frames.iter().map(|f| f.target).collect()
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub corridor: Corridor,
    pub params: MotionParams,
    pub agents: Vec<AgentState>,
    pub target: TargetState,
    pub neck: NeckBand,
    pub iteration: usize,
    widths: Vec<(Option<f64>, bool)>,
    initial_neighborhoods: Option<Vec<Neighborhood>>,
    rng: ChaCha8Rng,
}

/// Build the world: validate the config, locate the neck and spawn agents.
pub fn init_scenario(config: &ScenarioConfig) -> Result<World> {
    config.validate()?;
    let corridor = config.corridor()?;
    let params = config.motion;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let neck_x = corridor.neck_location(NECK_RESOLUTION)?.x;
    let neck = NeckBand {
        center: neck_x,
        half_width: config.neck_half_width.unwrap_or(2.0 * config.neighborhood_radius),
    };

    let b = config.spawn_box;
    let mut positions: Vec<Vec2> = Vec::with_capacity(config.agents);
    let mut attempts = 0;
    while positions.len() < config.agents {
        if attempts == SPAWN_RETRY_CAP {
            return Err(Error::Config {
                key: "spawn_box".into(),
                line: 0,
                msg: format!(
                    "could only place {} of {} agents at spacing {}",
                    positions.len(),
                    config.agents,
                    config.spawn_spacing
                ),
            });
        }
        attempts += 1;
        let p = Vec2::new(rng.random_range(b.x_min..b.x_max), rng.random_range(b.y_min..b.y_max));
        if corridor.contains(p) && positions.iter().all(|q| q.distance(p) >= config.spawn_spacing) {
            positions.push(p);
        }
    }

    let agents: Vec<AgentState> = positions
        .iter()
        .enumerate()
        .map(|(k, &p)| AgentState::at_rest(k, p, &params))
        .collect();
    let widths = agents
        .iter()
        .map(|a| width_at(&corridor, a.position).map_err(|e| e.at_agent(a.id, 0)))
        .collect::<Result<Vec<_>>>()?;
    let initial_neighborhoods = if config.rebuild_neighborhoods {
        None
    } else {
        Some(build_neighborhoods(&positions, config.neighborhood_radius)?)
    };

    Ok(World {
        config: config.clone(),
        corridor,
        params,
        agents,
        target: TargetState::new(config.target.clone()),
        neck,
        iteration: 0,
        widths,
        initial_neighborhoods,
        rng,
    })
}

fn width_at(corridor: &Corridor, p: Vec2) -> Result<(Option<f64>, bool)> {
    if !corridor.between_walls(p) {
        return Ok((None, false));
    }
    let tc = corridor.tangent_chord_width(p)?;
    Ok((Some(tc.width), tc.fallback_used))
}

impl World {
    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.position).collect()
    }

    pub fn frame(&self) -> Frame {
        Frame {
            iteration: self.iteration,
            target: self.target.position,
            agents: self
                .agents
                .iter()
                .zip(&self.widths)
                .map(|(a, &(width, fallback))| AgentRecord {
                    iteration: self.iteration,
                    agent: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    vx: a.velocity.x,
                    vy: a.velocity.y,
                    region: a.region,
                    r: a.desired_distance,
                    alpha: a.velocity_weight,
                    width,
                    width_fallback: fallback,
                })
                .collect(),
        }
    }

    pub fn step(&mut self) -> Result<MetricsRecord> {
        let order: Vec<usize> = (0..self.agents.len()).collect();
        self.step_in_order(&order)
    }

    /// One iteration, visiting agents within each per-agent phase in `order`.
    pub fn step_in_order(&mut self, order: &[usize]) -> Result<MetricsRecord> {
        let n = self.agents.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::Input("visit order must be a permutation of the agents".into()));
        }
        let iteration = self.iteration + 1;
        let cfg = &self.config;
        let params = &self.params;
        let snapshot = self.agents.clone();
        let positions: Vec<Vec2> = snapshot.iter().map(|a| a.position).collect();

        // (1)
        let hoods = match &self.initial_neighborhoods {
            Some(fixed) => fixed.clone(),
            None => build_neighborhoods(&positions, cfg.neighborhood_radius)?,
        };
        let weights = CombinationWeights::uniform(&hoods);

        // (2) noise is drawn in agent-index order regardless of `order`
        let measurements: Vec<TargetMeasurement> = positions
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                measure_target(self.target.position, x, cfg.noise_std, &mut self.rng)
                    .map_err(|e| e.at_agent(k, iteration))
            })
            .collect::<Result<_>>()?;

        // (3)
        let mut intermediates = vec![
            EstimateIntermediates {
                psi: Vec2::ZERO,
                phi: Vec2::ZERO
            };
            n
        ];
        for &k in order {
            let a = &snapshot[k];
            intermediates[k] = EstimateIntermediates {
                psi: adapt_target(a.target_estimate, a.position, &measurements[k], cfg.mu),
                phi: adapt_group_velocity(a.group_velocity, a.velocity, cfg.nu),
            };
        }

        // (4)
        let combined = combine_estimates(&intermediates, &weights, &weights)?;

        // (5)-(8)
        let mut widths = vec![(None, false); n];
        let mut planned = snapshot.clone();
        for &k in order {
            let a = &snapshot[k];
            let fail = |e: Error| e.at_agent(k, iteration);
            let (w, vg) = combined[k];

            widths[k] = width_at(&self.corridor, a.position).map_err(fail)?;
            let (r_k, alpha_k) = match widths[k] {
                (Some(width), _) if cfg.avid => avid_update(width, params),
                _ => (params.desired_distance, params.alpha),
            };
            let candidate = a.position + a.velocity * params.dt;
            let (region, hit) = self
                .corridor
                .classify_with_hit(a.position, candidate, params.tolerable_distance)
                .map_err(fail)?;

            let mut agent = AgentState {
                target_estimate: w,
                group_velocity: vg,
                desired_distance: r_k,
                velocity_weight: alpha_k,
                region,
                ..*a
            };
            let va = if region == RegionLabel::III || w.distance(a.position) <= COINCIDENT_EPS {
                Vec2::ZERO
            } else if region == RegionLabel::II && hit.distance <= COINCIDENT_EPS {
                pursuit_avoidance_velocity(&agent, RegionLabel::I, hit.point, params).map_err(fail)?
            } else {
                pursuit_avoidance_velocity(&agent, region, hit.point, params).map_err(fail)?
            };
            let delta = local_distance_term(a.position, hoods[k].others().map(|l| positions[l]), r_k).map_err(fail)?;
            agent.velocity = compose_velocity(va, vg, delta, alpha_k, params);
            planned[k] = agent;
        }

        // (9)
        for agent in &mut planned {
            if agent.region == RegionLabel::III {
                agent.velocity = Vec2::ZERO;
                continue;
            }
            let step = integrate_position(agent.position, agent.velocity, &self.corridor, params);
            agent.position = step.position;
            agent.velocity = step.velocity;
        }
        self.agents = planned;
        self.widths = widths;
        self.iteration = iteration;

        // (10)
        self.target.advance(params.dt);

        // (11)
        let positions = self.positions();
        let velocities: Vec<Vec2> = self.agents.iter().map(|a| a.velocity).collect();
        let regions: Vec<RegionLabel> = self.agents.iter().map(|a| a.region).collect();
        let hoods = build_neighborhoods(&positions, cfg.neighborhood_radius)?;
        Ok(MetricsRecord {
            iteration,
            v_mean: mean_speed(&velocities)?,
            r_mean: mean_neighbor_distance(&positions, &hoods),
            n_obs: count_obstructed(&regions),
            n_neck: count_at_neck(&positions, &self.neck),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<MetricsRecord>,
    pub trajectory: TrajectoryLog,
    pub neck: NeckBand,
}

pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let mut world = init_scenario(config)?;
    let mut metrics = Vec::with_capacity(config.iterations);
    let mut trajectory = TrajectoryLog {
        frames: vec![world.frame()],
    };
    for _ in 0..config.iterations {
        metrics.push(world.step()?);
        trajectory.frames.push(world.frame());
    }
    Ok(RunOutput {
        metrics,
        trajectory,
        neck: world.neck,
    })
}
