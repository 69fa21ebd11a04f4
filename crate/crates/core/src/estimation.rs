//! Diffusion adaptation over a proximity network.
//!
//! Each agent keeps its own estimate of the target location and of the group
//! velocity. One iteration is adapt-then-combine: every agent first takes a
//! local LMS-style step using its own measurement, then replaces its estimate
//! with a convex combination of its neighbours' intermediate values.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Distances below this are treated as coincident points.
pub const COINCIDENT_EPS: f64 = 1e-9;

/// Agents within the closed ball of radius `R` around `agent_id`, including itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub agent_id: usize,
    /// Sorted ascending; always contains `agent_id`.
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members other than the agent itself.
    pub fn others(&self) -> impl Iterator<Item = usize> + '_ {
        let me = self.agent_id;
        self.members.iter().copied().filter(move |&l| l != me)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

pub fn build_neighborhoods(positions: &[Vec2], radius: f64) -> Result<Vec<Neighborhood>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Input(format!(
            "neighbourhood radius must be positive, got {radius}"
        )));
    }
    if let Some(k) = positions.iter().position(|p| !p.is_finite()) {
        return Err(Error::Input(format!("position of agent {k} is not finite")));
    }
    let mut hoods: Vec<Neighborhood> = (0..positions.len())
        .map(|k| Neighborhood {
            agent_id: k,
            members: vec![k],
        })
        .collect();
    // Pairwise test once per unordered pair keeps membership symmetric.
    for k in 0..positions.len() {
        for l in (k + 1)..positions.len() {
            if positions[k].distance(positions[l]) <= radius {
                hoods[k].members.push(l);
                hoods[l].members.push(k);
            }
        }
    }
    for h in &mut hoods {
        h.members.sort_unstable();
    }
    Ok(hoods)
}

/// Convex combination weights `a_{lk}`, stored per receiving agent `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationWeights {
    columns: Vec<Vec<(usize, f64)>>,
}

impl CombinationWeights {
    /// `a_{lk} = 1/|N_k|` for every `l` in `N_k`.
    pub fn uniform(neighborhoods: &[Neighborhood]) -> Self {
        let columns = neighborhoods
            .iter()
            .map(|h| {
                let w = 1.0 / h.len() as f64;
                h.members.iter().map(|&l| (l, w)).collect()
            })
            .collect();
        CombinationWeights { columns }
    }

    /// Build from explicit columns, checking the convexity constraints.
    pub fn from_columns(columns: Vec<Vec<(usize, f64)>>, neighborhoods: &[Neighborhood]) -> Result<Self> {
        let w = CombinationWeights { columns };
        w.validate(neighborhoods)?;
        Ok(w)
    }

    pub fn num_agents(&self) -> usize {
        self.columns.len()
    }

    /// Non-zero weights used by agent `k`.
    pub fn column(&self, k: usize) -> &[(usize, f64)] {
        &self.columns[k]
    }

    /// `a_{lk}`, zero when `l` is not in `N_k`.
    pub fn weight(&self, l: usize, k: usize) -> f64 {
        self.columns[k].iter().find(|(m, _)| *m == l).map_or(0.0, |&(_, w)| w)
    }

    /// Column sums equal one, weights are non-negative and supported on the neighbourhood.
    pub fn validate(&self, neighborhoods: &[Neighborhood]) -> Result<()> {
        if self.columns.len() != neighborhoods.len() {
            return Err(Error::Input(format!(
                "{} weight columns for {} neighbourhoods",
                self.columns.len(),
                neighborhoods.len()
            )));
        }
        for (k, (col, hood)) in self.columns.iter().zip(neighborhoods).enumerate() {
            let mut sum = 0.0;
            for &(l, a) in col {
                if !(a >= 0.0) {
                    return Err(Error::Input(format!("negative weight a[{l},{k}] = {a}")));
                }
                if a > 0.0 && !hood.contains(l) {
                    return Err(Error::Input(format!("agent {l} weighted by {k} but not its neighbour")));
                }
                sum += a;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Input(format!("weights of agent {k} sum to {sum}")));
            }
        }
        Ok(())
    }
}

/// Range and bearing from an agent to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMeasurement {
    pub distance: f64,
    /// Unit vector from the agent towards the target.
    pub direction: Vec2,
}

/// Noisy range, exact bearing. The range is clamped at zero after noise.
pub fn measure_target<R: Rng + ?Sized>(
    target: Vec2,
    agent: Vec2,
    noise_std: f64,
    rng: &mut R,
) -> Result<TargetMeasurement> {
    let offset = target - agent;
    let dist = offset.norm();
    if !(dist > COINCIDENT_EPS) {
        return Err(Error::DegenerateGeometry(format!(
            "agent at ({}, {}) coincides with the target",
            agent.x, agent.y
        )));
    }
    let noise = if noise_std > 0.0 {
        Normal::new(0.0, noise_std)
            .map_err(|e| Error::Input(format!("noise std {noise_std}: {e}")))?
            .sample(rng)
    } else {
        0.0
    };
    Ok(TargetMeasurement {
        distance: (dist + noise).max(0.0),
        direction: offset / dist,
    })
}

/// Intermediate (pre-combination) estimates of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateIntermediates {
    pub psi: Vec2,
    pub phi: Vec2,
}

/// LMS step on the target location: `psi = w + mu * p * (d + p.(x - w))`.
///
/// The bracket is the range residual: measured distance minus the distance
/// the current estimate predicts along the bearing `p`.
pub fn adapt_target(w_prev: Vec2, position: Vec2, m: &TargetMeasurement, mu: f64) -> Vec2 {
    let residual = m.distance + m.direction.dot(position - w_prev);
    w_prev + m.direction * (mu * residual)
}

/// Exponential smoothing of the group velocity towards the agent's own velocity.
pub fn adapt_group_velocity(vg_prev: Vec2, velocity: Vec2, nu: f64) -> Vec2 {
    vg_prev + (velocity - vg_prev) * nu
}

/// Combine step for both estimates. Returns `(w_k, vg_k)` per agent.
pub fn combine_estimates(
    intermediates: &[EstimateIntermediates],
    weights_w: &CombinationWeights,
    weights_v: &CombinationWeights,
) -> Result<Vec<(Vec2, Vec2)>> {
    let n = intermediates.len();
    if weights_w.num_agents() != n || weights_v.num_agents() != n {
        return Err(Error::Input(format!(
            "weights cover {}/{} agents but {n} intermediates were given",
            weights_w.num_agents(),
            weights_v.num_agents()
        )));
    }
    (0..n)
        .map(|k| {
            let w = weighted_sum(weights_w.column(k), n, |l| intermediates[l].psi)?;
            let vg = weighted_sum(weights_v.column(k), n, |l| intermediates[l].phi)?;
            Ok((w, vg))
        })
        .collect()
}

fn weighted_sum(column: &[(usize, f64)], n: usize, value: impl Fn(usize) -> Vec2) -> Result<Vec2> {
    let mut acc = Vec2::ZERO;
    for &(l, a) in column {
        if l >= n {
            return Err(Error::Input(format!("weight refers to unknown agent {l}")));
        }
        acc += value(l) * a;
    }
    Ok(acc)
}

/// Linear model `d = u w + n` at one node, for the generic ATC recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsState {
    pub estimate: Vec<f64>,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmsSample {
    pub measurement: f64,
    pub regressor: Vec<f64>,
}

impl LmsState {
    pub fn new(estimate: Vec<f64>, step_size: f64) -> Result<Self> {
        if !(step_size > 0.0) {
            return Err(Error::Input(format!("step size must be positive, got {step_size}")));
        }
        Ok(LmsState { estimate, step_size })
    }

    /// Adapt step: `psi = w + mu u^T (d - u w)`.
    pub fn adapt(&self, sample: &LmsSample) -> Result<Vec<f64>> {
        if sample.regressor.len() != self.estimate.len() {
            return Err(Error::Input(format!(
                "regressor has {} entries, estimate has {}",
                sample.regressor.len(),
                self.estimate.len()
            )));
        }
        let prediction: f64 = sample.regressor.iter().zip(&self.estimate).map(|(u, w)| u * w).sum();
        let scale = self.step_size * (sample.measurement - prediction);
        Ok(self
            .estimate
            .iter()
            .zip(&sample.regressor)
            .map(|(w, u)| w + scale * u)
            .collect())
    }
}

/// One adapt-then-combine round over a whole network of linear-model nodes.
pub fn atc_lms_step(states: &[LmsState], samples: &[LmsSample], weights: &CombinationWeights) -> Result<Vec<LmsState>> {
    if states.len() != samples.len() || states.len() != weights.num_agents() {
        return Err(Error::Input(format!(
            "{} states, {} samples, {} weight columns",
            states.len(),
            samples.len(),
            weights.num_agents()
        )));
    }
    let psis = states
        .iter()
        .zip(samples)
        .map(|(s, x)| s.adapt(x))
        .collect::<Result<Vec<_>>>()?;
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut w = vec![0.0; s.estimate.len()];
            for &(l, a) in weights.column(k) {
                let psi = psis
                    .get(l)
                    .ok_or_else(|| Error::Input(format!("weight refers to unknown node {l}")))?;
                if psi.len() != w.len() {
                    return Err(Error::Input(format!("node {l} has a different estimate dimension")));
                }
                for (acc, p) in w.iter_mut().zip(psi) {
                    *acc += a * p;
                }
            }
            Ok(LmsState {
                estimate: w,
                step_size: s.step_size,
            })
        })
        .collect()
}
