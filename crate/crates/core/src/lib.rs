//! Crowd simulation on an adaptive network.
//!
//! Agents share estimates of a moving target and of the crowd's mean velocity
//! by diffusion adaptation, and steer through a corridor of varying width by
//! combining pursuit, wall avoidance and neighbour spacing. Narrow stretches
//! (measured with a tangent-chord width) make agents speed up and accept a
//! smaller spacing.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod metrics;
pub mod motion;
pub mod output;
pub mod vec2;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use vec2::Vec2;
