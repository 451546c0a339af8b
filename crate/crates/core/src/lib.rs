//! Two-sided platform markets with an outside option.
//!
//! Users on each side (buyers and sellers) pick one of `N` platforms or stay
//! out. Idiosyncratic tastes are Gumbel, so stage-2 demand is a logit share
//! fixed point with within- and cross-side network effects. Platforms price in
//! stage 1, either competitively (CNE) or collusively (CE).
//!
//! The crate solves both symmetric equilibria, evaluates the closed-form
//! comparative statics and the threshold functions that split `(phi_kk, beta_k)`
//! space into sign regions, and certifies solutions by deviation search.

pub mod demand;
pub mod equilibrium;
mod error;
pub mod limits;
pub mod model;
pub mod regions;
mod series;
pub mod statics;
pub mod verify;

pub use error::{Error, Result};
pub use model::{MarketParams, Side};

/// Euler-Mascheroni constant, the mean of a standard Gumbel draw.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
