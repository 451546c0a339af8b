#![allow(dead_code)]

use platform_eq::model::f_existence;
use platform_eq::MarketParams;
use proptest::prelude::*;

/// `beta` placed `gap` above the lower edge of the existence region.
pub fn beta_above(n: usize, phi: f64, gap: f64) -> f64 {
    (f_existence(n as f64) * phi).max(0.0) + gap
}

/// Symmetric-in-structure but side-specific parameters inside the existence
/// region, cross externalities bounded by `cross`.
pub fn valid_params(cross: f64) -> impl Strategy<Value = MarketParams> {
    (
        2usize..=6,
        [-1.5f64..1.5, -1.5f64..1.5],
        [0.05f64..2.0, 0.05f64..2.0],
        [-2.0f64..2.0, -2.0f64..2.0],
        [-cross..=cross, -cross..=cross],
    )
        .prop_map(|(n, phi, gap, u0, c)| {
            let beta = [beta_above(n, phi[0], gap[0]), beta_above(n, phi[1], gap[1])];
            MarketParams::new(n, beta, [0.0; 2], [[phi[0], c[0]], [c[1], phi[1]]], u0).unwrap()
        })
}

pub fn cross_free_params() -> impl Strategy<Value = MarketParams> {
    valid_params(0.0)
}
