mod common;

use common::valid_params;
use platform_eq::demand::omega;
use platform_eq::equilibrium::*;
use platform_eq::{MarketParams, Side};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn residual_prices_and_shares_consistent(p in valid_params(0.05)) {
        for regime in [Regime::Cne, Regime::Ce] {
            let eq = solve_regime(regime, &p, 1e-10).unwrap();
            prop_assert!(eq.foc_residual <= 1e-10);
            let n = p.n();
            for s in Side::BOTH {
                let k = s.idx();
                prop_assert!((eq.shares[k] - omega(eq.z[k], n)).abs() < 1e-10);
                let w = [omega(eq.z[0], n), omega(eq.z[1], n)];
                let direct = p.externality(s, w) - p.beta[k] * eq.z[k] - p.u0[k];
                prop_assert!((direct - eq.prices[k]).abs() < 1e-10 * eq.prices[k].abs().max(1.0));
            }
        }
        let eq = solve_cne(&p, 1e-10).unwrap();
        let hp = cne_prices(eq.z, &p).unwrap();
        for k in 0..2 {
            prop_assert!((hp[k] - eq.prices[k]).abs() < 1e-10 * eq.prices[k].abs().max(1.0));
        }
    }

    #[test]
    fn collusion_raises_prices_and_lowers_participation(p in common::cross_free_params()) {
        let c = compare_regimes(&p, 1e-10).unwrap();
        for k in 0..2 {
            prop_assert!(c.cne.z[k] >= c.ce.z[k]);
            prop_assert!(c.cne.participation[k] >= c.ce.participation[k]);
            prop_assert!(c.cne.prices[k] <= c.ce.prices[k]);
            // the gap scales with the share, so it is only resolvable away from zero participation
            if c.cne.shares[k] > 1e-6 {
                prop_assert!(c.cne.z[k] > c.ce.z[k]);
                prop_assert!(c.cne.prices[k] < c.ce.prices[k]);
            }
        }
    }

    #[test]
    fn decoupled_condition_strictly_decreasing(n in 2usize..8, phi in -2.0f64..2.0, gap in 0.01f64..2.0, u0 in -2.0f64..2.0) {
        let beta = common::beta_above(n, phi, gap);
        let mut prev = f64::INFINITY;
        for i in -300..=300 {
            let m = cne_decoupled_residual(i as f64 / 10.0, beta, phi, n as f64, u0);
            prop_assert!(m < prev);
            prev = m;
        }
    }
}

#[test]
fn approaches_perfect_competition() {
    let p = MarketParams::symmetric(2, 1.0, 0.3, -0.2).unwrap();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for n in [10, 100, 1000, 10_000] {
        let eq = solve_cne(&p.clone().with_n(n).unwrap(), 1e-10).unwrap();
        let gap = ((eq.prices[0] - 1.0).abs(), (eq.participation[0] - 1.0).abs());
        assert!(gap.0 < last.0 && gap.1 < last.1);
        last = gap;
    }
    assert!(last.0 < 1e-2 && last.1 < 1e-2);
}
