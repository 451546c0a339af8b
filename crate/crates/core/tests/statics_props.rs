mod common;

use common::cross_free_params;
use platform_eq::statics::*;
use platform_eq::{MarketParams, Side};
use proptest::prelude::*;

const OPS: [(Quantity, Wrt); 8] = [
    (Quantity::Z, Wrt::OutsideUtility),
    (Quantity::Price, Wrt::OutsideUtility),
    (Quantity::Profit, Wrt::OutsideUtility),
    (Quantity::ConsumerSurplus, Wrt::OutsideUtility),
    (Quantity::Price, Wrt::NumPlatforms),
    (Quantity::Participation, Wrt::NumPlatforms),
    (Quantity::ConsumerSurplus, Wrt::NumPlatforms),
    (Quantity::Profit, Wrt::NumPlatforms),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_matches_central_differences(p in cross_free_params()) {
        for (q, w) in OPS {
            let a = analytic(q, w, &p, Side::Buyer).unwrap();
            let fd = fd_derivative(q, w, &p, Side::Buyer, w.default_step()).unwrap();
            if a.abs() > 1e-8 {
                prop_assert!((a - fd).abs() <= 1e-6 * a.abs().max(1e-3), "{:?}/{:?}: {} vs {}", q, w, a, fd);
                prop_assert_eq!(a > 0.0, fd > 0.0);
            }
        }
    }

    #[test]
    fn denominators_positive(p in cross_free_params()) {
        for fam in [Family::A, Family::DPiU, Family::DNx, Family::DCsk, Family::DPik] {
            let c = build_coeffs(fam, &p, Side::Seller, None).unwrap();
            for i in -30..=30 {
                prop_assert!(c.eval(i as f64) > 0.0, "{:?} at z = {}", fam, i);
            }
        }
    }

    #[test]
    fn outside_utility_lowers_participation(p in cross_free_params()) {
        prop_assert!(dz_du0(&p, Side::Buyer).unwrap() < 0.0);
        prop_assert!(analytic(Quantity::Participation, Wrt::OutsideUtility, &p, Side::Buyer).unwrap() < 0.0);
    }

    #[test]
    fn profit_falls_with_outside_utility(n in 2usize..8, phi in -1.5f64..1.5, gap in 0.01f64..2.0, u0 in -2.0f64..2.0) {
        let n_ = n as f64;
        let g = ((n_ - 1.0) / n_.powi(3)).sqrt() + 1.0 / n_;
        let beta = if phi > 0.0 { g * phi + gap } else { gap };
        let p = MarketParams::symmetric(n, beta, phi, u0).unwrap();
        prop_assert!(dprofit_du0(&p, Side::Buyer).unwrap() < 0.0);
    }
}

#[test]
fn base_case_derivatives() {
    // frozen from the closed forms after they matched central differences
    let p = MarketParams::symmetric(2, 1.0, 0.0, 0.0).unwrap();
    let want = [
        (Quantity::Z, Wrt::OutsideUtility, -0.85082),
        (Quantity::Price, Wrt::OutsideUtility, -0.149179),
        (Quantity::Price, Wrt::NumPlatforms, -0.0437457),
        (Quantity::Participation, Wrt::NumPlatforms, 0.126701),
        (Quantity::ConsumerSurplus, Wrt::NumPlatforms, 0.377079),
    ];
    for (q, w, v) in want {
        let a = analytic(q, w, &p, Side::Buyer).unwrap();
        assert!((a - v).abs() < 1e-5, "{q:?}/{w:?}: {a}");
    }
}
