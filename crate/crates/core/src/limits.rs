//! Perfect-competition and extreme outside-option limits as reusable checks.

use crate::equilibrium::solve_cne;
use crate::model::{MarketParams, Side};
use crate::statics::asymptotic_limits;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    LargeN,
    LargeU0,
    SmallU0,
}

impl LimitKind {
    pub fn tolerance(self) -> f64 {
        match self {
            LimitKind::LargeN => 1e-2,
            LimitKind::LargeU0 | LimitKind::SmallU0 => 1e-3,
        }
    }
}

/// One limit: observed values along a parameter sequence against a target.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub kind: LimitKind,
    pub label: &'static str,
    pub points: Vec<f64>,
    /// `None` where the solver failed.
    pub observed: Vec<Option<f64>>,
    pub target: f64,
    pub achieved_error: f64,
    pub tolerance: f64,
    pub converged: bool,
}

impl LimitCheck {
    fn new(kind: LimitKind, label: &'static str, points: Vec<f64>, observed: Vec<Option<f64>>, target: f64) -> Self {
        let achieved_error = match observed.last() {
            Some(Some(v)) => (v - target).abs(),
            _ => f64::INFINITY,
        };
        let tolerance = kind.tolerance();
        LimitCheck { kind, label, points, observed, target, achieved_error, tolerance, converged: achieved_error < tolerance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfectCompetitionReport {
    pub side: Side,
    /// `p* -> beta`
    pub price: LimitCheck,
    /// `N x* -> 1`
    pub participation: LimitCheck,
    /// Limiting rule: `z* > 0` iff `u0 < 0` and `beta < -u0`.
    pub expected_z_positive: bool,
    /// Sign of `z*` at the last point of the sequence.
    pub observed_z_positive: Option<bool>,
}

/// Solves the CNE along `n_sequence` (platform counts) for one side.
pub fn perfect_competition_check(params: &MarketParams, n_sequence: &[usize], side: Side) -> Result<PerfectCompetitionReport> {
    let k = side.idx();
    let mut prices = Vec::new();
    let mut part = Vec::new();
    let mut zs = Vec::new();
    for &n in n_sequence {
        let sol = params.clone().with_n(n).and_then(|p| solve_cne(&p, 1e-10));
        match sol {
            Ok(eq) => {
                prices.push(Some(eq.prices[k]));
                part.push(Some(eq.participation[k]));
                zs.push(Some(eq.z[k]));
            }
            Err(_) => {
                prices.push(None);
                part.push(None);
                zs.push(None);
            }
        }
    }
    let points: Vec<f64> = n_sequence.iter().map(|&n| n as f64).collect();
    let (b, u0) = (params.beta[k], params.u0[k]);
    Ok(PerfectCompetitionReport {
        side,
        price: LimitCheck::new(LimitKind::LargeN, "price", points.clone(), prices, b),
        participation: LimitCheck::new(LimitKind::LargeN, "participation", points, part, 1.0),
        expected_z_positive: u0 < 0.0 && b < -u0,
        observed_z_positive: zs.last().copied().flatten().map(|z| z > 0.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutsideOptionReport {
    pub side: Side,
    /// `p*(-magnitude)` against `p_u`.
    pub price_low: LimitCheck,
    /// `p*(+magnitude)` against `p_E`.
    pub price_high: LimitCheck,
    /// Side profit `p* x*` at `+magnitude` against zero.
    pub profit_high: LimitCheck,
    /// `p*(-m) > p*(0) > p*(+m)`.
    pub monotone: bool,
}

/// Solves at `u0 = -magnitude, 0, +magnitude` (both sides moved together).
pub fn outside_option_limit_check(params: &MarketParams, magnitude: f64, side: Side) -> Result<OutsideOptionReport> {
    let k = side.idx();
    let lim = asymptotic_limits(params, side)?;
    let at = |u: f64| -> Result<(f64, f64)> {
        let mut p = params.clone();
        p.u0 = [u, u];
        let eq = solve_cne(&p, 1e-10)?;
        Ok((eq.prices[k], eq.profit_per_side[k]))
    };
    let (p_lo, _) = at(-magnitude)?;
    let (p_mid, _) = at(0.0)?;
    let (p_hi, pi_hi) = at(magnitude)?;
    Ok(OutsideOptionReport {
        side,
        price_low: LimitCheck::new(LimitKind::SmallU0, "price", vec![-magnitude], vec![Some(p_lo)], lim.p_u),
        price_high: LimitCheck::new(LimitKind::LargeU0, "price", vec![magnitude], vec![Some(p_hi)], lim.p_e),
        profit_high: LimitCheck::new(LimitKind::LargeU0, "profit", vec![magnitude], vec![Some(pi_hi)], lim.pi_e),
        monotone: p_lo > p_mid && p_mid > p_hi,
    })
}
