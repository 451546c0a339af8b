//! The equilibrium record shared by `solve` and `sweep`.

use platform_eq::demand::{monte_carlo_shares, MarketState, PriceProfile};
use platform_eq::equilibrium::{solve_regime, Regime, SymmetricEquilibrium};
use platform_eq::regions::{classify_direction, classify_existence, classify_sign_z, RegionLabel};
use platform_eq::statics::{analytic_at, fd_derivative, Quantity, Wrt};
use platform_eq::{MarketParams, Side};

use crate::table::{num, Table};

/// The eight comparative statics, in column order.
pub const DERIVATIVES: [(Quantity, Wrt); 8] = [
    (Quantity::Z, Wrt::OutsideUtility),
    (Quantity::Price, Wrt::OutsideUtility),
    (Quantity::Profit, Wrt::OutsideUtility),
    (Quantity::ConsumerSurplus, Wrt::OutsideUtility),
    (Quantity::Price, Wrt::NumPlatforms),
    (Quantity::Participation, Wrt::NumPlatforms),
    (Quantity::ConsumerSurplus, Wrt::NumPlatforms),
    (Quantity::Profit, Wrt::NumPlatforms),
];

/// Directions with a sign classifier, in column order.
pub const DIRECTIONS: [(Quantity, Wrt); 7] = [
    (Quantity::Price, Wrt::OutsideUtility),
    (Quantity::Profit, Wrt::OutsideUtility),
    (Quantity::ConsumerSurplus, Wrt::OutsideUtility),
    (Quantity::Price, Wrt::NumPlatforms),
    (Quantity::Participation, Wrt::NumPlatforms),
    (Quantity::ConsumerSurplus, Wrt::NumPlatforms),
    (Quantity::Profit, Wrt::NumPlatforms),
];

pub fn columns() -> Vec<&'static str> {
    vec![
        "point",
        "regime",
        "side",
        "n",
        "beta",
        "mu",
        "phi_own",
        "phi_cross",
        "u0",
        "z",
        "price",
        "share",
        "participation",
        "profit_side",
        "profit_platform",
        "cs",
        "d_z_du0",
        "d_price_du0",
        "d_profit_du0",
        "d_cs_du0",
        "d_price_dn",
        "d_participation_dn",
        "d_cs_dn",
        "d_profit_dn",
        "derivative_method",
        "existence",
        "sign_z",
        "dir_price_u0",
        "dir_profit_u0",
        "dir_cs_u0",
        "dir_price_n",
        "dir_participation_n",
        "dir_cs_n",
        "dir_profit_n",
        "mc_share",
        "mc_std_err",
        "warnings",
        "error",
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct RowOptions {
    pub tol: f64,
    /// `(samples, seed)` for the simulated share check.
    pub monte_carlo: Option<(usize, u64)>,
}

fn inputs(point: usize, regime: Regime, params: &MarketParams, side: Side) -> Vec<String> {
    let k = side.idx();
    vec![
        point.to_string(),
        regime.label().to_string(),
        side.label().to_string(),
        num(params.n()),
        num(params.beta[k]),
        num(params.mu[k]),
        num(params.phi[k][k]),
        num(params.phi_cross(side)),
        num(params.u0[k]),
    ]
}

fn verdict(l: platform_eq::Result<RegionLabel>, warnings: &mut Vec<String>) -> String {
    match l {
        Ok(l) => l.verdict.label().to_string(),
        Err(e) => {
            warnings.push(format!("classifier: {e}"));
            String::new()
        }
    }
}

/// Rows (one per side) for one regime at one point. Errors only if the
/// equilibrium itself cannot be solved.
pub fn equilibrium_rows(point: usize, params: &MarketParams, regime: Regime, opts: RowOptions) -> platform_eq::Result<Vec<Vec<String>>> {
    let eq = solve_regime(regime, params, opts.tol)?;
    let mc = match opts.monte_carlo {
        Some((samples, seed)) if samples > 0 => Some(simulate(params, &eq, samples, seed)?),
        _ => None,
    };
    let mut rows = Vec::new();
    for side in Side::BOTH {
        let k = side.idx();
        let mut warnings = Vec::new();
        if eq.existence_warning {
            warnings.push("existence condition fails".to_string());
        }
        if !params.cross_free() {
            warnings.push("cross externalities: verdicts assume they are small".to_string());
        }
        let mut row = inputs(point, regime, params, side);
        row.extend(
            [eq.z[k], eq.prices[k], eq.shares[k], eq.participation[k], eq.profit_per_side[k], eq.total_profit, eq.consumer_surplus[k]]
                .map(num),
        );
        let z = eq.z[k];
        if regime == Regime::Cne {
            let method = if params.cross_free() { "analytic" } else { "finite_difference" };
            for (q, w) in DERIVATIVES {
                let d = if params.cross_free() {
                    analytic_at(q, w, params, side, z)
                } else {
                    fd_derivative(q, w, params, side, w.default_step())
                };
                row.push(match d {
                    Ok(v) => num(v),
                    Err(e) => {
                        warnings.push(format!("d{}/d{}: {e}", q.label(), w.label()));
                        String::new()
                    }
                });
            }
            row.push(method.to_string());
        } else {
            row.extend(std::iter::repeat_n(String::new(), DERIVATIVES.len() + 1));
        }
        row.push(verdict(classify_existence(regime, params, side), &mut warnings));
        row.push(verdict(classify_sign_z(regime, params, side), &mut warnings));
        for (q, w) in DIRECTIONS {
            row.push(if regime == Regime::Cne {
                verdict(classify_direction(q, w, params, side, Some(z)), &mut warnings)
            } else {
                String::new()
            });
        }
        match &mc {
            Some((share, se)) => row.extend([num(share[k]), num(se[k])]),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(warnings.join("; "));
        row.push(String::new());
        rows.push(row);
    }
    Ok(rows)
}

/// A row that carries only the inputs and the error message.
pub fn error_row(point: usize, params: &MarketParams, regime: Regime, err: &str) -> Vec<String> {
    let mut row = inputs(point, regime, params, Side::Buyer);
    row[2] = String::new();
    let width = columns().len();
    row.resize(width - 1, String::new());
    row.push(err.to_string());
    row
}

/// Simulated share of platform 1 with the externality frozen at the
/// equilibrium state.
fn simulate(params: &MarketParams, eq: &SymmetricEquilibrium, samples: usize, seed: u64) -> platform_eq::Result<([f64; 2], [f64; 2])> {
    let n = params.n_platforms();
    let state = MarketState {
        shares: [0, 1].map(|k| {
            let mut v = vec![eq.shares[k]; n + 1];
            v[0] = 1.0 - eq.participation[k];
            v
        }),
    };
    let est = monte_carlo_shares(params, &PriceProfile::symmetric(n, eq.prices), &state, samples, seed)?;
    Ok(([est.shares[0][1], est.shares[1][1]], [est.std_err[0][1], est.std_err[1][1]]))
}

pub fn table() -> Table {
    Table::new(columns())
}

