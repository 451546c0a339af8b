//! Certificates for solved equilibria: a unilateral deviation search in
//! price space and second-order checks, closed-form and numeric.

use rayon::prelude::*;

use crate::demand::{share_fixed_point_robust, PriceProfile};
use crate::equilibrium::{solve_ce, solve_cne, Regime, SymmetricEquilibrium, ZPoint};
use crate::model::{MarketParams, Side};
use crate::statics::{self, Family};
use crate::{series, Error, Result};

/// Profit of platform 0 charging `deviation` while the other `N - 1`
/// platforms charge `others_price`, with shares from the full stage-2
/// fixed point.
pub fn deviation_profit(params: &MarketParams, others_price: [f64; 2], deviation: [f64; 2]) -> Result<f64> {
    let prices = PriceProfile::deviation(params.n_platforms(), others_price, deviation);
    let x = share_fixed_point_robust(params, &prices)?;
    Ok(Side::BOTH.iter().map(|&s| x.platform(s, 0) * deviation[s.idx()]).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationGrid {
    pub center: [f64; 2],
    pub half_width: [f64; 2],
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub base: SymmetricEquilibrium,
    /// Deviation profit at the candidate prices themselves.
    pub base_profit: f64,
    pub best_deviation_prices: [f64; 2],
    /// Best deviation profit minus `base_profit`; never negative since the
    /// candidate is part of the search.
    pub best_gain: f64,
    pub grid_spec: DeviationGrid,
    pub refined: bool,
    pub evaluations: usize,
}

impl DeviationReport {
    pub fn tolerance(&self) -> f64 {
        1e-6 * self.base_profit.abs().max(1.0)
    }

    pub fn certified(&self) -> bool {
        self.best_gain <= self.tolerance()
    }
}

const NM_ITERATIONS: usize = 200;

/// Grid search around the candidate prices, then a simplex polish from the
/// best cell.
///
/// The search box is `p* +- radius |p*|` per side, widened to `+- 0.05`
/// when `|p*|` is tiny.
pub fn verify_nash(params: &MarketParams, eq: &SymmetricEquilibrium, radius: f64, grid_n: usize) -> Result<DeviationReport> {
    if eq.regime != Regime::Cne {
        return Err(Error::InvalidParams("deviation search applies to the competitive equilibrium".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) || grid_n < 2 {
        return Err(Error::InvalidParams("need radius > 0 and at least 2 grid points".into()));
    }
    let center = eq.prices;
    let hw = center.map(|p| (radius * p.abs()).max(0.05));
    let axis = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..grid_n)
            .map(|i| center[k] - hw[k] + 2.0 * hw[k] * i as f64 / (grid_n - 1) as f64)
            .collect();
        if grid_n % 2 == 0 {
            v.push(center[k]);
        }
        v
    };
    let (ab, as_) = (axis(0), axis(1));
    let base_profit = deviation_profit(params, center, center)?;
    let profit = |d: [f64; 2]| deviation_profit(params, center, d);

    let cells: Vec<[f64; 2]> = ab.iter().flat_map(|&b| as_.iter().map(move |&s| [b, s])).collect();
    let values = cells.par_iter().map(|&d| profit(d)).collect::<Result<Vec<f64>>>()?;
    let mut evaluations = cells.len() + 1;
    let (mut best_p, mut best_v) = (center, base_profit);
    for (d, v) in cells.iter().zip(&values) {
        if *v > best_v {
            best_v = *v;
            best_p = *d;
        }
    }

    let step = [2.0 * hw[0] / (grid_n - 1) as f64, 2.0 * hw[1] / (grid_n - 1) as f64];
    let (nm_p, nm_v, nm_evals) = nelder_mead_max(&profit, best_p, step, NM_ITERATIONS)?;
    evaluations += nm_evals;
    if nm_v > best_v {
        best_v = nm_v;
        best_p = nm_p;
    }

    Ok(DeviationReport {
        base: eq.clone(),
        base_profit,
        best_deviation_prices: best_p,
        best_gain: (best_v - base_profit).max(0.0),
        grid_spec: DeviationGrid { center, half_width: hw, points_per_axis: grid_n },
        refined: true,
        evaluations,
    })
}

// Maximizes `f` over the plane; returns (argmax, max, evaluations).
fn nelder_mead_max(f: &impl Fn([f64; 2]) -> Result<f64>, start: [f64; 2], step: [f64; 2], iterations: usize) -> Result<([f64; 2], f64, usize)> {
    let mut evals = 0usize;
    let mut g = |x: [f64; 2]| -> Result<f64> {
        evals += 1;
        f(x).map(|v| -v)
    };
    let mut simplex = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = [g(simplex[0])?, g(simplex[1])?, g(simplex[2])?];
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    for _ in 0..iterations {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let [lo, mid, hi] = order;
        let centroid = lerp(simplex[lo], simplex[mid], 0.5);

        let xr = lerp(centroid, simplex[hi], -1.0);
        let fr = g(xr)?;
        if fr < vals[lo] {
            let xe = lerp(centroid, simplex[hi], -2.0);
            let fe = g(xe)?;
            if fe < fr {
                simplex[hi] = xe;
                vals[hi] = fe;
            } else {
                simplex[hi] = xr;
                vals[hi] = fr;
            }
        } else if fr < vals[mid] {
            simplex[hi] = xr;
            vals[hi] = fr;
        } else {
            let xc = if fr < vals[hi] { lerp(centroid, xr, 0.5) } else { lerp(centroid, simplex[hi], 0.5) };
            let fc = g(xc)?;
            if fc < vals[hi].min(fr) {
                simplex[hi] = xc;
                vals[hi] = fc;
            } else {
                for i in [mid, hi] {
                    simplex[i] = lerp(simplex[lo], simplex[i], 0.5);
                    vals[i] = g(simplex[i])?;
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    Ok((simplex[best], -vals[best], evals))
}

/// Second derivative of side-`k` profit in the platform's own share at
/// `z`, zero cross externalities.
pub fn soc_cne_diag(z: f64, params: &MarketParams, side: Side) -> Result<f64> {
    if !params.cross_free() {
        return Err(Error::CrossExternalities);
    }
    let k = side.idx();
    let (b, f, n) = (params.beta[k], params.phi[k][k], params.n());
    let s = statics::coeffs_for(Family::S, b, f, n, None)?;
    let den = statics::soc_denominator(b, f, n);
    let (v, d) = series::ratio_checked(&s.coeffs, s.lo, &den, 1, z);
    if d.abs() < 1e-300 || !v.is_finite() {
        return Err(Error::VanishingDenominator);
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix2 {
    pub m: [[f64; 2]; 2],
    /// Ascending.
    pub eigenvalues: [f64; 2],
    pub negative_definite: bool,
}

impl SymMatrix2 {
    pub fn new(m: [[f64; 2]; 2]) -> Self {
        let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        // leading principal minors
        let negative_definite = a < 0.0 && a * d - b * b > 0.0;
        SymMatrix2 { m, eigenvalues: [mean - r, mean + r], negative_definite }
    }
}

/// Hessian of industry profit in per-platform shares at the collusive point.
pub fn soc_ce_hessian(z: ZPoint, params: &MarketParams) -> SymMatrix2 {
    let n = params.n();
    let diag = |k: usize| {
        let (b, f) = (params.beta[k], params.phi[k][k]);
        let e = z[k].exp();
        -n * (-z[k]).exp() * (b * (n * e + 1.0).powi(3) - 2.0 * e * f)
    };
    let off = n * (params.phi[0][1] + params.phi[1][0]);
    SymMatrix2::new([[diag(0), off], [off, diag(1)]])
}

/// Second differences of `f` at `p`, step `1e-4 max(1, |p_k|)`.
pub fn numeric_hessian(f: impl Fn([f64; 2]) -> Result<f64>, p: [f64; 2]) -> Result<SymMatrix2> {
    let h = p.map(|v| 1e-4 * v.abs().max(1.0));
    let at = |db: f64, ds: f64| f([p[0] + db, p[1] + ds]);
    let f0 = at(0.0, 0.0)?;
    let hbb = (at(h[0], 0.0)? - 2.0 * f0 + at(-h[0], 0.0)?) / (h[0] * h[0]);
    let hss = (at(0.0, h[1])? - 2.0 * f0 + at(0.0, -h[1])?) / (h[1] * h[1]);
    let hbs = (at(h[0], h[1])? - at(h[0], -h[1])? - at(-h[0], h[1])? + at(-h[0], -h[1])?) / (4.0 * h[0] * h[1]);
    Ok(SymMatrix2::new([[hbb, hbs], [hbs, hss]]))
}

/// Price-space Hessian of the deviator's profit at the candidate prices.
pub fn numeric_price_hessian(params: &MarketParams, prices: [f64; 2]) -> Result<SymMatrix2> {
    numeric_hessian(|d| deviation_profit(params, prices, d), prices)
}

/// Price platform 0 must charge on `side` to hold share `x` there while
/// everyone else charges `others`; the other side price stays at `others`.
pub fn price_for_share(params: &MarketParams, others: [f64; 2], side: Side, x: f64) -> Result<f64> {
    let k = side.idx();
    let share = |p: f64| -> Result<f64> {
        let mut dev = others;
        dev[k] = p;
        let st = share_fixed_point_robust(params, &PriceProfile::deviation(params.n_platforms(), others, dev))?;
        Ok(st.platform(side, 0))
    };
    // share falls as the own price rises
    let width = 10.0 * params.beta[k].max(1.0) + params.phi.iter().flatten().map(|v| v.abs()).sum::<f64>();
    let (mut lo, mut hi) = (others[k] - width, others[k] + width);
    let (slo, shi) = (share(lo)?, share(hi)?);
    if !(slo > x && shi < x) {
        return Err(Error::NoRootInRange);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if share(mid)? > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Second difference of side-`k` profit `x p(x)` along the own-share path
/// through the symmetric point `(x*, p*)`.
pub fn share_path_soc(params: &MarketParams, eq: &SymmetricEquilibrium, side: Side, rel_step: f64) -> Result<f64> {
    let k = side.idx();
    let xs = eq.shares[k];
    let h = rel_step * xs;
    let pi = |x: f64| -> Result<f64> { Ok(x * price_for_share(params, eq.prices, side, x)?) };
    Ok((pi(xs + h)? - 2.0 * pi(xs)? + pi(xs - h)?) / (h * h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SOCReport {
    /// Closed-form own-share second derivatives at `z*`; absent with
    /// cross externalities.
    pub cne_diag: Option<[f64; 2]>,
    pub cne_diag_negative: Option<bool>,
    pub ce_hessian: Option<SymMatrix2>,
    /// Price-space Hessian of the deviating platform at `p*`.
    pub numeric_hessian: SymMatrix2,
}

/// Solves both regimes and collects every second-order check that applies.
pub fn verify_soc(params: &MarketParams, tol: f64) -> Result<SOCReport> {
    let cne = solve_cne(params, tol)?;
    let cne_diag = if params.cross_free() {
        Some([soc_cne_diag(cne.z[0], params, Side::Buyer)?, soc_cne_diag(cne.z[1], params, Side::Seller)?])
    } else {
        None
    };
    let ce_hessian = solve_ce(params, tol).ok().map(|ce| soc_ce_hessian(ce.z, params));
    Ok(SOCReport {
        cne_diag_negative: cne_diag.map(|d| d[0] < 0.0 && d[1] < 0.0),
        cne_diag,
        ce_hessian,
        numeric_hessian: numeric_price_hessian(params, cne.prices)?,
    })
}
