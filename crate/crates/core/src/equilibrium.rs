//! Symmetric competitive (CNE) and collusive (CE) equilibria in z-space.
//!
//! With `z_k = (u_k - u0_k) / beta_k` each platform holds `omega(z_k)` of side
//! `k` and charges `p = Phi Omega(z) - beta z - u0`. The first-order
//! conditions read `(Phi - H(z)) Omega(z) - u0 - beta z = 0`, with `H` the
//! pricing matrix of the regime, so `p = H(z) Omega(z)` at the root.

use crate::demand::omega;
use crate::model::{check_ce_existence, check_cne_existence, MarketParams, Side};
use crate::statics;
use crate::{Error, Result, EULER_GAMMA};

pub type ZPoint = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Cne,
    Ce,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Cne => "cne",
            Regime::Ce => "ce",
        }
    }
}

/// Per-platform equilibrium outcome, indexed `[buyer, seller]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEquilibrium {
    pub regime: Regime,
    pub n: f64,
    pub z: ZPoint,
    pub prices: [f64; 2],
    pub shares: [f64; 2],
    pub participation: [f64; 2],
    pub profit_per_side: [f64; 2],
    /// Profit of one platform.
    pub total_profit: f64,
    pub consumer_surplus: [f64; 2],
    pub foc_residual: f64,
    /// Set when the existence condition of the regime fails on some side.
    pub existence_warning: bool,
}

impl SymmetricEquilibrium {
    /// Industry profit, `N` times the per-platform value.
    pub fn aggregate_profit(&self) -> f64 {
        self.n * self.total_profit
    }
}

// D = beta (1 + (N-1) e)(1 + N e) - e phi
fn d_term(e: f64, beta: f64, phi: f64, n: f64) -> f64 {
    beta * (1.0 + (n - 1.0) * e) * (1.0 + n * e) - e * phi
}

/// Pricing matrix `H(z)` entry by entry. Fine for moderate `z`; for
/// large `z` prefer [`cne_prices`], which avoids the cancellation between
/// `L d K` and `h`.
pub fn h_matrix(z: ZPoint, params: &MarketParams) -> Result<[[f64; 2]; 2]> {
    let n = params.n();
    let [bb, bs] = params.beta;
    let [[pbb, pbs], [psb, pss]] = params.phi;
    let (eb, es) = (z[0].exp(), z[1].exp());
    let d = [bb * (1.0 + n * eb), bs * (1.0 + n * es)];
    let h = [
        bb * (1.0 + eb) * ((-z[0]).exp() + n),
        bs * (1.0 + es) * ((-z[1]).exp() + n),
    ];
    let kk = [
        pbb - bb * (1.0 + n * eb) * ((-z[0]).exp() + n - 1.0),
        pss - bs * (1.0 + n * es) * ((-z[1]).exp() + n - 1.0),
    ];
    let j = kk[0] * kk[1] - psb * pbs;
    let tiny = 1e-14 * (kk[0] * kk[1]).abs().max((psb * pbs).abs()).max(1.0);
    if kk[0].abs() < 1e-14 || kk[1].abs() < 1e-14 || j.abs() < tiny {
        return Err(Error::FocSingularity);
    }
    let l = [(n - 1.0) * bb * (1.0 + n * eb) / j, (n - 1.0) * bs * (1.0 + n * es) / j];
    Ok([
        [l[0] * d[0] * kk[1] + h[0] - pbb, -psb * (d[1] * l[0] + 1.0)],
        [-pbs * (d[0] * l[1] + 1.0), l[1] * d[1] * kk[0] + h[1] - pss],
    ])
}

/// `H(z) Omega(z)`, rearranged so each term is O(1) for any `z`.
///
/// Multiplying `J` through by `e_b e_s` gives `J' = D_b D_s - phi_sb phi_bs e_b e_s`
/// and `(L_b d_b K_s + h_b) omega_b = beta_b (D_s G_b - c e_b e_s (1 + e_b)) / J'`
/// with `G_k = beta_k (1 + N e_k)^2 - e_k (1 + e_k) phi_kk`.
pub fn cne_prices(z: ZPoint, params: &MarketParams) -> Result<[f64; 2]> {
    let n = params.n();
    let [bb, bs] = params.beta;
    let [[pbb, pbs], [psb, pss]] = params.phi;
    let (eb, es) = (z[0].exp(), z[1].exp());
    let (wb, ws) = (omega(z[0], n), omega(z[1], n));
    let db = d_term(eb, bb, pbb, n);
    let ds = d_term(es, bs, pss, n);
    let gb = bb * (1.0 + n * eb).powi(2) - eb * (1.0 + eb) * pbb;
    let gs = bs * (1.0 + n * es).powi(2) - es * (1.0 + es) * pss;
    let c = psb * pbs;
    let cee = c * eb * es;
    let jp = db * ds - cee;
    if db.abs() < 1e-14 * (1.0 + eb).powi(2) * bb
        || ds.abs() < 1e-14 * (1.0 + es).powi(2) * bs
        || jp.abs() < 1e-14 * (db * ds).abs().max(cee.abs())
    {
        return Err(Error::FocSingularity);
    }
    let diag_b = bb * (ds * gb - cee * (1.0 + eb)) / jp - pbb * wb;
    let diag_s = bs * (db * gs - cee * (1.0 + es)) / jp - pss * ws;
    // d_s L_b = d_b L_s
    let dl = (n - 1.0) * bb * bs * (1.0 + n * eb) * (1.0 + n * es) * eb * es / jp;
    Ok([
        diag_b - psb * (dl + 1.0) * ws,
        diag_s - pbs * (dl + 1.0) * wb,
    ])
}

fn phi_omega_minus(z: ZPoint, params: &MarketParams) -> [f64; 2] {
    let n = params.n();
    let w = [omega(z[0], n), omega(z[1], n)];
    Side::BOTH.map(|s| {
        let k = s.idx();
        params.externality(s, w) - params.beta[k] * z[k] - params.u0[k]
    })
}

/// `(Phi - H(z)) Omega(z) - u0 - beta z`.
pub fn cne_foc_residual(z: ZPoint, params: &MarketParams) -> Result<[f64; 2]> {
    let p = cne_prices(z, params)?;
    let q = phi_omega_minus(z, params);
    Ok([q[0] - p[0], q[1] - p[1]])
}

/// Collusive pricing matrix, diagonal `beta_k (1 + N e^{z_k})^2 / e^{z_k} - phi_kk`.
pub fn hc_matrix(z: ZPoint, params: &MarketParams) -> [[f64; 2]; 2] {
    let n = params.n();
    let diag = |k: usize| {
        let e = z[k].exp();
        params.beta[k] * (1.0 + n * e).powi(2) / e - params.phi[k][k]
    };
    [[diag(0), -params.phi[1][0]], [-params.phi[0][1], diag(1)]]
}

/// `H^C(z) Omega(z)` without forming `e^{-z}`.
pub fn ce_prices(z: ZPoint, params: &MarketParams) -> [f64; 2] {
    let n = params.n();
    let w = [omega(z[0], n), omega(z[1], n)];
    let [[pbb, pbs], [psb, pss]] = params.phi;
    let [bb, bs] = params.beta;
    [
        bb * (1.0 + n * z[0].exp()) - pbb * w[0] - psb * w[1],
        bs * (1.0 + n * z[1].exp()) - pss * w[1] - pbs * w[0],
    ]
}

pub fn ce_foc_residual(z: ZPoint, params: &MarketParams) -> [f64; 2] {
    let p = ce_prices(z, params);
    let q = phi_omega_minus(z, params);
    [q[0] - p[0], q[1] - p[1]]
}

/// Decoupled CNE condition for one side when cross externalities vanish.
pub fn cne_decoupled_residual(z: f64, beta: f64, phi: f64, n: f64, u0: f64) -> f64 {
    let e = z.exp();
    let a = 1.0 + n * e;
    let num = -beta * beta * a.powi(3) + beta * phi * e * ((2.0 * n - 1.0) * e + 3.0) * a - 2.0 * e * e * phi * phi;
    num / (a * d_term(e, beta, phi, n)) - beta * z - u0
}

/// Decoupled CE condition `2 phi omega - beta (1 + N e^z) - beta z - u0`.
pub fn ce_decoupled_residual(z: f64, beta: f64, phi: f64, n: f64, u0: f64) -> f64 {
    2.0 * phi * omega(z, n) - beta * (1.0 + n * z.exp()) - beta * z - u0
}

fn ce_decoupled_slope(z: f64, beta: f64, phi: f64, n: f64) -> f64 {
    let e = z.exp();
    let a = 1.0 + n * e;
    (2.0 * e * phi - beta * a.powi(3)) / (a * a)
}

// bisection on a decreasing-at-root function, widening the bracket until
// e^z overflows
fn bisect(f: impl Fn(f64) -> f64) -> Result<f64> {
    for half in [60.0, 120.0, 240.0, 480.0, 700.0] {
        let (mut lo, mut hi) = (-half, half);
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
            continue;
        }
        let lo_positive = flo > 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if (fm > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::NoRootInRange)
}

fn polish(z: f64, f: impl Fn(f64) -> f64, slope: f64) -> f64 {
    if !(slope.is_finite() && slope != 0.0) {
        return z;
    }
    let next = z - f(z) / slope;
    if next.is_finite() && f(next).abs() <= f(z).abs() {
        next
    } else {
        z
    }
}

fn solve_decoupled(regime: Regime, params: &MarketParams, side: Side) -> Result<f64> {
    let k = side.idx();
    let (b, phi, n, u0) = (params.beta[k], params.phi[k][k], params.n(), params.u0[k]);
    match regime {
        Regime::Cne => {
            let f = |z: f64| cne_decoupled_residual(z, b, phi, n, u0);
            let z = bisect(f)?;
            Ok(polish(z, f, statics::dm_dz(z, b, phi, n)))
        }
        Regime::Ce => {
            let f = |z: f64| ce_decoupled_residual(z, b, phi, n, u0);
            let z = bisect(f)?;
            Ok(polish(z, f, ce_decoupled_slope(z, b, phi, n)))
        }
    }
}

/// Root of the decoupled condition of one side, ignoring cross terms.
pub fn decoupled_root(regime: Regime, params: &MarketParams, side: Side) -> Result<f64> {
    params.validate()?;
    let z = solve_decoupled(regime, params, side)?;
    let k = side.idx();
    let (b, phi, n, u0) = (params.beta[k], params.phi[k][k], params.n(), params.u0[k]);
    let m = match regime {
        Regime::Cne => cne_decoupled_residual(z, b, phi, n, u0),
        Regime::Ce => ce_decoupled_residual(z, b, phi, n, u0),
    };
    if !(m.abs() <= 1e-8 * (1.0 + (b * z).abs() + u0.abs())) {
        return Err(Error::NoRootInRange);
    }
    Ok(z)
}

pub fn cne_decoupled_root(params: &MarketParams, side: Side) -> Result<f64> {
    decoupled_root(Regime::Cne, params, side)
}

fn sup(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Damped Newton with a central-difference Jacobian (`h = 1e-7`).
fn newton_2d(f: impl Fn(ZPoint) -> Result<[f64; 2]>, z0: ZPoint, tol: f64) -> Result<(ZPoint, f64)> {
    let mut z = z0;
    let mut fz = f(z)?;
    let mut r = sup(fz);
    let target = tol.min(1e-13);
    let mut trace = Vec::new();
    for _ in 0..100 {
        if r <= target {
            break;
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let (fp, fm) = (f(zp)?, f(zm)?);
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.is_finite() && det != 0.0) {
            return Err(Error::NewtonDiverged(format!("singular jacobian at z = {z:?}, trace {trace:?}")));
        }
        let step = [
            (jac[1][1] * fz[0] - jac[0][1] * fz[1]) / det,
            (jac[0][0] * fz[1] - jac[1][0] * fz[0]) / det,
        ];
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..100 {
            let cand = [z[0] - lambda * step[0], z[1] - lambda * step[1]];
            if let Ok(fc) = f(cand) {
                let rc = sup(fc);
                if rc.is_finite() && rc < r {
                    z = cand;
                    fz = fc;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        trace.push(r);
        if !accepted {
            break;
        }
    }
    if r <= tol {
        Ok((z, r))
    } else {
        Err(Error::NewtonDiverged(format!("residual {r:e} above tolerance {tol:e}, trace {trace:?}")))
    }
}

fn decoupled_seed(regime: Regime, params: &MarketParams) -> Result<ZPoint> {
    let mut p = params.clone();
    p.phi[0][1] = 0.0;
    p.phi[1][0] = 0.0;
    Ok([solve_decoupled(regime, &p, Side::Buyer)?, solve_decoupled(regime, &p, Side::Seller)?])
}

/// `CS_k = mu_k + beta_k (ln(N+1) + gamma_EM) - p_k + phi_k(x)`.
pub fn consumer_surplus(params: &MarketParams, prices: [f64; 2], shares: [f64; 2]) -> [f64; 2] {
    let n = params.n();
    Side::BOTH.map(|s| {
        let k = s.idx();
        params.mu[k] + params.beta[k] * ((n + 1.0).ln() + EULER_GAMMA) - prices[k] + params.externality(s, shares)
    })
}

fn assemble(regime: Regime, params: &MarketParams, z: ZPoint, residual: f64) -> Result<SymmetricEquilibrium> {
    let n = params.n();
    let prices = match regime {
        Regime::Cne => cne_prices(z, params)?,
        Regime::Ce => ce_prices(z, params),
    };
    let shares = [omega(z[0], n), omega(z[1], n)];
    let profit_per_side = [prices[0] * shares[0], prices[1] * shares[1]];
    let exists = match regime {
        Regime::Cne => check_cne_existence(params),
        Regime::Ce => check_ce_existence(params),
    };
    Ok(SymmetricEquilibrium {
        regime,
        n,
        z,
        prices,
        shares,
        participation: [n * shares[0], n * shares[1]],
        profit_per_side,
        total_profit: profit_per_side[0] + profit_per_side[1],
        consumer_surplus: consumer_surplus(params, prices, shares),
        foc_residual: residual,
        existence_warning: !(exists[0] && exists[1]),
    })
}

fn solve(regime: Regime, params: &MarketParams, tol: f64) -> Result<SymmetricEquilibrium> {
    params.validate()?;
    let residual = |z: ZPoint| match regime {
        Regime::Cne => cne_foc_residual(z, params),
        Regime::Ce => Ok(ce_foc_residual(z, params)),
    };
    let seed = decoupled_seed(regime, params)?;
    let (z, r) = if params.cross_free() {
        let r = sup(residual(seed)?);
        if r > tol {
            // bisection landed on a pole or the bracket is too coarse
            return Err(Error::NoRootInRange);
        }
        (seed, r)
    } else {
        newton_2d(residual, seed, tol)?
    };
    assemble(regime, params, z, r)
}

/// Symmetric CNE. Solved side by side by bisection when cross externalities
/// vanish, by Newton from the decoupled root otherwise.
pub fn solve_cne(params: &MarketParams, tol: f64) -> Result<SymmetricEquilibrium> {
    solve(Regime::Cne, params, tol)
}

pub fn solve_ce(params: &MarketParams, tol: f64) -> Result<SymmetricEquilibrium> {
    solve(Regime::Ce, params, tol)
}

pub fn solve_regime(regime: Regime, params: &MarketParams, tol: f64) -> Result<SymmetricEquilibrium> {
    solve(regime, params, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeComparison {
    pub cne: SymmetricEquilibrium,
    pub ce: SymmetricEquilibrium,
    /// `z* - z^C`
    pub dz: [f64; 2],
    /// `N x* - N x^C`
    pub d_participation: [f64; 2],
    /// `p* - p^C`
    pub d_price: [f64; 2],
    /// Per side: `(Phi (x^C - x*))_k` and `beta_k (z*_k - z^C_k)`; they sum to `p^C - p*`.
    pub decomposition: [[f64; 2]; 2],
}

pub fn compare_regimes(params: &MarketParams, tol: f64) -> Result<RegimeComparison> {
    let cne = solve_cne(params, tol)?;
    let ce = solve_ce(params, tol)?;
    let dx = [ce.shares[0] - cne.shares[0], ce.shares[1] - cne.shares[1]];
    let decomposition = Side::BOTH.map(|s| {
        let k = s.idx();
        [params.externality(s, dx), params.beta[k] * (cne.z[k] - ce.z[k])]
    });
    Ok(RegimeComparison {
        dz: [cne.z[0] - ce.z[0], cne.z[1] - ce.z[1]],
        d_participation: [
            cne.participation[0] - ce.participation[0],
            cne.participation[1] - ce.participation[1],
        ],
        d_price: [cne.prices[0] - ce.prices[0], cne.prices[1] - ce.prices[1]],
        decomposition,
        cne,
        ce,
    })
}
