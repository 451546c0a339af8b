//! Stage-2 demand: logit shares, the share fixed point and a Monte Carlo oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel};
use rayon::prelude::*;

use crate::model::{MarketParams, Side};
use crate::{Error, Result};

/// Symmetric per-platform share `1 / (e^{-z} + N)`.
pub fn omega(z: f64, n: f64) -> f64 {
    1.0 / ((-z).exp() + n)
}

/// Softmax of `utilities / beta`, shifted by the max for overflow safety.
pub fn logit_shares(utilities: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta.is_finite()) || utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidUtility);
    }
    let m = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = utilities.iter().map(|u| ((u - m) / beta).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Prices per side and platform, `prices[k][i]` for platform `i = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceProfile {
    pub prices: [Vec<f64>; 2],
}

impl PriceProfile {
    pub fn symmetric(n: usize, p: [f64; 2]) -> Self {
        PriceProfile { prices: [vec![p[0]; n], vec![p[1]; n]] }
    }

    /// Platform 0 charges `dev`, everyone else `others`.
    pub fn deviation(n: usize, others: [f64; 2], dev: [f64; 2]) -> Self {
        let mut pp = Self::symmetric(n, others);
        pp.prices[0][0] = dev[0];
        pp.prices[1][0] = dev[1];
        pp
    }

    fn check(&self, n: usize) -> Result<()> {
        for side in &self.prices {
            if side.len() != n {
                return Err(Error::InvalidParams(format!("expected {n} prices per side, got {}", side.len())));
            }
            if side.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidParams("non-finite price".into()));
            }
        }
        Ok(())
    }
}

/// Shares per side including the outside option at index 0;
/// platform `i` sits at index `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub shares: [Vec<f64>; 2],
}

impl MarketState {
    pub fn uniform(n: usize) -> Self {
        let v = vec![1.0 / (n as f64 + 1.0); n + 1];
        MarketState { shares: [v.clone(), v] }
    }

    pub fn outside(&self, side: Side) -> f64 {
        self.shares[side.idx()][0]
    }

    pub fn platform(&self, side: Side, i: usize) -> f64 {
        self.shares[side.idx()][i + 1]
    }

    fn sup_distance(&self, other: &MarketState) -> f64 {
        let mut d: f64 = 0.0;
        for k in 0..2 {
            for (a, b) in self.shares[k].iter().zip(&other.shares[k]) {
                d = d.max((a - b).abs());
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { damping: 0.5, tol: 1e-12, max_iter: 100_000 }
    }
}

/// One application of the share map.
pub fn share_map(params: &MarketParams, prices: &PriceProfile, x: &MarketState) -> Result<MarketState> {
    let n = params.n_platforms();
    let mut out = [Vec::with_capacity(n + 1), Vec::with_capacity(n + 1)];
    let mut utils = vec![0.0; n + 1];
    for side in Side::BOTH {
        let k = side.idx();
        utils[0] = params.u0[k];
        for i in 0..n {
            let xi = [x.shares[0][i + 1], x.shares[1][i + 1]];
            utils[i + 1] = params.externality(side, xi) - prices.prices[k][i];
        }
        out[k] = logit_shares(&utils, params.beta[k])?;
    }
    Ok(MarketState { shares: out })
}

pub fn share_fixed_point(params: &MarketParams, prices: &PriceProfile, opts: FixedPointOptions) -> Result<MarketState> {
    share_fixed_point_from(params, prices, &MarketState::uniform(params.n_platforms()), opts)
}

/// Damped iteration `x <- (1-d) x + d S(x)` from a given start.
pub fn share_fixed_point_from(
    params: &MarketParams,
    prices: &PriceProfile,
    start: &MarketState,
    opts: FixedPointOptions,
) -> Result<MarketState> {
    params.validate()?;
    let n = params.n_platforms();
    prices.check(n)?;
    if !(opts.tol > 0.0) || !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParams("need tol > 0 and damping in (0, 1]".into()));
    }
    if params.phi.iter().flatten().all(|&v| v == 0.0) {
        // shares do not feed back into utilities
        return share_map(params, prices, start);
    }

    let d = opts.damping;
    let mut x = start.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let y = share_map(params, prices, &x)?;
        residual = y.sup_distance(&x);
        if residual <= opts.tol {
            return Ok(y);
        }
        for k in 0..2 {
            for (xi, yi) in x.shares[k].iter_mut().zip(&y.shares[k]) {
                *xi = (1.0 - d) * *xi + d * yi;
            }
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

/// Retries with smaller damping when the default iteration stalls.
pub fn share_fixed_point_robust(params: &MarketParams, prices: &PriceProfile) -> Result<MarketState> {
    let mut last = None;
    for damping in [0.5, 0.25, 0.1] {
        let opts = FixedPointOptions { damping, ..Default::default() };
        match share_fixed_point(params, prices, opts) {
            Ok(s) => return Ok(s),
            Err(e @ Error::NoConvergence { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

#[derive(Debug, Clone)]
pub struct MultiStartReport {
    pub points: Vec<MarketState>,
    /// Largest sup-distance between any converged point and the first one.
    pub max_distance: f64,
    /// More than one fixed point found (distance above `1e-9`).
    pub multiple: bool,
}

/// Runs the fixed point from `starts` random interior states.
pub fn multi_start_fixed_points(
    params: &MarketParams,
    prices: &PriceProfile,
    starts: usize,
    seed: u64,
    opts: FixedPointOptions,
) -> Result<MultiStartReport> {
    let n = params.n_platforms();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<MarketState> = Vec::with_capacity(starts);
    for _ in 0..starts {
        let mut shares = [vec![0.0; n + 1], vec![0.0; n + 1]];
        for side in shares.iter_mut() {
            // uniform on the simplex via normalised exponentials
            for v in side.iter_mut() {
                *v = -(1.0 - rng.gen::<f64>()).ln();
            }
            let t: f64 = side.iter().sum();
            side.iter_mut().for_each(|v| *v /= t);
        }
        points.push(share_fixed_point_from(params, prices, &MarketState { shares }, opts)?);
    }
    let max_distance = points.iter().map(|p| p.sup_distance(&points[0])).fold(0.0, f64::max);
    Ok(MultiStartReport { multiple: max_distance > 1e-9, max_distance, points })
}

/// `1 - M_T M_phi` with `M_T = 1 / (2 min beta)` and `M_phi` the largest
/// absolute row sum of `phi`. A positive value certifies a unique fixed point.
pub fn contraction_margin(params: &MarketParams) -> f64 {
    let m_t = 1.0 / (2.0 * params.beta[0].min(params.beta[1]));
    let m_phi = params
        .phi
        .iter()
        .map(|row| row[0].abs() + row[1].abs())
        .fold(0.0, f64::max);
    1.0 - m_t * m_phi
}

/// Own- and cross-utility derivatives of a platform share at a symmetric point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareSensitivities {
    pub s: f64,
    pub r: f64,
}

pub fn sensitivities(z: f64, params: &MarketParams, side: Side) -> ShareSensitivities {
    let b = params.beta[side.idx()];
    let n = params.n();
    let e = z.exp();
    let den = (1.0 + n * e).powi(2);
    ShareSensitivities {
        s: e * (1.0 + (n - 1.0) * e) / (b * den),
        r: -(e * e) / (b * den),
    }
}

/// Sampled choice frequencies with binomial standard errors.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub shares: [Vec<f64>; 2],
    pub std_err: [Vec<f64>; 2],
    pub samples: usize,
}

const CHUNK: usize = 1 << 16;

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// counts argmax of v + eps over `samples` Gumbel(mu, beta) draws per option
fn sample_argmax(v: &[f64], mu: f64, beta: f64, samples: usize, seed: u64, stream_base: u64) -> Vec<u64> {
    let g = Gumbel::new(mu, beta).expect("beta checked positive");
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, stream_base + c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; v.len()];
            for _ in 0..len {
                let mut best = 0;
                let mut best_u = f64::NEG_INFINITY;
                for (i, vi) in v.iter().enumerate() {
                    let u = vi + g.sample(&mut rng);
                    if u > best_u {
                        best_u = u;
                        best = i;
                    }
                }
                counts[best] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; v.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Simulates individual choices with the externality term frozen at
/// `fixed_state`. Deterministic given `seed`, whatever the thread count.
pub fn monte_carlo_shares(
    params: &MarketParams,
    prices: &PriceProfile,
    fixed_state: &MarketState,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    params.validate()?;
    let n = params.n_platforms();
    prices.check(n)?;
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let mut shares = [Vec::new(), Vec::new()];
    let mut std_err = [Vec::new(), Vec::new()];
    for side in Side::BOTH {
        let k = side.idx();
        let mut v = vec![params.u0[k]; n + 1];
        for i in 0..n {
            let xi = [fixed_state.shares[0][i + 1], fixed_state.shares[1][i + 1]];
            v[i + 1] = params.externality(side, xi) - prices.prices[k][i];
        }
        // stream ids: even for buyers, odd for sellers, spaced by chunk
        let base = (k as u64) << 40;
        let counts = sample_argmax(&v, params.mu[k], params.beta[k], samples, seed, base);
        let m = samples as f64;
        shares[k] = counts.iter().map(|&c| c as f64 / m).collect();
        std_err[k] = shares[k].iter().map(|&q| (q * (1.0 - q) / m).sqrt()).collect();
    }
    Ok(McEstimate { shares, std_err, samples })
}

/// Sample mean and standard error of the max of `options` Gumbel(mu, beta) draws.
pub fn monte_carlo_expected_max(options: usize, mu: f64, beta: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if options == 0 || samples < 2 || !(beta > 0.0) {
        return Err(Error::InvalidParams("need options >= 1, samples >= 2, beta > 0".into()));
    }
    let g = Gumbel::new(mu, beta).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let chunks = samples.div_ceil(CHUNK);
    let (s, s2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, (2u64 << 40) + c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let m = (0..options).map(|_| g.sample(&mut rng)).fold(f64::NEG_INFINITY, f64::max);
                s += m;
                s2 += m * m;
            }
            (s, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean) * m / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}
