//! Market parameters, existence conditions and the cubic root solver.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Buyer,
    Seller,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Buyer, Side::Seller];

    pub fn idx(self) -> usize {
        match self {
            Side::Buyer => 0,
            Side::Seller => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Buyer => Side::Seller,
            Side::Seller => Side::Buyer,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Buyer => "b",
            Side::Seller => "s",
        }
    }
}

/// Exogenous market description.
///
/// `phi[k][j]` is the utility a side-`k` user gets per unit share of side `j`
/// on the same platform, so `phi = [[phi_bb, phi_bs], [phi_sb, phi_ss]]`.
///
/// The platform count lives in two forms: the integer used by the share
/// fixed point and deviation search, and a real used by every closed form so
/// that derivatives in `N` can be checked by central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    n_platforms: usize,
    n: f64,
    pub beta: [f64; 2],
    pub mu: [f64; 2],
    pub phi: [[f64; 2]; 2],
    pub u0: [f64; 2],
}

impl MarketParams {
    pub fn new(
        n_platforms: usize,
        beta: [f64; 2],
        mu: [f64; 2],
        phi: [[f64; 2]; 2],
        u0: [f64; 2],
    ) -> Result<Self> {
        let p = MarketParams { n_platforms, n: n_platforms as f64, beta, mu, phi, u0 };
        p.validate()?;
        Ok(p)
    }

    /// Same parameters on both sides, no cross-side externality, `mu = 0`.
    pub fn symmetric(n_platforms: usize, beta: f64, phi_kk: f64, u0: f64) -> Result<Self> {
        Self::new(
            n_platforms,
            [beta; 2],
            [0.0; 2],
            [[phi_kk, 0.0], [0.0, phi_kk]],
            [u0; 2],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_platforms < 2 {
            return Err(Error::InvalidParams(format!("need N >= 2, got {}", self.n_platforms)));
        }
        if !(self.n.is_finite() && self.n > 1.0) {
            return Err(Error::InvalidParams(format!("real N must be finite and > 1, got {}", self.n)));
        }
        for k in 0..2 {
            if !(self.beta[k].is_finite() && self.beta[k] > 0.0) {
                return Err(Error::InvalidParams(format!("beta must be positive, got {}", self.beta[k])));
            }
        }
        let all = self.mu.iter().chain(self.u0.iter()).chain(self.phi.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite mu, phi or u0".into()));
        }
        Ok(())
    }

    pub fn n_platforms(&self) -> usize {
        self.n_platforms
    }

    /// Platform count as a real; equals `n_platforms` unless overridden.
    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn with_n(mut self, n_platforms: usize) -> Result<Self> {
        self.n_platforms = n_platforms;
        self.n = n_platforms as f64;
        self.validate()?;
        Ok(self)
    }

    /// Overrides only the real-valued `N` seen by the closed forms and the
    /// symmetric solvers. The integer count is left alone.
    pub fn with_real_n(mut self, n: f64) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    pub fn phi_own(&self, side: Side) -> f64 {
        let k = side.idx();
        self.phi[k][k]
    }

    pub fn phi_cross(&self, side: Side) -> f64 {
        self.phi[side.idx()][side.other().idx()]
    }

    pub fn cross_free(&self) -> bool {
        self.phi[0][1] == 0.0 && self.phi[1][0] == 0.0
    }

    /// Externality felt by side `k` on a platform with shares `x = (x_b, x_s)`.
    pub fn externality(&self, side: Side, x: [f64; 2]) -> f64 {
        let k = side.idx();
        self.phi[k][0] * x[0] + self.phi[k][1] * x[1]
    }
}

/// `f(N) = 2(N-1)/N^2`; CNE existence needs `beta > f(N) phi` when `phi > 0`.
pub fn f_existence(n: f64) -> f64 {
    2.0 * (n - 1.0) / (n * n)
}

/// CE existence coefficient `8 / (27 N)`.
pub fn ce_existence_coef(n: f64) -> f64 {
    8.0 / (27.0 * n)
}

fn side_ok(beta: f64, phi: f64, coef: f64) -> bool {
    if phi <= 0.0 {
        beta > 0.0
    } else {
        beta > coef * phi
    }
}

pub fn check_cne_existence(params: &MarketParams) -> [bool; 2] {
    let f = f_existence(params.n());
    Side::BOTH.map(|s| side_ok(params.beta[s.idx()], params.phi_own(s), f))
}

pub fn check_ce_existence(params: &MarketParams) -> [bool; 2] {
    let f = ce_existence_coef(params.n());
    Side::BOTH.map(|s| side_ok(params.beta[s.idx()], params.phi_own(s), f))
}

/// `c3 x^3 + c2 x^2 + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Cubic {
    pub fn new(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Cubic { c3, c2, c1, c0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.c3 * x + self.c2) * x + self.c1) * x + self.c0
    }

    fn deriv(&self, x: f64) -> f64 {
        (3.0 * self.c3 * x + 2.0 * self.c2) * x + self.c1
    }

    /// `max(1, |c3|, ..., |c0|)`, the scale the root residual is measured in.
    pub fn scale(&self) -> f64 {
        [1.0, self.c3.abs(), self.c2.abs(), self.c1.abs(), self.c0.abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Depressed-cubic discriminant `(s/2)^2 + (t/3)^3` of the monic form.
    pub fn discriminant(&self) -> f64 {
        let (t, s) = self.depressed();
        (s / 2.0).powi(2) + (t / 3.0).powi(3)
    }

    // monic x^3 + a x^2 + b x + c -> y^3 + t y + s with x = y - a/3
    fn depressed(&self) -> (f64, f64) {
        let a = self.c2 / self.c3;
        let b = self.c1 / self.c3;
        let c = self.c0 / self.c3;
        let t = b - a * a / 3.0;
        let s = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        (t, s)
    }

    fn polish(&self, mut x: f64) -> f64 {
        let mut best = self.eval(x).abs();
        for _ in 0..20 {
            let d = self.deriv(x);
            if d == 0.0 || best == 0.0 {
                break;
            }
            let next = x - self.eval(x) / d;
            let r = self.eval(next).abs();
            if !(r < best) {
                break;
            }
            x = next;
            best = r;
        }
        x
    }
}

/// Real roots in ascending order, with numerically coincident roots merged.
///
/// Three real roots come from the trigonometric form, a single one from the
/// radical form. Near a multiple root the discriminant is unreliable, so the
/// trigonometric seeds are Newton-polished instead.
pub fn solve_cubic_real(c: &Cubic) -> Result<Vec<f64>> {
    let scale = [c.c3, c.c2, c.c1, c.c0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    if c.c3 == 0.0 {
        return Ok(solve_quadratic(c.c2, c.c1, c.c0));
    }

    let a = c.c2 / c.c3;
    let (t, s) = c.depressed();
    let delta = (s / 2.0).powi(2) + (t / 3.0).powi(3);
    let delta_scale = (s / 2.0).powi(2) + (t / 3.0).abs().powi(3);
    let shift = -a / 3.0;

    let mut roots = if delta_scale == 0.0 {
        // y^3 = 0
        vec![shift]
    } else if delta.abs() <= 1e-14 * delta_scale {
        if t < 0.0 {
            trig_roots(t, s).map(|y| y + shift).to_vec()
        } else {
            vec![(-s).cbrt() + shift]
        }
    } else if delta < 0.0 {
        trig_roots(t, s).map(|y| y + shift).to_vec()
    } else {
        let sq = delta.sqrt();
        // pick the non-cancelling branch, recover the other from u v = -t/3
        let u = (-s / 2.0 - s.signum() * sq).cbrt();
        let y = if u == 0.0 { 0.0 } else { u - t / (3.0 * u) };
        vec![y + shift]
    };

    for r in roots.iter_mut() {
        *r = c.polish(*r);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
    Ok(roots)
}

fn trig_roots(t: f64, s: f64) -> [f64; 3] {
    let r = 2.0 * (-t / 3.0).sqrt();
    let arg = ((3.0 * s) / (2.0 * t) * (-3.0 / t).sqrt()).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    [0.0, 1.0, 2.0].map(|j| r * (theta - two_pi_3 * j).cos())
}

fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
    let mut r = vec![q / a, if q != 0.0 { c / q } else { 0.0 }];
    r.sort_by(|x, y| x.total_cmp(y));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existence_examples() {
        let p = MarketParams::symmetric(4, 0.4, 1.0, 0.0).unwrap();
        assert_eq!(check_cne_existence(&p), [true, true]);
        let p = MarketParams::symmetric(2, 0.01, -3.0, 0.0).unwrap();
        assert_eq!(check_cne_existence(&p), [true, true]);
        let p = MarketParams::symmetric(4, 0.375, 1.0, 0.0).unwrap();
        assert_eq!(check_cne_existence(&p), [false, false]);

        let p = MarketParams::symmetric(2, 0.2, 1.0, 0.0).unwrap();
        assert_eq!(check_ce_existence(&p), [true, true]);
        let p = MarketParams::symmetric(2, 0.1, 1.0, 0.0).unwrap();
        assert_eq!(check_ce_existence(&p), [false, false]);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(MarketParams::symmetric(1, 1.0, 0.0, 0.0).is_err());
        assert!(MarketParams::symmetric(2, 0.0, 0.0, 0.0).is_err());
        assert!(MarketParams::symmetric(2, 1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn side_other_is_involution() {
        for s in Side::BOTH {
            assert_eq!(s.other().other(), s);
            assert_ne!(s.other(), s);
        }
    }

    #[test]
    fn simple_cubics() {
        let r = solve_cubic_real(&Cubic::new(1.0, 0.0, 0.0, -1.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-14);

        let r = solve_cubic_real(&Cubic::new(1.0, 0.0, -1.0, 0.0)).unwrap();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(solve_cubic_real(&Cubic::new(0.0, 0.0, 0.0, 0.0)), Err(Error::DegeneratePolynomial));
        let r = solve_cubic_real(&Cubic::new(0.0, 1.0, 0.0, -4.0)).unwrap();
        assert_eq!(r, vec![-2.0, 2.0]);
        let r = solve_cubic_real(&Cubic::new(0.0, 0.0, 2.0, -1.0)).unwrap();
        assert_eq!(r, vec![0.5]);
    }

    #[test]
    fn near_multiple_roots() {
        // (x-1)^3
        let r = solve_cubic_real(&Cubic::new(1.0, -3.0, 3.0, -1.0)).unwrap();
        assert!(r.iter().all(|x| (x - 1.0).abs() < 1e-4));
        // (x-1)^2 (x+2)
        let c = Cubic::new(1.0, 0.0, -3.0, 2.0);
        let r = solve_cubic_real(&c).unwrap();
        assert!(r.iter().any(|x| (x + 2.0).abs() < 1e-12));
        assert!(r.iter().any(|x| (x - 1.0).abs() < 1e-6));
        for x in r {
            assert!(c.eval(x).abs() <= 1e-9 * c.scale());
        }
    }

    #[test]
    fn f_decreasing_to_zero() {
        let mut prev = f_existence(2.0);
        for n in 3..2000 {
            let v = f_existence(n as f64);
            assert!(v < prev);
            prev = v;
        }
        assert!(f_existence(1e6) < 3e-6);
    }
}
