//! Threshold functions in `(phi_kk, beta_k)` space and the classifiers built
//! on them.
//!
//! Thresholds come in three shapes. Some depend on `N` only and are
//! coefficients `c(N)` of a line `beta = c(N) phi`; some take `(N, phi)` and
//! return a `beta` value directly (the cubic roots among them); `Gamma` and
//! `GammaC` also need `u0`, and `UTilde`/`UTildeC` return a `u0` value.
//! [`beta_boundary`] turns any of the first three into a `beta` value.
//!
//! The classifiers encode sufficient conditions only,
//! derived with the cross externalities switched off. Cells they do not cover
//! are `Indeterminate`.

use rayon::prelude::*;

use crate::equilibrium::{solve_regime, Regime};
use crate::model::{ce_existence_coef, f_existence, solve_cubic_real, Cubic, MarketParams, Side};
use crate::statics::{self, Quantity, Wrt};
use crate::{Error, Result};

/// `Boundary` is reported when the governing slack is below this, in
/// `beta` units (or `z` units for conditions on `z*`).
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdKind {
    /// `f(N) = 2(N-1)/N^2`. N only.
    FExistence,
    /// `8/(27N)`. N only.
    CeExistence,
    /// `gamma(N, phi, u0)`, the `z* = 0` curve.
    Gamma,
    /// `gamma^C(N, phi, u0)`.
    GammaC,
    /// Critical outside utility for the CNE sign of `z*`. `(N, phi)`, a `u0` value.
    UTilde,
    /// Same for the collusive regime.
    UTildeC,
    /// `g_{p,u}(N)`. N only.
    GpU,
    /// `f_{p,u}(N)`. N only.
    FpU,
    /// `g_{pi,u}(N)`. N only.
    GpiU,
    /// Unique real root of the cubic bounding the CS decrease region in `u0`. `(N, phi)`.
    FcsU,
    /// Largest real root of the price/N cubic, used for `phi < 0`. `(N, phi)`.
    Gp,
    /// Upper edge of the price-increase region: `2 phi / 3` at `N = 3`, the
    /// unique real root of its cubic for `N >= 4`. `(N, phi)`.
    Fp,
    /// `g_x(N)`. N only.
    Gx,
    /// `g_CS(N)`. N only.
    Gcs,
    /// Largest real root of the CS/N cubic. `(N, phi)`.
    Fcs,
    /// Unique real root of the profit/N cubic. `(N, phi)`.
    Gpi,
    /// `h_pi(N) = (2N-1)/N^2`. N only.
    Hpi,
    /// Largest real root of the profit/N cubic for `phi < 0`. `(N, phi)`.
    Fpi,
    /// `2 phi`.
    TwoPhi,
    /// `phi`.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    /// Coefficient of a line through the origin.
    N,
    /// A `beta` value.
    NPhi,
    /// A `beta` value that also depends on `u0`.
    NPhiU0,
    /// A `u0` value.
    NPhiToU0,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 20] = [
        ThresholdKind::FExistence,
        ThresholdKind::CeExistence,
        ThresholdKind::Gamma,
        ThresholdKind::GammaC,
        ThresholdKind::UTilde,
        ThresholdKind::UTildeC,
        ThresholdKind::GpU,
        ThresholdKind::FpU,
        ThresholdKind::GpiU,
        ThresholdKind::FcsU,
        ThresholdKind::Gp,
        ThresholdKind::Fp,
        ThresholdKind::Gx,
        ThresholdKind::Gcs,
        ThresholdKind::Fcs,
        ThresholdKind::Gpi,
        ThresholdKind::Hpi,
        ThresholdKind::Fpi,
        ThresholdKind::TwoPhi,
        ThresholdKind::Phi,
    ];

    pub fn signature(self) -> Signature {
        use ThresholdKind::*;
        match self {
            FExistence | CeExistence | GpU | FpU | GpiU | Gx | Gcs | Hpi => Signature::N,
            FcsU | Gp | Fp | Fcs | Gpi | Fpi | TwoPhi | Phi => Signature::NPhi,
            Gamma | GammaC => Signature::NPhiU0,
            UTilde | UTildeC => Signature::NPhiToU0,
        }
    }

    pub fn label(self) -> &'static str {
        use ThresholdKind::*;
        match self {
            FExistence => "f",
            CeExistence => "f_ce",
            Gamma => "gamma",
            GammaC => "gamma_c",
            UTilde => "u_tilde",
            UTildeC => "u_tilde_c",
            GpU => "g_pu",
            FpU => "f_pu",
            GpiU => "g_piu",
            FcsU => "f_csu",
            Gp => "g_p",
            Fp => "f_p",
            Gx => "g_x",
            Gcs => "g_cs",
            Fcs => "f_cs",
            Gpi => "g_pi",
            Hpi => "h_pi",
            Fpi => "f_pi",
            TwoPhi => "two_phi",
            Phi => "phi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Root {
    Unique,
    LargestOfThree,
}

/// The cubic in `beta` behind a root-defined threshold, and which root is
/// meant. `None` for kinds that are not cubic roots.
pub fn threshold_cubic(kind: ThresholdKind, n: f64, phi: f64) -> Option<Cubic> {
    cubic_table(kind, n, phi).map(|(c, _)| c)
}

fn cubic_table(kind: ThresholdKind, n: f64, f: f64) -> Option<(Cubic, Root)> {
    use ThresholdKind::*;
    let (f2, f3) = (f * f, f * f * f);
    let entry = match kind {
        Gp => (Cubic::new(4.0 * n.powi(3), n * n * (1.0 - 4.0 * n) * f, n * (2.0 * n - 3.0) * f2, f3), Root::LargestOfThree),
        Fp => (
            Cubic::new(-6.0 * n * n, 2.0 * n * (3.0 * n - 1.0) * f, (3.0 - 4.0 * n) * f2, f3),
            Root::Unique,
        ),
        FcsU => (
            Cubic::new(6.0 * n * n, (-12.0 * n * n + 5.0 * n - 1.0) * f, (8.0 * n - 3.0) * f2, -2.0 * f3),
            Root::Unique,
        ),
        Fcs => {
            let y = statics::y_coeffs(f, n);
            (Cubic::new(y[3], y[2], y[1], y[0]), Root::LargestOfThree)
        }
        Gpi => (
            Cubic::new(
                n.powi(3) * (n * n - 1.0),
                n * (-7.0 * n.powi(3) + 10.0 * n * n - 5.0 * n + 1.0) * f,
                n * (6.0 * n * n - 7.0 * n + 3.0) * f2,
                -(2.0 * n * n - 2.0 * n + 1.0) * f3,
            ),
            Root::Unique,
        ),
        Fpi => (
            Cubic::new(4.0 * n.powi(3), (2.0 - 5.0 * n) * n * f, -2.0 * n * f2, 2.0 * f3),
            Root::LargestOfThree,
        ),
        _ => return None,
    };
    Some(entry)
}

fn cubic_root(kind: ThresholdKind, n: f64, phi: f64) -> Result<f64> {
    let (cubic, root) = cubic_table(kind, n, phi).expect("cubic kind");
    if phi == 0.0 {
        // every coefficient but the leading one vanishes
        return Ok(0.0);
    }
    let roots = solve_cubic_real(&cubic)?;
    match (root, roots.len()) {
        (Root::Unique, 1) => Ok(roots[0]),
        (Root::LargestOfThree, 3) => Ok(roots[2]),
        (_, m) => Err(Error::ThresholdUndefined(format!(
            "{} at N = {n}, phi = {phi}: expected {} real root(s), found {m}",
            kind.label(),
            if root == Root::Unique { 1 } else { 3 }
        ))),
    }
}

/// Critical outside utility for the CNE sign of `z*`.
pub fn u_tilde(n: f64, phi: f64) -> f64 {
    if phi <= 0.0 {
        2.0 * phi / (n + 1.0)
    } else {
        let num = n.powi(4) - 2.0 * n.powi(3) - 2.0 * n * n + 2.0 * n + 2.0;
        let den = n.powi(3) * (2.0 * n.powi(3) + n * n - 3.0 * n - 2.0);
        -2.0 * num * phi / den
    }
}

pub fn u_tilde_c(n: f64, phi: f64) -> f64 {
    if phi <= 0.0 {
        2.0 * phi / (n + 1.0)
    } else {
        -2.0 * (n * (4.0 * n - 19.0) + 4.0) * phi / (27.0 * n * (n + 1.0))
    }
}

pub fn gamma(n: f64, phi: f64, u0: f64) -> Result<f64> {
    let a = 2.0 * phi - n * u0;
    let disc = a * a + 4.0 * phi * (u0 - 2.0 * phi / (n + 1.0));
    if disc < 0.0 {
        return Err(Error::ThresholdUndefined(format!("gamma at N = {n}, phi = {phi}, u0 = {u0}: negative radicand")));
    }
    Ok((a + disc.sqrt()) / (2.0 * (n + 1.0)))
}

pub fn gamma_c(n: f64, phi: f64, u0: f64) -> f64 {
    (2.0 * phi - u0 * (n + 1.0)) / (n + 1.0).powi(2)
}

/// Evaluates one threshold. `phi` is ignored by N-only kinds; `u0` is read
/// by `Gamma` and `GammaC` only.
pub fn eval_threshold(kind: ThresholdKind, n: f64, phi: f64, u0: Option<f64>) -> Result<f64> {
    use ThresholdKind::*;
    if !(n >= 2.0 && n.is_finite()) {
        return Err(Error::InvalidParams(format!("N = {n} must be at least 2")));
    }
    if !phi.is_finite() {
        return Err(Error::InvalidParams("phi must be finite".into()));
    }
    let v = match kind {
        FExistence => f_existence(n),
        CeExistence => ce_existence_coef(n),
        Gamma => gamma(n, phi, u0.ok_or(Error::MissingArgument("u0 for gamma"))?)?,
        GammaC => gamma_c(n, phi, u0.ok_or(Error::MissingArgument("u0 for gamma_c"))?),
        UTilde => u_tilde(n, phi),
        UTildeC => u_tilde_c(n, phi),
        GpU => (n + ((n - 1.0) * (n + 3.0)).sqrt() + 1.0) / (2.0 * n),
        FpU => 0.5 * (((n - 2.0) / n).sqrt() + 1.0),
        GpiU => ((n - 1.0) / n.powi(3)).sqrt() + 1.0 / n,
        Gx => (2.0 * n * n - 2.0 * n + 1.0) / (n * (n * n - n + 1.0)),
        Gcs => (2.0 * n.powi(3) - n + 1.0) / (n * n * (n * n - n + 2.0)),
        Hpi => (2.0 * n - 1.0) / (n * n),
        TwoPhi => 2.0 * phi,
        Phi => phi,
        Fp if n < 3.0 => return Err(Error::ThresholdUndefined(format!("f_p needs N >= 3, got {n}"))),
        Fp if n < 4.0 => 2.0 * phi / 3.0,
        Gp | Fp | FcsU | Fcs | Gpi | Fpi => cubic_root(kind, n, phi)?,
    };
    Ok(v)
}

/// The threshold as a `beta` value: line coefficients are multiplied by `phi`.
pub fn beta_boundary(kind: ThresholdKind, n: f64, phi: f64, u0: Option<f64>) -> Result<f64> {
    let v = eval_threshold(kind, n, phi, u0)?;
    match kind.signature() {
        Signature::N => Ok(v * phi),
        Signature::NPhi | Signature::NPhiU0 => Ok(v),
        Signature::NPhiToU0 => Err(Error::InvalidParams(format!("{} is a u0 value", kind.label()))),
    }
}

pub fn r_pi_z1(n: f64, phi: f64, u0: f64, beta: f64) -> Result<f64> {
    let f = phi;
    let num = [
        f * f * (-n * u0 + 2.0 * f),
        n * f * (2.0 * n * n * u0 - n * u0 - 2.0 * f),
        n * (-5.0 * n.powi(3) * u0 + 8.0 * n * n * u0 - 3.0 * n * u0 - 5.0 * n * f + 2.0 * f),
        4.0 * n.powi(3),
    ];
    let num = num.iter().rev().fold(0.0, |acc, c| acc * beta + c);
    let den = beta * beta * (n * n - 2.0 * n.powi(3)) * f
        + beta.powi(3) * (5.0 * n.powi(4) - 8.0 * n.powi(3) + 3.0 * n * n)
        + beta * n * f * f;
    if den.abs() < 1e-300 {
        return Err(Error::ThresholdUndefined("r_pi_z1 denominator vanishes".into()));
    }
    Ok(num / den)
}

pub fn r_pi_z2(n: f64, phi: f64, u0: f64, beta: f64) -> f64 {
    let num = -n.powi(3) * u0 + beta * n * n + 2.0 * n * n * u0 - n * u0 - 2.0 * n * phi + phi;
    num / (beta * (n.powi(3) - 2.0 * n * n + n))
}

/// Upper bound on `z*` for the profit-decrease region.
pub fn g_pi_z(n: f64, phi: f64, u0: f64, beta: f64) -> Result<f64> {
    if phi < 0.0 {
        let fpi = eval_threshold(ThresholdKind::Fpi, n, phi, None)?;
        if beta > 0.0 && beta < fpi {
            return r_pi_z1(n, phi, u0, beta);
        }
    } else if phi > 0.0 {
        let lo = f_existence(n) * phi;
        let hi = eval_threshold(ThresholdKind::Hpi, n, phi, None)? * phi;
        if lo < beta && beta <= hi {
            return Ok(r_pi_z2(n, phi, u0, beta));
        }
    }
    Ok(-u0 / beta)
}

/// Lower bound on `z*` for the profit-increase region.
pub fn f_pi_z(n: f64, phi: f64, u0: f64, beta: f64) -> f64 {
    r_pi_z2(n, phi, u0, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Positive,
    Negative,
    Increasing,
    Decreasing,
    Indeterminate,
    Boundary,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Positive => "positive",
            Verdict::Negative => "negative",
            Verdict::Increasing => "increasing",
            Verdict::Decreasing => "decreasing",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Boundary => "boundary",
        }
    }

    /// `Some(true)` for the positive-sign verdicts, `Some(false)` for the
    /// negative ones.
    pub fn sign(self) -> Option<bool> {
        match self {
            Verdict::Positive | Verdict::Increasing => Some(true),
            Verdict::Negative | Verdict::Decreasing => Some(false),
            _ => None,
        }
    }

    pub fn is_definite(self) -> bool {
        self.sign().is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabel {
    pub verdict: Verdict,
    /// `beta` values (or `u0` values for the `UTilde` kinds) consulted.
    pub thresholds_used: Vec<(ThresholdKind, f64)>,
    /// Bounds on `z*` consulted, by name.
    pub z_bounds: Vec<(&'static str, f64)>,
    pub margin: f64,
    pub note: Option<String>,
}

impl RegionLabel {
    fn finish(mut self) -> Self {
        if self.margin < BOUNDARY_TOL {
            self.verdict = Verdict::Boundary;
        }
        self
    }
}

// Collects thresholds and the slack of every condition of the hypothesis
// being tested.
struct Ctx {
    n: f64,
    beta: f64,
    phi: f64,
    used: Vec<(ThresholdKind, f64)>,
    z_bounds: Vec<(&'static str, f64)>,
}

impl Ctx {
    fn new(params: &MarketParams, side: Side) -> Self {
        let k = side.idx();
        Ctx { n: params.n(), beta: params.beta[k], phi: params.phi[k][k], used: Vec::new(), z_bounds: Vec::new() }
    }

    fn at(&mut self, kind: ThresholdKind, u0: Option<f64>) -> Result<f64> {
        let v = beta_boundary(kind, self.n, self.phi, u0)?;
        if !self.used.iter().any(|(k, _)| *k == kind) {
            self.used.push((kind, v));
        }
        Ok(v)
    }

    // slack of `phi <= 0 or beta > c phi` with `c` a line coefficient
    fn above_line(&mut self, kind: ThresholdKind) -> Result<f64> {
        let t = self.at(kind, None)?;
        Ok(self.beta - t.max(0.0))
    }

    fn label(self, verdict: Verdict, margin: f64, note: Option<String>) -> RegionLabel {
        RegionLabel { verdict, thresholds_used: self.used, z_bounds: self.z_bounds, margin, note }.finish()
    }

    fn nearest(&self) -> f64 {
        self.used.iter().map(|(_, t)| (self.beta - t).abs()).fold(f64::INFINITY, f64::min)
    }
}

fn existence_slack(ctx: &mut Ctx, regime: Regime) -> Result<f64> {
    let kind = match regime {
        Regime::Cne => ThresholdKind::FExistence,
        Regime::Ce => ThresholdKind::CeExistence,
    };
    ctx.above_line(kind)
}

/// Existence region of the regime: `Positive` inside, `Indeterminate`
/// outside (the condition is sufficient only).
pub fn classify_existence(regime: Regime, params: &MarketParams, side: Side) -> Result<RegionLabel> {
    let mut ctx = Ctx::new(params, side);
    let s = existence_slack(&mut ctx, regime)?;
    if s > 0.0 {
        Ok(ctx.label(Verdict::Positive, s, None))
    } else {
        Ok(ctx.label(Verdict::Indeterminate, -s, Some("outside the existence region".into())))
    }
}

/// Sign of `z` in the given regime from `beta` against `gamma` (CNE) or
/// `gamma^C` (CE). Cross externalities are not consulted.
pub fn classify_sign_z(regime: Regime, params: &MarketParams, side: Side) -> Result<RegionLabel> {
    let mut ctx = Ctx::new(params, side);
    let u0 = params.u0[side.idx()];
    let ex = existence_slack(&mut ctx, regime)?;
    if ex <= 0.0 {
        return Ok(ctx.label(Verdict::Indeterminate, -ex, Some("outside the existence region".into())));
    }
    let kind = match regime {
        Regime::Cne => ThresholdKind::Gamma,
        Regime::Ce => ThresholdKind::GammaC,
    };
    let g = match ctx.at(kind, Some(u0)) {
        Ok(g) => g,
        // no real crossing: z stays negative over the whole region
        Err(Error::ThresholdUndefined(_)) => {
            return Ok(ctx.label(Verdict::Negative, ex, Some(format!("{} undefined", kind.label()))));
        }
        Err(e) => return Err(e),
    };
    if ctx.beta > g {
        let m = (ctx.beta - g).min(ex);
        Ok(ctx.label(Verdict::Negative, m, None))
    } else {
        let m = (g - ctx.beta).min(ex);
        Ok(ctx.label(Verdict::Positive, m, None))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ZMode {
    Given(f64),
    Missing,
    Ignore,
}

/// Direction of `quantity` in `wrt` from the sufficient sign conditions.
///
/// `z_star` is needed for profit in `N` and for the decrease region of
/// consumer surplus in `N`. Without it those return
/// [`Error::MissingArgument`].
pub fn classify_direction(
    quantity: Quantity,
    wrt: Wrt,
    params: &MarketParams,
    side: Side,
    z_star: Option<f64>,
) -> Result<RegionLabel> {
    let mode = z_star.map_or(ZMode::Missing, ZMode::Given);
    direction(quantity, wrt, params, side, mode)
}

/// [`classify_direction`] with every condition on `z*` dropped, as in the
/// consumer surplus figure. Profit in `N` is all `z*` conditions and comes
/// back `Indeterminate`.
pub fn classify_direction_ignoring_z(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side) -> Result<RegionLabel> {
    direction(quantity, wrt, params, side, ZMode::Ignore)
}

fn direction(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side, z: ZMode) -> Result<RegionLabel> {
    use ThresholdKind::*;
    use Verdict::{Decreasing, Increasing, Indeterminate};
    let mut ctx = Ctx::new(params, side);
    let u0 = params.u0[side.idx()];
    let ex = existence_slack(&mut ctx, Regime::Cne)?;
    if ex <= 0.0 {
        return Ok(ctx.label(Indeterminate, -ex, Some("outside the existence region".into())));
    }
    let (n, beta, phi) = (ctx.n, ctx.beta, ctx.phi);
    let f_lo = f_existence(n) * phi;

    // (verdict, slack) of the first hypothesis that holds
    let hit: Option<(Verdict, f64)> = match (quantity, wrt) {
        (Quantity::Price, Wrt::OutsideUtility) => {
            let s = ctx.above_line(GpU)?;
            if s > 0.0 {
                Some((Decreasing, s))
            } else if phi > 0.0 && n >= 3.0 {
                let hi = ctx.at(FpU, None)?;
                (beta < hi).then_some((Increasing, (hi - beta).min(beta - f_lo)))
            } else {
                None
            }
        }
        (Quantity::Profit, Wrt::OutsideUtility) => {
            let s = ctx.above_line(GpiU)?;
            (s > 0.0).then_some((Decreasing, s))
        }
        (Quantity::ConsumerSurplus, Wrt::OutsideUtility) => {
            let t = ctx.at(TwoPhi, None)?;
            let s = beta - t.max(0.0);
            if s > 0.0 {
                Some((Increasing, s))
            } else if phi > 0.0 {
                let hi = ctx.at(FcsU, None)?;
                (beta < hi).then_some((Decreasing, (hi - beta).min(beta - f_lo)))
            } else {
                None
            }
        }
        (Quantity::Price, Wrt::NumPlatforms) => {
            let t = if phi <= 0.0 { ctx.at(Gp, None)? } else { ctx.at(Phi, None)? };
            if beta > t {
                Some((Decreasing, beta - t))
            } else if phi > 0.0 && n >= 3.0 {
                let hi = ctx.at(Fp, None)?;
                (beta < hi).then_some((Increasing, (hi - beta).min(beta - f_lo)))
            } else {
                None
            }
        }
        (Quantity::Participation, Wrt::NumPlatforms) => {
            let s = ctx.above_line(Gx)?;
            (s > 0.0).then_some((Increasing, s))
        }
        (Quantity::ConsumerSurplus, Wrt::NumPlatforms) => {
            let s = ctx.above_line(Gcs)?;
            if s > 0.0 {
                Some((Increasing, s))
            } else if phi > 0.0 && n >= 7.0 {
                let fcs = ctx.at(Fcs, None)?;
                let hi = match ctx.at(Gamma, Some(u0)) {
                    Ok(g) => fcs.min(g),
                    Err(Error::ThresholdUndefined(_)) => f64::NEG_INFINITY,
                    Err(e) => return Err(e),
                };
                if beta < hi {
                    let s = (hi - beta).min(beta - f_lo);
                    let cap = std::f64::consts::LN_2 / 5.0;
                    ctx.z_bounds.push(("ln2/5", cap));
                    match z {
                        ZMode::Given(zs) => (zs < cap).then_some((Decreasing, s.min(cap - zs))),
                        ZMode::Ignore => Some((Decreasing, s)),
                        ZMode::Missing => return Err(Error::MissingArgument("z_star for consumer surplus in N")),
                    }
                } else {
                    None
                }
            } else {
                None
            }
        }
        (Quantity::Profit, Wrt::NumPlatforms) => {
            let zs = match z {
                ZMode::Given(zs) => zs,
                ZMode::Missing => return Err(Error::MissingArgument("z_star for profit in N")),
                ZMode::Ignore => {
                    return Ok(ctx.label(Indeterminate, ex, Some("conditions on z* dropped".into())));
                }
            };
            let g = g_pi_z(n, phi, u0, beta)?;
            let f = f_pi_z(n, phi, u0, beta);
            ctx.z_bounds.push(("g_pi_z", g));
            ctx.z_bounds.push(("f_pi_z", f));
            if phi < 0.0 {
                ctx.at(Fpi, None)?;
            } else if phi > 0.0 {
                ctx.at(Hpi, None)?;
            }
            if zs < g {
                Some((Decreasing, g - zs))
            } else if zs > f {
                if phi <= 0.0 {
                    Some((Increasing, zs - f))
                } else {
                    let gpi = ctx.at(Gpi, None)?;
                    (beta > gpi).then_some((Increasing, (zs - f).min(beta - gpi)))
                }
            } else {
                None
            }
        }
        _ => {
            return Ok(ctx.label(Indeterminate, f64::INFINITY, Some(format!("no region for {} in {}", quantity.label(), wrt.label()))));
        }
    };

    match hit {
        Some((v, s)) => Ok(ctx.label(v, s.min(ex), None)),
        None => {
            let m = ctx.nearest().min(ex);
            Ok(ctx.label(Indeterminate, m, None))
        }
    }
}

/// What a region grid classifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierSpec {
    Existence(Regime),
    SignZ(Regime),
    Direction { quantity: Quantity, wrt: Wrt, ignore_z: bool },
}

impl ClassifierSpec {
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::Existence(r) => format!("existence_{}", r.label()),
            ClassifierSpec::SignZ(r) => format!("sign_z_{}", r.label()),
            ClassifierSpec::Direction { quantity, wrt, .. } => format!("d{}_d{}", quantity.label(), wrt.label()),
        }
    }

    fn needs_z(&self) -> bool {
        matches!(
            self,
            ClassifierSpec::Direction { quantity: Quantity::Profit | Quantity::ConsumerSurplus, wrt: Wrt::NumPlatforms, ignore_z: false }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub phi_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Cells along `phi`.
    pub width: usize,
    /// Cells along `beta`.
    pub height: usize,
    pub n: usize,
    pub u0: f64,
}

impl GridSpec {
    pub fn phi_at(&self, i: usize) -> f64 {
        let (a, b) = self.phi_range;
        a + (i as f64 + 0.5) * (b - a) / self.width as f64
    }

    pub fn beta_at(&self, j: usize) -> f64 {
        let (a, b) = self.beta_range;
        a + (j as f64 + 0.5) * (b - a) / self.height as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCell {
    pub phi: f64,
    pub beta: f64,
    pub label: RegionLabel,
    /// Sign of the solved quantity (`true` for positive/increasing), when
    /// the companion grid was requested and the solve succeeded.
    pub solved: Option<bool>,
}

/// Row-major over `beta` (row `j`), then `phi` (column `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub spec: GridSpec,
    pub classifier: ClassifierSpec,
    pub cells: Vec<RegionCell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub scored: usize,
    pub agreeing: usize,
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        if self.scored == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.scored as f64
        }
    }
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[j * self.spec.width + i]
    }

    /// Agreement between the classifier and the solved sign over definite
    /// cells whose margin exceeds `min_margin`.
    pub fn agreement(&self, min_margin: f64) -> Agreement {
        let mut a = Agreement { scored: 0, agreeing: 0 };
        for c in &self.cells {
            let Some(claim) = c.label.verdict.sign() else { continue };
            if c.label.margin <= min_margin {
                continue;
            }
            a.scored += 1;
            if c.solved == Some(claim) {
                a.agreeing += 1;
            }
        }
        a
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.cells.iter().filter(|c| c.label.verdict == v).count()
    }
}

fn error_label(e: Error) -> RegionLabel {
    RegionLabel {
        verdict: Verdict::Indeterminate,
        thresholds_used: Vec::new(),
        z_bounds: Vec::new(),
        margin: f64::INFINITY,
        note: Some(e.to_string()),
    }
}

fn classify_cell(classifier: ClassifierSpec, params: &MarketParams, z_star: Option<f64>) -> Result<RegionLabel> {
    let side = Side::Buyer;
    match classifier {
        ClassifierSpec::Existence(r) => classify_existence(r, params, side),
        ClassifierSpec::SignZ(r) => classify_sign_z(r, params, side),
        ClassifierSpec::Direction { quantity, wrt, ignore_z: true } => classify_direction_ignoring_z(quantity, wrt, params, side),
        ClassifierSpec::Direction { quantity, wrt, ignore_z: false } => classify_direction(quantity, wrt, params, side, z_star),
    }
}

fn solved_sign(classifier: ClassifierSpec, params: &MarketParams) -> Option<bool> {
    let side = Side::Buyer;
    match classifier {
        ClassifierSpec::Existence(r) => {
            let eq = solve_regime(r, params, 1e-10).ok()?;
            let k = side.idx();
            let ok = match r {
                Regime::Cne => {
                    let (b, f, n) = (params.beta[k], params.phi[k][k], params.n());
                    statics::dm_dz(eq.z[k], b, f, n) < 0.0 && crate::verify::soc_cne_diag(eq.z[k], params, side).ok()? < 0.0
                }
                Regime::Ce => crate::verify::soc_ce_hessian(eq.z, params).negative_definite,
            };
            Some(ok)
        }
        ClassifierSpec::SignZ(r) => {
            let eq = solve_regime(r, params, 1e-10).ok()?;
            Some(eq.z[side.idx()] > 0.0)
        }
        ClassifierSpec::Direction { quantity, wrt, .. } => {
            let d = statics::fd_derivative(quantity, wrt, params, side, wrt.default_step()).ok()?;
            (d != 0.0).then_some(d > 0.0)
        }
    }
}

/// Classifies every cell centre of the grid, with symmetric sides and no
/// cross externalities. With `with_solved` each cell is also solved and
/// the sign of the quantity recorded for [`RegionGrid::agreement`].
pub fn region_grid(classifier: ClassifierSpec, spec: &GridSpec, with_solved: bool) -> Result<RegionGrid> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidParams("grid resolution must be positive".into()));
    }
    let finite = [spec.phi_range.0, spec.phi_range.1, spec.beta_range.0, spec.beta_range.1, spec.u0];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("grid ranges must be finite".into()));
    }
    MarketParams::symmetric(spec.n, 1.0, 0.0, spec.u0)?;
    let cells = (0..spec.width * spec.height)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % spec.width, idx / spec.width);
            let (phi, beta) = (spec.phi_at(i), spec.beta_at(j));
            let params = match MarketParams::symmetric(spec.n, beta, phi, spec.u0) {
                Ok(p) => p,
                Err(e) => return RegionCell { phi, beta, label: error_label(e), solved: None },
            };
            let z_star = if classifier.needs_z() {
                solve_regime(Regime::Cne, &params, 1e-10).ok().map(|eq| eq.z[0])
            } else {
                None
            };
            let label = match classify_cell(classifier, &params, z_star) {
                Ok(l) => l,
                Err(e) => error_label(e),
            };
            let solved = if with_solved { solved_sign(classifier, &params) } else { None };
            RegionCell { phi, beta, label, solved }
        })
        .collect();
    Ok(RegionGrid { spec: spec.clone(), classifier, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn closed_forms() {
        let ev = |k, n, phi, u0| eval_threshold(k, n, phi, u0).unwrap();
        assert!(close(ev(ThresholdKind::FExistence, 4.0, 0.0, None), 0.375, 1e-15));
        assert!(close(ev(ThresholdKind::Gamma, 4.0, 0.0, Some(-1.0)), 0.8, 1e-15));
        assert!(close(ev(ThresholdKind::GammaC, 4.0, 0.0, Some(-1.0)), 0.2, 1e-15));
        assert!(close(ev(ThresholdKind::GpU, 2.0, 0.0, None), (3.0 + 5f64.sqrt()) / 4.0, 1e-15));
        assert!(close(ev(ThresholdKind::Hpi, 2.0, 0.0, None), 0.75, 1e-15));
        assert!(close(ev(ThresholdKind::Gcs, 2.0, 0.0, None), 0.9375, 1e-15));
        assert!(close(ev(ThresholdKind::Fp, 3.0, 1.5, None), 1.0, 1e-15));
        assert!(eval_threshold(ThresholdKind::Gamma, 4.0, 0.0, None).is_err());
        assert!(eval_threshold(ThresholdKind::Fp, 2.0, 1.0, None).is_err());
    }

    #[test]
    fn cubic_roots_are_roots_and_scale_with_phi() {
        for kind in [ThresholdKind::Gp, ThresholdKind::Fpi] {
            let a = eval_threshold(kind, 4.0, -1.0, None).unwrap();
            let b = eval_threshold(kind, 4.0, -2.5, None).unwrap();
            assert!(close(b, 2.5 * a, 1e-12));
            assert!(threshold_cubic(kind, 4.0, -1.0).unwrap().eval(a).abs() < 1e-12);
        }
        for kind in [ThresholdKind::Fp, ThresholdKind::FcsU, ThresholdKind::Gpi, ThresholdKind::Fcs] {
            let a = eval_threshold(kind, 7.0, 1.0, None).unwrap();
            let b = eval_threshold(kind, 7.0, 0.4, None).unwrap();
            assert!(close(b, 0.4 * a, 1e-12));
        }
        assert_eq!(eval_threshold(ThresholdKind::Gpi, 3.0, 0.0, None).unwrap(), 0.0);
    }

    #[test]
    fn sign_z_examples() {
        let p = MarketParams::symmetric(4, 1.0, 0.0, -1.0).unwrap();
        assert_eq!(classify_sign_z(Regime::Cne, &p, Side::Buyer).unwrap().verdict, Verdict::Negative);
        let p = MarketParams::symmetric(4, 0.5, 0.0, -1.0).unwrap();
        assert_eq!(classify_sign_z(Regime::Cne, &p, Side::Buyer).unwrap().verdict, Verdict::Positive);
        assert_eq!(classify_sign_z(Regime::Ce, &p, Side::Buyer).unwrap().verdict, Verdict::Negative);
        let p = MarketParams::symmetric(4, 0.8, 0.0, -1.0).unwrap();
        assert_eq!(classify_sign_z(Regime::Cne, &p, Side::Buyer).unwrap().verdict, Verdict::Boundary);
    }

    #[test]
    fn direction_examples() {
        let p = MarketParams::symmetric(4, 1.0, -1.0, 0.0).unwrap();
        let l = classify_direction(Quantity::Price, Wrt::NumPlatforms, &p, Side::Buyer, None).unwrap();
        assert_eq!(l.verdict, Verdict::Decreasing);
        let p = MarketParams::symmetric(4, 0.5, 1.0, 0.0).unwrap();
        let l = classify_direction(Quantity::Price, Wrt::NumPlatforms, &p, Side::Buyer, None).unwrap();
        assert_eq!(l.verdict, Verdict::Increasing);
        let p = MarketParams::symmetric(2, 1.0, 0.0, 0.0).unwrap();
        let l = classify_direction(Quantity::Profit, Wrt::NumPlatforms, &p, Side::Buyer, Some(-1.2268)).unwrap();
        assert_eq!(l.verdict, Verdict::Decreasing);
        assert!(classify_direction(Quantity::Profit, Wrt::NumPlatforms, &p, Side::Buyer, None).is_err());
    }

    #[test]
    fn outside_existence_is_indeterminate() {
        let p = MarketParams::symmetric(4, 0.2, 1.0, 0.0).unwrap();
        let l = classify_direction(Quantity::Participation, Wrt::NumPlatforms, &p, Side::Buyer, None).unwrap();
        assert_eq!(l.verdict, Verdict::Indeterminate);
        assert!(close(l.margin, 0.175, 1e-12));
    }
}
