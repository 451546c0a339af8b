//! Run configuration, read from TOML. Unknown keys are rejected everywhere so
//! a typo in a `phi` entry fails loudly instead of silently using zero.

use platform_eq::equilibrium::Regime;
use platform_eq::{MarketParams, Side};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub market: MarketConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
    pub monte_carlo: MonteCarloConfig,
    pub figures: FiguresConfig,
    /// Where results go does not change them, so it stays out of the echo
    /// and the hash.
    #[serde(skip_serializing)]
    pub output: OutputConfig,
}

/// A per-side value: a single number applies to both sides, a pair is
/// `[buyer, seller]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PerSide {
    Same(f64),
    Each([f64; 2]),
}

impl PerSide {
    pub fn pair(self) -> [f64; 2] {
        match self {
            PerSide::Same(v) => [v, v],
            PerSide::Each(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    pub n: usize,
    pub beta: PerSide,
    pub mu: PerSide,
    pub u0: PerSide,
    pub phi: PhiConfig,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig { n: 2, beta: PerSide::Same(1.0), mu: PerSide::Same(0.0), u0: PerSide::Same(0.0), phi: PhiConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiConfig {
    pub bb: f64,
    pub bs: f64,
    pub sb: f64,
    pub ss: f64,
}

impl MarketConfig {
    pub fn params(&self) -> Result<MarketParams, CliError> {
        let phi = [[self.phi.bb, self.phi.bs], [self.phi.sb, self.phi.ss]];
        MarketParams::new(self.n, self.beta.pair(), self.mu.pair(), phi, self.u0.pair())
            .map_err(|e| CliError::Config(format!("market: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegimeSel {
    Cne,
    Ce,
    Both,
}

impl RegimeSel {
    pub fn regimes(self) -> Vec<Regime> {
        match self {
            RegimeSel::Cne => vec![Regime::Cne],
            RegimeSel::Ce => vec![Regime::Ce],
            RegimeSel::Both => vec![Regime::Cne, Regime::Ce],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub regime: RegimeSel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, regime: RegimeSel::Cne }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axes: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    N,
    Beta,
    Mu,
    U0,
    PhiOwn,
    PhiBb,
    PhiBs,
    PhiSb,
    PhiSs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideSel {
    Buyer,
    Seller,
    #[default]
    Both,
}

impl SideSel {
    fn sides(self) -> &'static [Side] {
        match self {
            SideSel::Buyer => &[Side::Buyer],
            SideSel::Seller => &[Side::Seller],
            SideSel::Both => &Side::BOTH,
        }
    }
}

/// One sweep axis: either an explicit `values` list or `start`/`stop`/`step`
/// (both ends included).
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: SweepParam,
    #[serde(default)]
    pub side: SideSel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

const MAX_AXIS_POINTS: usize = 1_000_000;

impl AxisConfig {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let bad = |m: &str| CliError::Config(format!("sweep axis {:?}: {m}", self.param));
        let pts = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(h)) => {
                if !(h > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                    return Err(bad("need finite start <= stop and step > 0"));
                }
                let count = ((b - a) / h + 1e-9).floor() as usize + 1;
                if count > MAX_AXIS_POINTS {
                    return Err(bad("too many points"));
                }
                (0..count).map(|i| a + i as f64 * h).collect()
            }
            _ => return Err(bad("give either values or start, stop and step")),
        };
        if pts.is_empty() {
            return Err(bad("no points"));
        }
        if self.param == SweepParam::N && pts.iter().any(|&v| v.fract() != 0.0 || v < 1.0) {
            return Err(bad("platform counts must be integers >= 1"));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        Ok(pts)
    }

    /// Market parameters with this axis set to `v`.
    pub fn apply(&self, base: &MarketParams, v: f64) -> platform_eq::Result<MarketParams> {
        let mut p = base.clone();
        let sides = self.side.sides();
        match self.param {
            SweepParam::N => return p.with_n(v as usize),
            SweepParam::Beta => sides.iter().for_each(|s| p.beta[s.idx()] = v),
            SweepParam::Mu => sides.iter().for_each(|s| p.mu[s.idx()] = v),
            SweepParam::U0 => sides.iter().for_each(|s| p.u0[s.idx()] = v),
            SweepParam::PhiOwn => sides.iter().for_each(|s| p.phi[s.idx()][s.idx()] = v),
            SweepParam::PhiBb => p.phi[0][0] = v,
            SweepParam::PhiBs => p.phi[0][1] = v,
            SweepParam::PhiSb => p.phi[1][0] = v,
            SweepParam::PhiSs => p.phi[1][1] = v,
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Relative half-width of the deviation box.
    pub radius: f64,
    pub grid: usize,
    /// Added to both equilibrium prices before the search.
    pub perturb: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { radius: 0.5, grid: 41, perturb: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    /// Simulated users per side for the share check in `solve`; 0 disables it.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }
}

/// Panel overrides for one figure.
#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// One panel per value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiguresConfig {
    pub ids: Vec<FigureId>,
    /// Grid cells along `phi` and `beta`.
    pub grid_width: usize,
    pub grid_height: usize,
    /// Pixel size of one SVG panel.
    pub svg_width: u32,
    pub svg_height: u32,
    pub phi_range: [f64; 2],
    pub beta_range: [f64; 2],
    /// Also solve every cell and report classifier/solver agreement.
    pub check_solved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig1: Option<PanelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig2: Option<PanelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig3: Option<PanelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig4: Option<PanelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig5: Option<PanelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig6: Option<PanelConfig>,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        FiguresConfig {
            ids: FigureId::ALL.to_vec(),
            grid_width: 200,
            grid_height: 200,
            svg_width: 480,
            svg_height: 400,
            phi_range: [-2.0, 2.0],
            beta_range: [0.0, 2.0],
            check_solved: false,
            fig1: None,
            fig2: None,
            fig3: None,
            fig4: None,
            fig5: None,
            fig6: None,
        }
    }
}

impl FiguresConfig {
    pub fn panel(&self, id: FigureId) -> Option<&PanelConfig> {
        match id {
            FigureId::Fig1 => self.fig1.as_ref(),
            FigureId::Fig2 => self.fig2.as_ref(),
            FigureId::Fig3 => self.fig3.as_ref(),
            FigureId::Fig4 => self.fig4.as_ref(),
            FigureId::Fig5 => self.fig5.as_ref(),
            FigureId::Fig6 => self.fig6.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; tables go to standard output when unset (figures
    /// then use `out`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), CliError> {
        self.market.params()?;
        let cfg_err = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return cfg_err("solver.tol must be in (0, 1)");
        }
        for a in &self.sweep.axes {
            a.points()?;
        }
        if self.sweep.axes.len() > 2 {
            return cfg_err("sweep takes one or two axes");
        }
        let v = &self.verify;
        if !(v.radius > 0.0) || v.grid < 3 || !v.perturb.is_finite() {
            return cfg_err("verify needs radius > 0, grid >= 3 and a finite perturb");
        }
        let f = &self.figures;
        if f.grid_width == 0 || f.grid_height == 0 || f.svg_width < 64 || f.svg_height < 64 {
            return cfg_err("figures: grid sizes must be positive and SVG panels at least 64 px");
        }
        let ok_range = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok_range(f.phi_range) || !ok_range(f.beta_range) || f.beta_range[0] < 0.0 {
            return cfg_err("figures: ranges need lo < hi and beta >= 0");
        }
        for id in FigureId::ALL {
            if let Some(p) = f.panel(id) {
                if p.n.is_some_and(|n| n < 2) {
                    return cfg_err("figures: panel n must be at least 2");
                }
                if p.u0.as_ref().is_some_and(|u| u.is_empty() || u.iter().any(|x| !x.is_finite())) {
                    return cfg_err("figures: panel u0 must be a non-empty list of numbers");
                }
            }
        }
        Ok(())
    }

    /// Canonical TOML of the effective configuration, used for the header
    /// echo and the config hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
