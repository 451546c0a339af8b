//! Region figures: which classifier and panel parameters each figure uses,
//! the grids, and their CSV/SVG renderings.

use platform_eq::equilibrium::Regime;
use platform_eq::regions::{beta_boundary, region_grid, ClassifierSpec, GridSpec, RegionGrid, Signature, ThresholdKind, Verdict};
use platform_eq::statics::{Quantity, Wrt};

use crate::config::{FigureId, FiguresConfig};
use crate::svg::{Curve, Panel, PlotStyle};
use crate::table::{num, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct FigureDef {
    pub id: FigureId,
    pub classifier: ClassifierSpec,
    pub n: usize,
    /// One panel per value.
    pub u0: Vec<f64>,
    pub title: &'static str,
    pub positive: &'static str,
    pub negative: &'static str,
}

/// Caption parameters, overridden by the `[figures.figK]` tables.
pub fn definition(id: FigureId, cfg: &FiguresConfig) -> FigureDef {
    let dir = |quantity, ignore_z| ClassifierSpec::Direction { quantity, wrt: Wrt::NumPlatforms, ignore_z };
    let (classifier, n, u0, title, positive, negative) = match id {
        FigureId::Fig1 => (
            ClassifierSpec::Existence(Regime::Cne),
            4,
            vec![0.0],
            "Unique symmetric CNE",
            "unique symmetric CNE guaranteed",
            "",
        ),
        FigureId::Fig2 => (ClassifierSpec::SignZ(Regime::Cne), 4, vec![-1.0, 0.5], "Sign of z*", "z* > 0", "z* < 0"),
        FigureId::Fig3 => (ClassifierSpec::SignZ(Regime::Cne), 200, vec![-1.0, 1.0], "Sign of z*, many platforms", "z* > 0", "z* < 0"),
        FigureId::Fig4 => (dir(Quantity::Price, false), 4, vec![0.0], "Sign of dp*/dN", "dp*/dN > 0", "dp*/dN < 0"),
        FigureId::Fig5 => (dir(Quantity::Participation, false), 4, vec![0.0], "Participation in N", "d(Nx*)/dN > 0", ""),
        FigureId::Fig6 => (
            dir(Quantity::ConsumerSurplus, true),
            4,
            vec![0.0],
            "Sign of dCS*/dN (bound on z* dropped)",
            "dCS*/dN > 0",
            "dCS*/dN < 0",
        ),
    };
    let over = cfg.panel(id);
    FigureDef {
        id,
        classifier,
        n: over.and_then(|p| p.n).unwrap_or(n),
        u0: over.and_then(|p| p.u0.clone()).unwrap_or(u0),
        title,
        positive,
        negative,
    }
}

impl FigureDef {
    pub fn grid_spec(&self, cfg: &FiguresConfig, u0: f64) -> GridSpec {
        GridSpec {
            phi_range: (cfg.phi_range[0], cfg.phi_range[1]),
            beta_range: (cfg.beta_range[0], cfg.beta_range[1]),
            width: cfg.grid_width,
            height: cfg.grid_height,
            n: self.n,
            u0,
        }
    }

    /// One grid per panel.
    pub fn grids(&self, cfg: &FiguresConfig, with_solved: bool) -> platform_eq::Result<Vec<RegionGrid>> {
        self.u0.iter().map(|&u| region_grid(self.classifier, &self.grid_spec(cfg, u), with_solved)).collect()
    }

    /// File stem of panel `i`: `fig2a`, `fig2b`, ... or just `fig1`.
    pub fn panel_stem(&self, i: usize) -> String {
        if self.u0.len() == 1 {
            self.id.name().to_string()
        } else {
            format!("{}{}", self.id.name(), (b'a' + (i % 26) as u8) as char)
        }
    }
}

pub fn grid_table(grid: &RegionGrid) -> Table {
    let mut t = Table::new(vec!["phi", "beta", "verdict", "margin"]);
    for c in &grid.cells {
        t.push(vec![num(c.phi), num(c.beta), c.label.verdict.label().to_string(), num(c.label.margin)]);
    }
    t
}

/// Threshold curves `beta = t(phi)` consulted anywhere in the grid, sampled
/// at the columns where they were consulted.
pub fn threshold_curves(grid: &RegionGrid) -> Vec<Curve> {
    let spec = &grid.spec;
    let (lo, hi) = spec.beta_range;
    let mut curves = Vec::new();
    for kind in ThresholdKind::ALL {
        if kind.signature() == Signature::NPhiToU0 {
            continue;
        }
        let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut current = Vec::new();
        for i in 0..spec.width {
            let used = (0..spec.height).any(|j| grid.cell(i, j).label.thresholds_used.iter().any(|(k, _)| *k == kind));
            let phi = spec.phi_at(i);
            let b = if used { beta_boundary(kind, spec.n as f64, phi, Some(spec.u0)).ok() } else { None };
            match b {
                Some(b) if b.is_finite() && b >= lo && b <= hi => current.push((phi, b)),
                _ => {
                    if current.len() > 1 {
                        segments.push(std::mem::take(&mut current));
                    }
                    current.clear();
                }
            }
        }
        if current.len() > 1 {
            segments.push(current);
        }
        if !segments.is_empty() {
            curves.push(Curve { label: format!("beta = {}", curve_label(kind)), segments });
        }
    }
    curves
}

fn curve_label(kind: ThresholdKind) -> String {
    match kind {
        ThresholdKind::Phi => return "phi".to_string(),
        ThresholdKind::TwoPhi => return "2 phi".to_string(),
        _ => {}
    }
    match kind.signature() {
        Signature::N => format!("{}(N) phi", kind.label()),
        Signature::NPhiU0 => format!("{}(N, phi, u0)", kind.label()),
        _ => format!("{}(N, phi)", kind.label()),
    }
}

pub fn panels(def: &FigureDef, grids: &[RegionGrid]) -> Vec<Panel> {
    grids
        .iter()
        .map(|g| Panel {
            subtitle: format!("N = {}, u0 = {}", g.spec.n, g.spec.u0),
            grid: g.clone(),
            curves: threshold_curves(g),
            classifier: def.classifier.label(),
        })
        .collect()
}

pub fn svg(def: &FigureDef, cfg: &FiguresConfig, grids: &[RegionGrid]) -> String {
    let style = PlotStyle { width: cfg.svg_width, height: cfg.svg_height };
    let mut legend = Vec::new();
    if !def.positive.is_empty() {
        legend.push((Verdict::Positive, def.positive.to_string()));
    }
    if !def.negative.is_empty() {
        legend.push((Verdict::Negative, def.negative.to_string()));
    }
    legend.push((Verdict::Indeterminate, "no verdict (hypotheses not met)".to_string()));
    legend.push((Verdict::Boundary, "on a threshold".to_string()));
    crate::svg::render(def.title, &panels(def, grids), &legend, style)
}
