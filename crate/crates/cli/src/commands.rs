//! The six commands. Each returns named artifacts; the caller decides where
//! they go.

use platform_eq::equilibrium::{compare_regimes, solve_cne, solve_regime, Regime};
use platform_eq::regions::{classify_direction, classify_existence, classify_sign_z, RegionLabel};
use platform_eq::statics::{fd_derivative, Quantity, Wrt};
use platform_eq::verify::{verify_nash, verify_soc};
use platform_eq::Side;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{solver, CliError};
use crate::figures;
use crate::rows::{self, RowOptions, DIRECTIONS};
use crate::table::{num, opt, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Equilibrium outputs at one parameter point.
    Solve,
    /// Competitive against collusive equilibrium at one point.
    Compare,
    /// Every region classifier at one point.
    Classify,
    /// Equilibrium rows over one or two parameter axes.
    Sweep,
    /// Deviation search and second-order checks at the solved CNE.
    Verify,
    /// Region grids as CSV and SVG.
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Compare => "compare",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
            Command::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

/// Artifacts are written even when `failure` is set, so a failed
/// verification still leaves its report behind.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Outcome { artifacts, failure: None }
    }
}

fn csv(cmd: Command, cfg: &RunConfig, t: &Table, extra: &[String]) -> Artifact {
    Artifact { file_name: format!("{}.csv", cmd.name()), bytes: t.render(cmd.name(), cfg, extra) }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cmd {
        Command::Solve => solve(cfg),
        Command::Compare => compare(cfg),
        Command::Classify => classify(cfg),
        Command::Sweep => sweep(cfg),
        Command::Verify => verify(cfg),
        Command::Figures => figures(cfg),
    }
}

fn row_options(cfg: &RunConfig) -> RowOptions {
    let mc = cfg.monte_carlo.samples;
    RowOptions { tol: cfg.solver.tol, monte_carlo: (mc > 0).then_some((mc, cfg.seed)) }
}

fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.market.params()?;
    let mut t = rows::table();
    for regime in cfg.solver.regime.regimes() {
        for r in rows::equilibrium_rows(0, &params, regime, row_options(cfg)).map_err(solver)? {
            t.push(r);
        }
    }
    Ok(Outcome::ok(vec![csv(Command::Solve, cfg, &t, &[])]))
}

fn compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.market.params()?;
    let c = compare_regimes(&params, cfg.solver.tol).map_err(solver)?;
    let mut t = Table::new(vec![
        "side",
        "z_cne",
        "z_ce",
        "dz",
        "participation_cne",
        "participation_ce",
        "d_participation",
        "price_cne",
        "price_ce",
        "d_price",
        "externality_term",
        "heterogeneity_term",
        "identity_residual",
        "profit_cne",
        "profit_ce",
    ]);
    for side in Side::BOTH {
        let k = side.idx();
        let [ext, het] = c.decomposition[k];
        t.push(vec![
            side.label().to_string(),
            num(c.cne.z[k]),
            num(c.ce.z[k]),
            num(c.dz[k]),
            num(c.cne.participation[k]),
            num(c.ce.participation[k]),
            num(c.d_participation[k]),
            num(c.cne.prices[k]),
            num(c.ce.prices[k]),
            num(c.d_price[k]),
            num(ext),
            num(het),
            num(-c.d_price[k] - ext - het),
            num(c.cne.total_profit),
            num(c.ce.total_profit),
        ]);
    }
    Ok(Outcome::ok(vec![csv(Command::Compare, cfg, &t, &[])]))
}

fn describe(l: &RegionLabel) -> [String; 5] {
    let th = l.thresholds_used.iter().map(|(k, v)| format!("{}={}", k.label(), num(*v))).collect::<Vec<_>>().join(";");
    let zb = l.z_bounds.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect::<Vec<_>>().join(";");
    [l.verdict.label().to_string(), num(l.margin), th, zb, l.note.clone().unwrap_or_default()]
}

fn sign_word(positive: bool) -> String {
    if positive { "positive" } else { "negative" }.to_string()
}

fn classify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.market.params()?;
    let tol = cfg.solver.tol;
    let mut t = Table::new(vec!["classifier", "side", "verdict", "margin", "thresholds", "z_bounds", "note", "solved_sign"]);
    let cne = solve_cne(&params, tol).ok();
    let ce = solve_regime(Regime::Ce, &params, tol).ok();
    let mut push = |name: String, side: Side, label: platform_eq::Result<RegionLabel>, solved: Option<bool>| {
        let mut row = vec![name, side.label().to_string()];
        match label {
            Ok(l) => row.extend(describe(&l)),
            Err(e) => row.extend([String::new(), String::new(), String::new(), String::new(), e.to_string()]),
        }
        row.push(solved.map(sign_word).unwrap_or_default());
        t.push(row);
    };
    for side in Side::BOTH {
        let k = side.idx();
        for (regime, eq) in [(Regime::Cne, &cne), (Regime::Ce, &ce)] {
            push(format!("existence_{}", regime.label()), side, classify_existence(regime, &params, side), None);
            push(format!("sign_z_{}", regime.label()), side, classify_sign_z(regime, &params, side), eq.as_ref().map(|e| e.z[k] > 0.0));
        }
        let z = cne.as_ref().map(|e| e.z[k]);
        for (q, w) in DIRECTIONS.iter().copied().chain([(Quantity::Z, Wrt::OutsideUtility)]) {
            let fd = fd_derivative(q, w, &params, side, w.default_step()).ok().filter(|d| d.abs() > 1e-12);
            push(format!("d{}_d{}", q.label(), w.label()), side, classify_direction(q, w, &params, side, z), fd.map(|d| d > 0.0));
        }
    }
    Ok(Outcome::ok(vec![csv(Command::Classify, cfg, &t, &[])]))
}

fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let axes = &cfg.sweep.axes;
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Config("sweep needs one or two [[sweep.axes]] entries".into()));
    }
    let base = cfg.market.params()?;
    let values: Vec<Vec<f64>> = axes.iter().map(|a| a.points()).collect::<Result<_, _>>()?;
    // first axis outermost
    let points: Vec<Vec<f64>> = match values.as_slice() {
        [a] => a.iter().map(|&x| vec![x]).collect(),
        [a, b] => a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect(),
        _ => unreachable!(),
    };
    let regimes = cfg.solver.regime.regimes();
    let opts = row_options(cfg);
    let blocks: Vec<Vec<Vec<String>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let mut params = Ok(base.clone());
            for (a, &v) in axes.iter().zip(pt) {
                params = params.and_then(|p| a.apply(&p, v));
            }
            let mut out = Vec::new();
            for &regime in &regimes {
                match &params {
                    Ok(p) => match rows::equilibrium_rows(i, p, regime, opts) {
                        Ok(r) => out.extend(r),
                        Err(e) => out.push(rows::error_row(i, p, regime, &e.to_string())),
                    },
                    Err(e) => out.push(rows::error_row(i, &base, regime, &format!("invalid point: {e}"))),
                }
            }
            out
        })
        .collect();
    let mut t = rows::table();
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    let extra: Vec<String> = axes
        .iter()
        .zip(&values)
        .map(|(a, v)| format!("axis: {:?} ({:?} side) with {} points", a.param, a.side, v.len()).to_lowercase())
        .collect();
    Ok(Outcome::ok(vec![csv(Command::Sweep, cfg, &t, &extra)]))
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.market.params()?;
    let tol = cfg.solver.tol;
    let v = &cfg.verify;
    let regimes = cfg.solver.regime.regimes();
    let mut t = Table::new(vec!["check", "value", "tolerance", "pass"]);
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, tolerance: Option<f64>, pass: Option<bool>| {
        if pass == Some(false) {
            failures.push(name.to_string());
        }
        t.push(vec![name.to_string(), num(value), opt(tolerance), pass.map(|p| p.to_string()).unwrap_or_default()]);
    };
    let soc = verify_soc(&params, tol).map_err(solver)?;
    if regimes.contains(&Regime::Cne) {
        let mut eq = solve_cne(&params, tol).map_err(solver)?;
        check("foc_residual", eq.foc_residual, Some(tol), Some(eq.foc_residual <= tol));
        eq.prices = eq.prices.map(|p| p + v.perturb);
        let r = verify_nash(&params, &eq, v.radius, v.grid).map_err(solver)?;
        check("candidate_price_buyer", eq.prices[0], None, None);
        check("candidate_price_seller", eq.prices[1], None, None);
        check("best_gain", r.best_gain, Some(r.tolerance()), Some(r.certified()));
        check("best_deviation_price_buyer", r.best_deviation_prices[0], None, None);
        check("best_deviation_price_seller", r.best_deviation_prices[1], None, None);
        check("evaluations", r.evaluations as f64, None, None);
        if let Some(d) = soc.cne_diag {
            check("soc_cne_buyer", d[0], Some(0.0), Some(d[0] < 0.0));
            check("soc_cne_seller", d[1], Some(0.0), Some(d[1] < 0.0));
        }
        let h = &soc.numeric_hessian;
        check("price_hessian_max_eigenvalue", h.eigenvalues[1], Some(0.0), Some(h.negative_definite));
    }
    match &soc.ce_hessian {
        Some(h) => {
            let gate = regimes.contains(&Regime::Ce).then_some(h.negative_definite);
            check("ce_hessian_min_eigenvalue", h.eigenvalues[0], None, None);
            check("ce_hessian_max_eigenvalue", h.eigenvalues[1], Some(0.0), gate);
        }
        None if regimes.contains(&Regime::Ce) => return Err(CliError::Solver("collusive equilibrium not found".into())),
        None => {}
    }
    let failure = (!failures.is_empty()).then(|| CliError::Verification(failures.join(", ")));
    let status = format!("status: {}", if failure.is_some() { "fail" } else { "pass" });
    Ok(Outcome { artifacts: vec![csv(Command::Verify, cfg, &t, &[status])], failure })
}

fn figures(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fc = &cfg.figures;
    let mut artifacts = Vec::new();
    for &id in &fc.ids {
        let def = figures::definition(id, fc);
        let grids = def.grids(fc, fc.check_solved).map_err(solver)?;
        for (i, g) in grids.iter().enumerate() {
            let mut extra = vec![
                format!("figure: {} panel {} of {}", id.name(), i + 1, grids.len()),
                format!("classifier: {}", def.classifier.label()),
                format!("n: {}", g.spec.n),
                format!("u0: {}", num(g.spec.u0)),
            ];
            if fc.check_solved {
                let a = g.agreement(0.01);
                extra.push(format!("agreement: {} of {} scored cells ({})", a.agreeing, a.scored, num(a.fraction())));
            }
            let stem = def.panel_stem(i);
            artifacts.push(Artifact { file_name: format!("{stem}.csv"), bytes: figures::grid_table(g).render("figures", cfg, &extra) });
        }
        artifacts.push(Artifact { file_name: format!("{}.svg", id.name()), bytes: figures::svg(&def, fc, &grids).into_bytes() });
    }
    Ok(Outcome::ok(artifacts))
}
