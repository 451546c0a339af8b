use clap::Parser;
use platform_eq_cli::config::{FigureId, RegimeSel};
use platform_eq_cli::{run, Artifact, CliError, Command, RunConfig};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Equilibria, comparative statics and region plots for competing
/// two-sided platforms with an outside option.
#[derive(Debug, Parser)]
#[command(name = "platform-eq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults describe the base case.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    regime: Option<RegimeSel>,
    /// Output directory. Tables go to standard output without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only this figure (for `figures`).
    #[arg(long, global = true, value_enum)]
    figure: Option<FigureId>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance on the first-order conditions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; PLATFORM_EQ_JOBS takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Shift both candidate prices by this amount before `verify` searches
    /// for a profitable deviation.
    #[arg(long, global = true, allow_hyphen_values = true)]
    perturb: Option<f64>,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(r) = cli.regime {
        cfg.solver.regime = r;
    }
    if let Some(t) = cli.tol {
        cfg.solver.tol = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.figure {
        cfg.figures.ids = vec![f];
    }
    if let Some(p) = cli.perturb {
        cfg.verify.perturb = p;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn jobs(cli: &Cli) -> Result<Option<usize>, CliError> {
    match std::env::var("PLATFORM_EQ_JOBS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Config(format!("PLATFORM_EQ_JOBS={v:?} is not a count"))),
        Err(_) => Ok(cli.jobs),
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

fn write(dir: Option<&Path>, artifacts: &[Artifact]) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            for a in artifacts {
                let path = dir.join(&a.file_name);
                std::fs::write(&path, &a.bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for a in artifacts {
                out.write_all(&a.bytes).map_err(|e| CliError::Config(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let cfg = load(&cli)?;
    if let Some(n) = jobs(&cli)? {
        if n == 0 {
            return Err(CliError::Config("jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dir = match (&cfg.output.dir, cli.command) {
        (Some(d), _) => Some(d.clone()),
        (None, Command::Figures) => Some(PathBuf::from("out")),
        (None, _) => None,
    };
    if let Some(d) = &dir {
        prepare_dir(d)?;
    }
    let outcome = run(cli.command, &cfg)?;
    write(dir.as_deref(), &outcome.artifacts)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("platform-eq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
