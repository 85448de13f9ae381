mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes, mapped to exit codes 2 (config, parse, I/O) and 3 (numerical).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<biphoton::Error> for CliError {
    fn from(e: biphoton::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "biphoton", version, about = "Frequency entanglement of multiplexed cascaded biphotons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Config file with flat `section.key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Print the effective merged config and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Modulation network expression, e.g. "base * (phase(pi) + cav(i, 1))".
    #[arg(long, global = true)]
    expr: Option<String>,
    /// Named scheme: base, fa, fb, fc, fd, fe, fs, iterated.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Cavity side for preset fc: i or s.
    #[arg(long, global = true)]
    target: Option<String>,
    /// Every cavity linewidth of the scheme.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c: Option<String>,
    /// Idler-side cavity linewidths.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_i: Option<String>,
    /// Signal-side cavity linewidths.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_s: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_s1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_i1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_i2: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_c_s2: Option<String>,
    /// Relative phase in radians; `pi` accepted.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Cascade stages of preset iterated.
    #[arg(long, global = true)]
    stages: Option<String>,
    /// Superradiant idler linewidth in units of Γ.
    #[arg(long, global = true)]
    gamma3n: Option<String>,
    /// Excitation pulse length in units of 1/Γ.
    #[arg(long, global = true)]
    gamma_tau: Option<String>,
    /// svd, kernel or both.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    points: Option<String>,
    /// Grid half-width in units of Γ.
    #[arg(long, global = true)]
    span: Option<String>,
    /// midpoint or trapezoid.
    #[arg(long, global = true)]
    quadrature: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file, replaced atomically.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schmidt entropy and purity of one configuration.
    Entropy,
    /// Entropy over one or two parameter axes.
    Sweep(SweepArgs),
    /// Dense |f| matrix over the detuning grid.
    Spectrum,
    /// Leading Schmidt modes sampled on the grid.
    Modes(ModesArgs),
    /// Headline reproduction runs with a summary table.
    Repro(ReproArgs),
    /// Entropy under successive grid doublings.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// gamma_c, gamma_c_i, gamma_c_s, gamma_c_s1, gamma_c_i1, gamma_c_i2, gamma_c_s2, phi or stages.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// linear or log.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    axis2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to2: Option<String>,
    #[arg(long)]
    steps2: Option<String>,
    #[arg(long)]
    scale2: Option<String>,
    /// Re-evaluate the minimum and maximum at this many grid points.
    #[arg(long, value_name = "POINTS")]
    refine: Option<String>,
    /// Dense entropy matrix of a two-axis sweep.
    #[arg(long, value_name = "PATH")]
    heatmap: Option<String>,
}

#[derive(Args, Debug)]
struct ModesArgs {
    /// Number of mode pairs to write.
    #[arg(short = 'n', long)]
    modes: Option<String>,
}

#[derive(Args, Debug)]
struct ReproArgs {
    /// Skip the doubled-grid reruns.
    #[arg(long)]
    no_convergence: bool,
    /// Phase samples over [0, 2pi] for the symmetrization sweep.
    #[arg(long)]
    phase_steps: Option<String>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Number of resolutions.
    #[arg(long)]
    levels: Option<String>,
}

fn overrides(cli: &Cli) -> Vec<(String, String)> {
    let c = &cli.common;
    let points_key = match cli.command {
        Command::Sweep(_) => "sweep.points",
        Command::Convergence(_) => "convergence.base_points",
        _ => "grid.points",
    };
    let mut pairs: Vec<(&str, &Option<String>)> = vec![
        ("pipeline.expr", &c.expr),
        ("pipeline.preset", &c.preset),
        ("pipeline.target", &c.target),
        ("pipeline.gamma_c", &c.gamma_c),
        ("pipeline.gamma_c_i", &c.gamma_c_i),
        ("pipeline.gamma_c_s", &c.gamma_c_s),
        ("pipeline.gamma_c_s1", &c.gamma_c_s1),
        ("pipeline.gamma_c_i1", &c.gamma_c_i1),
        ("pipeline.gamma_c_i2", &c.gamma_c_i2),
        ("pipeline.gamma_c_s2", &c.gamma_c_s2),
        ("pipeline.phi", &c.phi),
        ("pipeline.stages", &c.stages),
        ("physical.gamma3N_over_gamma", &c.gamma3n),
        ("physical.gamma_tau", &c.gamma_tau),
        ("backend", &c.backend),
        (points_key, &c.points),
        ("grid.span_over_gamma", &c.span),
        ("grid.quadrature", &c.quadrature),
        ("output.format", &c.format),
        ("output.path", &c.out),
    ];
    let no_convergence = Some("false".to_string());
    match &cli.command {
        Command::Sweep(s) => pairs.extend([
            ("sweep.axis", &s.axis),
            ("sweep.from", &s.from),
            ("sweep.to", &s.to),
            ("sweep.steps", &s.steps),
            ("sweep.scale", &s.scale),
            ("sweep.axis2", &s.axis2),
            ("sweep.from2", &s.from2),
            ("sweep.to2", &s.to2),
            ("sweep.steps2", &s.steps2),
            ("sweep.scale2", &s.scale2),
            ("sweep.refine", &s.refine),
            ("sweep.heatmap", &s.heatmap),
        ]),
        Command::Modes(m) => pairs.push(("output.modes", &m.modes)),
        Command::Repro(r) => {
            pairs.push(("repro.phase_steps", &r.phase_steps));
            if r.no_convergence {
                pairs.push(("repro.convergence", &no_convergence));
            }
        }
        Command::Convergence(c) => pairs.push(("convergence.levels", &c.levels)),
        Command::Entropy | Command::Spectrum => {}
    }
    pairs.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::load(cli.common.config.as_deref(), |k| std::env::var(k).ok(), &overrides(&cli))?;
    if cli.common.print_config {
        print!("{}", cfg.to_flat_toml());
        return Ok(());
    }
    match cli.command {
        Command::Entropy => commands::entropy(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Modes(_) => commands::modes(&cfg),
        Command::Repro(_) => commands::repro(&cfg),
        Command::Convergence(_) => commands::convergence(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
