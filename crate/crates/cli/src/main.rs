//! `blowup`: concentration landscapes, critical-point censuses, rate
//! predictions and energy checks from the command line.
//!
//! Exit codes: 0 on success, 2 on a violated precondition (bad input,
//! missing file, inadmissible point), 3 on numerical non-convergence or a
//! failed verdict.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use manifest::{Command, GridSpec, RegimeArg, RunManifest, Sweep};

#[derive(Debug)]
pub enum CliError {
    Core(blowup_core::Error),
    Io(std::io::Error),
}

impl From<blowup_core::Error> for CliError {
    fn from(e: blowup_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_precondition() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "blowup", version, about = "Concentration analysis for indefinite-weight critical problems")]
struct Cli {
    /// Run manifest (JSON); flags given here override its fields.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Domain description (JSON shape tree).
    #[arg(long, global = true)]
    domain: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    near_budget: Option<usize>,
    #[arg(long, global = true)]
    far_shells: Option<usize>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    target_rel_err: Option<f64>,

    #[arg(long, global = true)]
    multistart: Option<usize>,
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    dedupe_radius: Option<f64>,
    #[arg(long, global = true)]
    string_nodes: Option<usize>,
    #[arg(long, global = true)]
    morse_tol: Option<f64>,
    #[arg(long, global = true)]
    string_budget: Option<usize>,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Values of psi on a 2D slice.
    PsiGrid {
        #[arg(long, value_delimiter = ',')]
        axes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lo: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Values of all coordinates; the two grid axes are overwritten.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fixed: Option<Vec<f64>>,
    },
    /// Minima and mountain-pass saddles of psi.
    Crit,
    /// Concentration rates over a log-spaced parameter sweep.
    Predict {
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        c2_nodal: Option<f64>,
    },
    /// Energy expansion residuals along a decreasing parameter list.
    EnergyCheck {
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long, value_delimiter = ',')]
        list: Option<Vec<f64>>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        zeta: Option<Vec<f64>>,
    },
    /// Nondegeneracy of critical points under random domain deformations.
    MorseAudit {
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Constants of the reduced energies.
    Constants {
        #[arg(long)]
        c2_nodal: Option<f64>,
    },
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::PsiGrid { .. } => Command::PsiGrid,
            Sub::Crit => Command::Crit,
            Sub::Predict { .. } => Command::Predict,
            Sub::EnergyCheck { .. } => Command::EnergyCheck,
            Sub::MorseAudit { .. } => Command::MorseAudit,
            Sub::Constants { .. } => Command::Constants,
        }
    }
}

fn pair<T: Copy>(v: Option<Vec<T>>, name: &str) -> Result<Option<[T; 2]>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some([a, b])),
        Some(_) => Err(blowup_core::Error::InvalidArgument(format!("--{name} takes two comma-separated values")).into()),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn build(cli: Cli) -> Result<RunManifest, CliError> {
    let mut m = match (&cli.manifest, &cli.command) {
        (Some(p), sub) => {
            let m = RunManifest::load(p)?;
            if let Some(s) = sub {
                if s.command() != m.command {
                    return Err(blowup_core::Error::InvalidArgument("subcommand differs from the manifest command".into()).into());
                }
            }
            m
        }
        (None, Some(s)) => RunManifest::new(s.command()),
        (None, None) => {
            return Err(blowup_core::Error::InvalidArgument("a subcommand or --manifest is required".into()).into());
        }
    };
    if cli.domain.is_some() {
        m.domain_file = cli.domain;
    }
    if cli.dim.is_some() {
        m.dimension = cli.dim;
    }
    set(&mut m.seed, cli.seed);
    set(&mut m.output_dir, cli.out);
    let q = &mut m.quadrature;
    set(&mut q.near_budget, cli.near_budget);
    set(&mut q.far_shells, cli.far_shells);
    set(&mut q.replicates, cli.replicates);
    set(&mut q.target_rel_err, cli.target_rel_err);
    let c = &mut m.crit;
    set(&mut c.multistart, cli.multistart);
    set(&mut c.newton_tol, cli.newton_tol);
    set(&mut c.max_iters, cli.max_iters);
    set(&mut c.dedupe_radius, cli.dedupe_radius);
    set(&mut c.string_nodes, cli.string_nodes);
    set(&mut c.morse_tol, cli.morse_tol);
    set(&mut c.string_budget, cli.string_budget);
    match cli.command {
        Some(Sub::PsiGrid { axes, lo, hi, steps, fixed }) => {
            let g: &mut GridSpec = &mut m.grid;
            set(&mut g.axes, pair(axes, "axes")?);
            if lo.is_some() {
                g.lo = pair(lo, "lo")?;
            }
            if hi.is_some() {
                g.hi = pair(hi, "hi")?;
            }
            set(&mut g.steps, pair(steps, "steps")?);
            set(&mut g.fixed, fixed);
        }
        Some(Sub::Predict { regime, from, to, points, xi, samples, c2_nodal }) => {
            if regime.is_some() {
                m.regime = regime;
            }
            if from.is_some() || to.is_some() || points.is_some() {
                let mut s = m.sweep.unwrap_or(Sweep { from: 1e-1, to: 1e-4, points: 7 });
                set(&mut s.from, from);
                set(&mut s.to, to);
                set(&mut s.points, points);
                m.sweep = Some(s);
            }
            if xi.is_some() {
                m.xi = xi;
            }
            set(&mut m.boundary_samples, samples);
            if c2_nodal.is_some() {
                m.c2_nodal = c2_nodal;
            }
        }
        Some(Sub::EnergyCheck { regime, list, d, xi, zeta }) => {
            if regime.is_some() {
                m.regime = regime;
            }
            set(&mut m.list, list);
            if d.is_some() {
                m.d = d;
            }
            if xi.is_some() {
                m.xi = xi;
            }
            if zeta.is_some() {
                m.zeta = zeta;
            }
        }
        Some(Sub::MorseAudit { rho, trials }) => {
            set(&mut m.rho, rho);
            set(&mut m.trials, trials);
        }
        Some(Sub::Constants { c2_nodal }) => {
            if c2_nodal.is_some() {
                m.c2_nodal = c2_nodal;
            }
        }
        Some(Sub::Crit) | None => {}
    }
    Ok(m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli).and_then(|mut m| {
        let domain = m.resolve()?;
        commands::run(&m, domain.as_ref())
    });
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
