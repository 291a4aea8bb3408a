use std::path::{Path, PathBuf};

use blowup_core::critpoints::CritConfig;
use blowup_core::geometry::Domain;
use blowup_core::quadrature::QuadratureConfig;
use blowup_core::{Error, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PsiGrid,
    Crit,
    Predict,
    EnergyCheck,
    MorseAudit,
    Constants,
}

impl Command {
    pub fn needs_domain(self) -> bool {
        self != Command::Constants
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Sub,
    Nodal,
    Hole,
}

/// A 2D slice: two varying axes over `[lo, hi]` with `steps` points each,
/// all other coordinates pinned to `fixed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: [usize; 2],
    pub lo: Option<[f64; 2]>,
    pub hi: Option<[f64; 2]>,
    pub steps: [usize; 2],
    pub fixed: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { axes: [0, 1], lo: None, hi: None, steps: [21, 21], fixed: Vec::new() }
    }
}

/// Everything needed to rerun a command. Written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    #[serde(default)]
    pub domain_file: Option<PathBuf>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub regime: Option<RegimeArg>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub crit: CritConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Parameter sweep for `predict`: `points` log-spaced values.
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Decreasing eps or rho values for `energy-check`.
    #[serde(default)]
    pub list: Vec<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    #[serde(default)]
    pub zeta: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_samples")]
    pub boundary_samples: usize,
    #[serde(default)]
    pub c2_nodal: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_trials() -> usize {
    5
}

fn default_samples() -> usize {
    4096
}

impl RunManifest {
    pub fn new(command: Command) -> Self {
        RunManifest {
            command,
            domain_file: None,
            dimension: None,
            seed: 0,
            output_dir: default_out(),
            regime: None,
            quadrature: QuadratureConfig::default(),
            crit: CritConfig::default(),
            grid: GridSpec::default(),
            sweep: None,
            list: Vec::new(),
            d: None,
            xi: None,
            zeta: None,
            rho: 0.0,
            trials: default_trials(),
            boundary_samples: default_samples(),
            c2_nodal: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("bad manifest: {e}")))
    }

    /// Check the invariants and resolve the domain and dimension.
    pub fn resolve(&mut self) -> Result<Option<Domain>> {
        self.quadrature.seed = self.seed;
        self.quadrature.validate()?;
        self.crit.validate()?;
        let domain = match &self.domain_file {
            Some(p) => {
                if !p.is_file() {
                    return Err(Error::InvalidArgument(format!("domain file {} does not exist", p.display())));
                }
                let d = Domain::load(p)?;
                if let Some(n) = self.dimension {
                    if n != d.dim() {
                        return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
                    }
                }
                self.dimension = Some(d.dim());
                Some(d)
            }
            None if self.command.needs_domain() => {
                return Err(Error::InvalidArgument("--domain is required for this command".into()));
            }
            None => None,
        };
        match self.dimension {
            Some(n) => blowup_core::vector::check_dim(n)?,
            None => return Err(Error::InvalidArgument("--dim is required without a domain file".into())),
        }
        Ok(domain)
    }

    pub fn dim(&self) -> usize {
        self.dimension.unwrap_or(0)
    }
}
