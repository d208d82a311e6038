use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use wildsim::geometry::Vec3;
use wildsim::kernel::{KernelSpec, Preset};
use wildsim::sampler::{DatumSpec, Estimator};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Expectation identities of the leaf weights against closed forms.
    Identities,
    /// Mean velocity and energy along the flow, plus per-collision conservation.
    Conserve,
    /// Fitted decay rates of the weight statistics and of a directional fourth moment.
    Decay,
    /// Noise-corrected sup distance to the Maxwellian characteristic function.
    Cfcurve,
    /// Tree representation against the direct collision cascade.
    Crosscheck,
    /// Conditional Legendre moments of leaf directions on enumerated trees.
    Legendre,
    /// Per-sample characteristic-function tail bound.
    Envelope,
    /// Velocity samples at each time, as CSV.
    Simulate,
    /// Characteristic-function estimates on the frequency grid.
    Cf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::Conserve => "conserve",
            Command::Decay => "decay",
            Command::Cfcurve => "cfcurve",
            Command::Crosscheck => "crosscheck",
            Command::Legendre => "legendre",
            Command::Envelope => "envelope",
            Command::Simulate => "simulate",
            Command::Cf => "cf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    #[value(alias = "rao-blackwell", alias = "rb")]
    Raoblackwell,
    Raw,
}

impl From<EstimatorName> for Estimator {
    fn from(e: EstimatorName) -> Self {
        match e {
            EstimatorName::Raoblackwell => Estimator::RaoBlackwell,
            EstimatorName::Raw => Estimator::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelConfig {
    Preset(Preset),
    Table {
        table: Vec<(f64, f64)>,
        #[serde(default)]
        endpoint_exponents: Option<[f64; 2]>,
    },
}

impl KernelConfig {
    pub fn spec(&self) -> KernelSpec {
        match self {
            KernelConfig::Preset(p) => KernelSpec::from(*p),
            KernelConfig::Table { table, endpoint_exponents } => KernelSpec::Table {
                points: table.clone(),
                endpoint_exponents: endpoint_exponents.unwrap_or([1.0, 0.0]),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiGrid {
    Points(Vec<Vec3>),
    Radial { rhos: Vec<f64>, directions: usize },
}

impl XiGrid {
    pub fn frequencies(&self) -> Vec<Vec3> {
        match self {
            XiGrid::Points(p) => p.clone(),
            XiGrid::Radial { rhos, directions } => wildsim::diagnostics::radial_grid(rhos, *directions),
        }
    }
}

/// A value given either as a short name or as a full table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Named<T> {
    Name(String),
    Full(T),
}

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kernel: Option<Named<KernelConfig>>,
    truncate: Option<f64>,
    mu0: Option<Named<DatumSpec>>,
    normalize: Option<bool>,
    t_list: Option<Vec<f64>>,
    xi_grid: Option<Named<XiGrid>>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    n_max: Option<usize>,
    estimator: Option<EstimatorName>,
    z_threshold: Option<f64>,
    a_star: Option<f64>,
    direction: Option<Vec3>,
    rate_tolerance: Option<f64>,
    lambda: Option<f64>,
    q: Option<f64>,
    max_leaves: Option<usize>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

/// Command-line overrides; `None` means "not given".
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// xabs | cubic | sqrtw | spike[:width] | power:gamma
    #[arg(long)]
    pub kernel: Option<String>,
    /// Truncation level for non-cutoff kernels; times are rescaled by the truncated mass.
    #[arg(long)]
    pub truncate: Option<f64>,
    /// gaussian | six-point | heavy-tail:q
    #[arg(long)]
    pub mu0: Option<String>,
    /// Use the initial datum as given instead of rescaling to mean 0 and energy 3.
    #[arg(long)]
    pub no_normalize: bool,
    /// Comma-separated times.
    #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    /// "x,y,z;x,y,z;..." or "radial:r1,r2,.../directions".
    #[arg(long)]
    pub xi_grid: Option<String>,
    /// Monte Carlo samples per time
    #[arg(long)]
    pub samples: Option<usize>,
    /// Run seed; output depends on it and not on the worker count
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Defaults to $WILDSIM_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Cap on the number of tree leaves per draw.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Characteristic-function estimator; Rao-Blackwellized when the datum has a closed-form cf
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorName>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Largest accepted |z| of a Monte Carlo comparison
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Threshold in the Markov bound on W.
    #[arg(long)]
    pub a_star: Option<f64>,
    /// Direction u of the fourth moment E (u·v)^4, as "x,y,z".
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Accepted relative error of fitted decay rates.
    #[arg(long)]
    pub rate_tolerance: Option<f64>,
    /// λ of the characteristic-function tail bound.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// q of the characteristic-function tail bound.
    #[arg(long)]
    pub q: Option<f64>,
    /// Largest tree size for the Legendre checks.
    #[arg(long)]
    pub max_leaves: Option<usize>,
}

/// The effective configuration after merging flags, file and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub kernel: KernelConfig,
    pub truncate: Option<f64>,
    pub mu0: DatumSpec,
    pub normalize: bool,
    pub t_list: Vec<f64>,
    pub xi_grid: XiGrid,
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub n_max: usize,
    pub estimator: Option<EstimatorName>,
    pub z_threshold: f64,
    pub a_star: f64,
    pub direction: Vec3,
    pub rate_tolerance: f64,
    pub lambda: f64,
    pub q: f64,
    pub max_leaves: usize,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| config_err(format!("not a number: {s:?}")))
}

pub fn parse_vec3(s: &str) -> Result<Vec3, CliError> {
    let parts: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| config_err(format!("expected three components in {s:?}")))
}

pub fn parse_kernel(s: &str) -> Result<KernelConfig, CliError> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(parse_f64(a)?)),
        None => (s, None),
    };
    let preset = match (name.trim().to_ascii_lowercase().as_str(), arg) {
        ("xabs", None) => Preset::Xabs,
        ("cubic", None) => Preset::Cubic,
        ("sqrtw", None) => Preset::SqrtW,
        ("spike", w) => Preset::Spike { width: w.unwrap_or(0.2) },
        ("power", Some(gamma)) => Preset::PowerW { gamma },
        _ => return Err(config_err(format!("unknown kernel {s:?}"))),
    };
    Ok(KernelConfig::Preset(preset))
}

pub fn parse_mu0(s: &str) -> Result<DatumSpec, CliError> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(parse_f64(a)?)),
        None => (s, None),
    };
    match (name.trim().to_ascii_lowercase().as_str(), arg) {
        ("gaussian", None) => Ok(DatumSpec::standard_gaussian()),
        ("six-point" | "sixpoint", None) => Ok(DatumSpec::SixPoint),
        ("heavy-tail" | "heavytail", Some(q)) => Ok(DatumSpec::HeavyTail { q }),
        _ => Err(config_err(format!("unknown initial datum {s:?}"))),
    }
}

pub fn parse_xi_grid(s: &str) -> Result<XiGrid, CliError> {
    if let Some(rest) = s.strip_prefix("radial:") {
        let (rhos, dirs) =
            rest.split_once('/').ok_or_else(|| config_err("radial grid must look like radial:r1,r2,.../directions"))?;
        let rhos = rhos.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
        let directions = dirs.trim().parse().map_err(|_| config_err(format!("bad direction count {dirs:?}")))?;
        return Ok(XiGrid::Radial { rhos, directions });
    }
    Ok(XiGrid::Points(s.split(';').filter(|p| !p.trim().is_empty()).map(parse_vec3).collect::<Result<_, _>>()?))
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn resolve<T>(named: Option<Named<T>>, parse: impl Fn(&str) -> Result<T, CliError>) -> Result<Option<T>, CliError> {
    named
        .map(|n| match n {
            Named::Name(s) => parse(&s),
            Named::Full(v) => Ok(v),
        })
        .transpose()
}

fn default_times(command: Command) -> Vec<f64> {
    match command {
        Command::Decay | Command::Cfcurve => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        Command::Simulate | Command::Envelope => vec![1.0],
        _ => vec![0.5, 1.0, 2.0],
    }
}

fn default_workers() -> Result<usize, CliError> {
    match std::env::var("WILDSIM_WORKERS") {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| config_err(format!("WILDSIM_WORKERS must be an integer, got {v:?}")))
        }
        _ => Ok(0),
    }
}

impl RunConfig {
    /// Merges flags over the optional file over defaults and validates the result.
    pub fn build(command: Command, o: &Overrides) -> Result<RunConfig, CliError> {
        let file = match &o.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let kernel = match &o.kernel {
            Some(s) => parse_kernel(s)?,
            None => resolve(file.kernel, parse_kernel)?.unwrap_or(KernelConfig::Preset(Preset::Xabs)),
        };
        let mu0 = match &o.mu0 {
            Some(s) => parse_mu0(s)?,
            None => resolve(file.mu0, parse_mu0)?.unwrap_or(DatumSpec::SixPoint),
        };
        let xi_grid = match &o.xi_grid {
            Some(s) => parse_xi_grid(s)?,
            None => resolve(file.xi_grid, parse_xi_grid)?
                .unwrap_or(XiGrid::Radial { rhos: vec![0.5, 1.0, 1.5, 2.0], directions: 5 }),
        };
        let direction = match &o.direction {
            Some(s) => parse_vec3(s)?,
            None => file.direction.unwrap_or([1.0, 0.0, 0.0]),
        };
        let default_samples = if command == Command::Simulate { 1000 } else { 100_000 };
        let workers = match o.workers.or(file.workers) {
            Some(w) => w,
            None => default_workers()?,
        };
        let cfg = RunConfig {
            command,
            kernel,
            truncate: o.truncate.or(file.truncate),
            mu0,
            normalize: if o.no_normalize { false } else { file.normalize.unwrap_or(true) },
            t_list: o.t.clone().or(file.t_list).unwrap_or_else(|| default_times(command)),
            xi_grid,
            n_samples: o.samples.or(file.n_samples).unwrap_or(default_samples),
            seed: o.seed.or(file.seed).unwrap_or(1),
            workers,
            n_max: o.nmax.or(file.n_max).unwrap_or(wildsim::exec::DEFAULT_N_MAX),
            estimator: o.estimator.or(file.estimator),
            z_threshold: o.z_threshold.or(file.z_threshold).unwrap_or(4.0),
            a_star: o.a_star.or(file.a_star).unwrap_or(0.5),
            direction,
            rate_tolerance: o.rate_tolerance.or(file.rate_tolerance).unwrap_or(0.15),
            lambda: o.lambda.or(file.lambda).unwrap_or(0.5f64.sqrt()),
            q: o.q.or(file.q).unwrap_or(0.25),
            max_leaves: o.max_leaves.or(file.max_leaves).unwrap_or(4),
            out: o.out.clone().or(file.out),
            csv: o.csv.clone().or(file.csv),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.t_list.is_empty() {
            return Err(config_err("t list is empty"));
        }
        if let Some(t) = self.t_list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(config_err(format!("times must be finite and non-negative, got {t}")));
        }
        if self.n_samples == 0 {
            return Err(config_err("samples must be positive"));
        }
        if self.n_max == 0 {
            return Err(config_err("nmax must be positive"));
        }
        if !(self.z_threshold > 0.0) {
            return Err(config_err("z threshold must be positive"));
        }
        if !(self.a_star > 0.0) {
            return Err(config_err("a* must be positive"));
        }
        if !(self.rate_tolerance > 0.0) {
            return Err(config_err("rate tolerance must be positive"));
        }
        if let Some(level) = self.truncate {
            if !(level > 0.0 && level.is_finite()) {
                return Err(config_err("truncation level must be positive and finite"));
            }
        }
        if self.max_leaves == 0 || self.max_leaves > wildsim::tree::ENUMERATION_LIMIT {
            return Err(config_err(format!("max leaves must be in 1..={}", wildsim::tree::ENUMERATION_LIMIT)));
        }
        let grid = self.xi_grid.frequencies();
        if grid.is_empty() && matches!(self.command, Command::Cf | Command::Cfcurve | Command::Crosscheck) {
            return Err(config_err("frequency grid is empty"));
        }
        if grid.iter().flatten().any(|x| !x.is_finite()) {
            return Err(config_err("frequencies must be finite"));
        }
        Ok(())
    }
}
