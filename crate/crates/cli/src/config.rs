//! JSON configs and the merge of config fields with command-line flags.
//! Flags always win.

use std::path::{Path, PathBuf};

use ldp_qif::simulate::{DatasetFormat, Distribution, Remap, TheSampling};
use ldp_qif::{ChannelMatrix, MechanismSpec, Protocol};
use serde::Deserialize;

use crate::args::{GlobalArgs, OutputFormat};
use crate::error::{CliError, CliResult, ResultExt};

pub const DEFAULT_THETA: f64 = 0.75;

/// Output and scheduling settings after merging flags over a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub lanes: usize,
    pub exact: bool,
    pub svg: Option<PathBuf>,
}

/// Fields shared by every config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputFields {
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub lanes: Option<usize>,
}

macro_rules! output_fields {
    ($t:ty) => {
        impl $t {
            pub fn output(&self) -> OutputFields {
                OutputFields {
                    output_path: self.output_path.clone(),
                    output_format: self.output_format,
                    seed: self.seed,
                    lanes: self.lanes,
                }
            }
        }
    };
}

output_fields!(SweepConfig);
output_fields!(SimulateConfig);

impl Settings {
    pub fn resolve(global: &GlobalArgs, config: &OutputFields) -> CliResult<Self> {
        let lanes = global
            .lanes
            .or(config.lanes)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if lanes == 0 {
            return Err(CliError::config("--lanes must be at least 1"));
        }
        Ok(Settings {
            seed: global.seed.or(config.seed).unwrap_or(0),
            out: global.out.clone().or_else(|| config.output_path.clone()),
            format: global.format.or(config.output_format).unwrap_or_default(),
            lanes,
            exact: global.exact,
            svg: global.svg.clone(),
        })
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.lanes)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {} worker threads: {e}", self.lanes)))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// A protocol with some of its parameters pinned. The remaining ones come
/// from the sweep grids or the protocol defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Template {
    Name(Protocol),
    Full {
        protocol: Protocol,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        g: Option<usize>,
        #[serde(default)]
        omega: Option<usize>,
    },
}

impl From<Protocol> for Template {
    fn from(p: Protocol) -> Self {
        Template::Name(p)
    }
}

impl Template {
    pub fn protocol(&self) -> Protocol {
        match *self {
            Template::Name(p) | Template::Full { protocol: p, .. } => p,
        }
    }

    /// Specs for one `(k, ε)` cell; THE without a pinned theta expands over
    /// `thetas`.
    pub fn instantiate(&self, k: usize, epsilon: f64, thetas: &[f64]) -> ldp_qif::Result<Vec<MechanismSpec>> {
        let (protocol, theta, g, omega) = match *self {
            Template::Name(p) => (p, None, None, None),
            Template::Full {
                protocol,
                theta,
                g,
                omega,
            } => (protocol, theta, g, omega),
        };
        if protocol == Protocol::The {
            let grid = theta.map_or_else(|| thetas.to_vec(), |t| vec![t]);
            grid.into_iter()
                .map(|t| MechanismSpec::build(protocol, k, epsilon, omega, g, Some(t)))
                .collect()
        } else {
            Ok(vec![MechanismSpec::build(protocol, k, epsilon, omega, g, theta)?])
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub protocols: Option<Vec<Template>>,
    #[serde(default)]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: Option<OutputFormat>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub lanes: Option<usize>,
}

pub fn check_epsilons(grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::config("epsilon grid is empty"));
    }
    if let Some(e) = grid.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(CliError::config(format!("epsilon {e} is not a finite non-negative number")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Asr,
    Mse,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Asr => "asr",
            Metric::Mse => "mse",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn identity_remap() -> Remap {
    Remap::Identity
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Relative paths are resolved against the config file's directory.
    File {
        path: PathBuf,
        format: DatasetFormat,
        #[serde(default = "identity_remap")]
        remap: Remap,
    },
    Synthetic {
        distribution: Distribution,
        k: usize,
        n: usize,
        /// Defaults to the run seed.
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Spec grid: every template at every epsilon, THE also at every theta.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSweep {
    pub protocols: Vec<Template>,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub thetas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub dataset: DatasetSource,
    /// Explicit specs; their `k` must equal the dataset's domain size.
    #[serde(default)]
    pub specs: Vec<MechanismSpec>,
    #[serde(default)]
    pub sweep: Option<SpecSweep>,
    pub metric: OneOrMany<Metric>,
    pub trials: usize,
    /// Project frequency estimates onto the simplex before scoring MSE.
    #[serde(default)]
    pub project: bool,
    #[serde(default)]
    pub the_sampling: TheSampling,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: Option<OutputFormat>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub lanes: Option<usize>,
}

/// A refine operand: a mechanism spec or an explicit channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Spec(MechanismSpec),
    Channel(ChannelMatrix),
}

/// `PROTO:key=value,...` with keys `k`, `eps`/`epsilon`, `theta`, `g`,
/// `omega`; `k` defaults to 2.
pub fn parse_compact_spec(s: &str) -> CliResult<MechanismSpec> {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let protocol: Protocol = name.parse().usage()?;
    let (mut k, mut eps, mut theta, mut g, mut omega) = (2usize, None, None, None, None);
    for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("expected key=value, got {kv:?}")))?;
        let bad = |e: &dyn std::fmt::Display| CliError::config(format!("{key}: {e}"));
        match key.trim() {
            "k" => k = value.trim().parse().map_err(|e| bad(&e))?,
            "eps" | "epsilon" => eps = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "theta" => theta = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "g" => g = Some(value.trim().parse::<usize>().map_err(|e| bad(&e))?),
            "omega" => omega = Some(value.trim().parse::<usize>().map_err(|e| bad(&e))?),
            other => return Err(CliError::config(format!("unknown spec key {other:?}"))),
        }
    }
    let eps = eps.ok_or_else(|| CliError::config(format!("spec {s:?} has no eps")))?;
    MechanismSpec::build(protocol, k, eps, omega, g, theta).usage()
}

pub fn parse_operand(arg: &str) -> CliResult<Operand> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            return ChannelMatrix::from_csv_str(&text).usage().map(Operand::Channel);
        }
        return parse_json_operand(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())));
    }
    if arg.trim_start().starts_with('{') {
        return parse_json_operand(arg);
    }
    if arg.contains(':') {
        return parse_compact_spec(arg).map(Operand::Spec);
    }
    Err(CliError::config(format!("{arg:?} is neither a file nor a mechanism spec")))
}

fn parse_json_operand(text: &str) -> CliResult<Operand> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    if value.get("protocol").is_some() {
        serde_json::from_value(value)
            .map(Operand::Spec)
            .map_err(|e| CliError::config(e.to_string()))
    } else {
        ChannelMatrix::from_json_str(text).usage().map(Operand::Channel)
    }
}
