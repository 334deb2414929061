//! Experiment configuration: which instance, which solvers, which accuracy
//! grid, and where the results go.
//!
//! A config is JSON with a versioned schema. Parsing is strict: unknown
//! fields, an unordered accuracy grid, or a grid cell whose accuracy the
//! solver or instance family cannot honor are all rejected up front, before
//! any cell runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use iapun::instances::{
    build_scaled, coupled_quadratic, scale_instance, valley, CoupledQuadraticConfig,
    HardInstanceSpec,
};
use iapun::{IapunParams, MinimaxProblem};

use crate::BenchError;

/// The schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Output encoding for the record file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Flat per-epoch rows with a fixed column order (see `records`).
    Csv,
    /// Full nested records.
    Json,
}

/// Instance family plus its parameters.
///
/// `chain` rebuilds the scaled instance per grid cell — its construction
/// is accuracy-specific — while the other families are built once and
/// solved at every accuracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Separable quadratics with a nonconvex bump and bilinear coupling.
    CoupledQuadratic {
        #[serde(flatten)]
        params: CoupledQuadraticConfig,
        /// Primal start point, same length as the parameter vectors.
        start: Vec<f64>,
    },
    /// The built-in two-dimensional plateau instance with its start point.
    Valley,
    /// Chain instance scaled to the given targets at each grid accuracy.
    Chain { ell: f64, mu: f64, l2: f64, delta: f64 },
    /// Chain instance from a serialized descriptor, fixed across the grid.
    /// A relative path is resolved against the config file's directory.
    ChainFile { path: PathBuf },
}

impl InstanceConfig {
    /// Stable identifier used in records and file names.
    pub fn id(&self) -> String {
        match self {
            InstanceConfig::CoupledQuadratic { .. } => "coupled-quadratic".into(),
            InstanceConfig::Valley => "valley".into(),
            InstanceConfig::Chain { .. } => "chain".into(),
            InstanceConfig::ChainFile { path } => format!(
                "chain-file:{}",
                path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
            ),
        }
    }

    /// Builds the instance for one grid cell: the problem and its start
    /// point. Only the chain family actually depends on `eps`.
    pub fn build(&self, eps: f64) -> Result<(MinimaxProblem, Vec<f64>), BenchError> {
        match self {
            InstanceConfig::CoupledQuadratic { params, start } => {
                let problem = coupled_quadratic(params.clone())?;
                if start.len() != problem.dim_x() {
                    return Err(BenchError::Config(format!(
                        "start point has {} coordinates, instance has dim_x = {}",
                        start.len(),
                        problem.dim_x()
                    )));
                }
                Ok((problem, start.clone()))
            }
            InstanceConfig::Valley => Ok(valley()?),
            InstanceConfig::Chain { ell, mu, l2, delta } => {
                let (_, problem) = scale_instance(*ell, *mu, *l2, *delta, eps)?;
                let start = vec![0.0; problem.dim_x()];
                Ok((problem, start))
            }
            InstanceConfig::ChainFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    BenchError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                let spec: HardInstanceSpec = serde_json::from_str(&text).map_err(|e| {
                    BenchError::Config(format!("bad chain descriptor {}: {e}", path.display()))
                })?;
                let problem = build_scaled(&spec)?;
                let start = vec![0.0; problem.dim_x()];
                Ok((problem, start))
            }
        }
    }
}

/// One solver entry of the experiment, with optional iteration caps. Caps
/// left unset fall back to the solver's own defaults; the CLI cap flags
/// override both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    /// The certified proximal-point solver.
    Iapun {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_epochs: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_inner: Option<usize>,
    },
    /// Proximal-point baseline without certification.
    InexactAppa {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_outer: Option<usize>,
    },
    /// Simultaneous descent-ascent baseline.
    Gda {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_outer: Option<usize>,
    },
}

impl SolverConfig {
    /// Stable identifier used in records.
    pub fn id(&self) -> &'static str {
        match self {
            SolverConfig::Iapun { .. } => "iapun",
            SolverConfig::InexactAppa { .. } => "inexact-appa",
            SolverConfig::Gda { .. } => "gda",
        }
    }
}

/// A full experiment: one instance family, a solver list, and a strictly
/// decreasing accuracy grid. Cells execute solver-major — every accuracy
/// for the first solver, then the second — and records keep that order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    pub instance: InstanceConfig,
    pub solvers: Vec<SolverConfig>,
    /// Stationarity targets, strictly decreasing.
    pub eps_grid: Vec<f64>,
    /// Seed for the random probe points of `validate`; the solver runs
    /// themselves are deterministic and take no randomness.
    pub seed: u64,
    /// Record file the run writes.
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Parses and fully validates a config file. Relative paths inside the
    /// config are resolved against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        if let InstanceConfig::ChainFile { path } = &mut config.instance {
            if path.is_relative() {
                *path = dir.join(&path);
            }
        }
        if config.out.is_relative() {
            config.out = dir.join(&config.out);
        }
        config.validate()?;
        Ok(config)
    }

    /// Checks every invariant that does not require running a solver:
    /// schema version, grid shape, and — per cell — that the instance
    /// builds and the solver's parameter schedule accepts the accuracy.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Config(format!(
                "schema_version {} is not supported; this build reads {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.solvers.is_empty() {
            return Err(BenchError::Config("solver list is empty".into()));
        }
        if self.eps_grid.is_empty() {
            return Err(BenchError::Config("eps grid is empty".into()));
        }
        for eps in &self.eps_grid {
            if !eps.is_finite() || *eps <= 0.0 {
                return Err(BenchError::Config(format!(
                    "eps grid entries must be finite and positive, got {eps}"
                )));
            }
        }
        for pair in self.eps_grid.windows(2) {
            if pair[1] >= pair[0] {
                return Err(BenchError::Config(format!(
                    "eps grid must be strictly decreasing, got {} before {}",
                    pair[0], pair[1]
                )));
            }
        }
        for eps in &self.eps_grid {
            // instance construction enforces the family's accuracy ceiling
            let (problem, start) = self.instance.build(*eps).map_err(|e| {
                BenchError::Config(format!("instance rejects eps = {eps}: {e}"))
            })?;
            if start.len() != problem.dim_x() {
                return Err(BenchError::Config(format!(
                    "instance start has {} coordinates, dim_x is {}",
                    start.len(),
                    problem.dim_x()
                )));
            }
            for solver in &self.solvers {
                if let SolverConfig::Iapun { .. } = solver {
                    // the parameter schedule is the solver's own precondition
                    IapunParams::derive(problem.spec(), *eps).map_err(|e| {
                        BenchError::Config(format!(
                            "iapun cannot certify eps = {eps} on this instance: {e}"
                        ))
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Applies the CLI cap overrides to every solver entry.
    pub fn apply_caps(&mut self, cap_epochs: Option<usize>, cap_inner: Option<usize>) {
        for solver in &mut self.solvers {
            match solver {
                SolverConfig::Iapun { max_epochs, max_inner } => {
                    if cap_epochs.is_some() {
                        *max_epochs = cap_epochs;
                    }
                    if cap_inner.is_some() {
                        *max_inner = cap_inner;
                    }
                }
                SolverConfig::InexactAppa { max_outer } | SolverConfig::Gda { max_outer } => {
                    if cap_epochs.is_some() {
                        *max_outer = cap_epochs;
                    }
                }
            }
        }
    }
}
