//! Experiment configuration: a TOML file with fixed sections, unknown keys
//! rejected, and `section.key=value` overrides applied before validation.

use std::path::{Path, PathBuf};

use hsm::exact::QuadratureSpec;
use hsm::mcmc::RunSpec;
use hsm::{Boundary, Lattice, ModelParams, PinningScheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Optional; must equal `extents.len()` when given.
    pub d: Option<usize>,
    pub extents: Vec<usize>,
    #[serde(default)]
    pub bc: BoundaryKind,
    pub beta: f64,
    pub pinning: PinningSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Neumann,
    Periodic,
}

/// Sites are given by lattice coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PinningSection {
    Uniform { eps: f64 },
    TwoPoint { x: Vec<usize>, eps_x: f64, y: Vec<usize>, eps_y: f64 },
    Single { site: Vec<usize>, eps: f64 },
    /// One value per site in row-major order.
    Custom { eps: Vec<f64> },
    /// `sample` only: one two-point run per site `y`, pinned at `origin` and `y`.
    TwoPointSweep { origin: Vec<usize>, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    /// Defaults to a tenth of `sweeps`.
    pub burn_in: Option<usize>,
    #[serde(default = "default_sigma")]
    pub proposal_sigma: f64,
    #[serde(default = "default_true")]
    pub tune: bool,
}

fn default_chains() -> usize {
    4
}
fn default_sweeps() -> usize {
    20_000
}
fn default_sigma() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            chains: default_chains(),
            sweeps: default_sweeps(),
            burn_in: None,
            proposal_sigma: default_sigma(),
            tune: true,
        }
    }
}

/// Any grid field left out is chosen automatically from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(rename = "T")]
    pub truncation: Option<f64>,
    pub panels: Option<usize>,
    pub order: Option<usize>,
    /// Repeat every integral with twice the panels and report the change.
    #[serde(default = "default_true")]
    pub refine: bool,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection { truncation: None, panels: None, order: None, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: default_directory(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// `bounds` subcommand inputs; default to the model's dimension and `β`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// Overrides the envelope prefactor used by `sample`.
    pub c0: Option<f64>,
    pub dims: Option<Vec<usize>>,
    pub betas: Option<Vec<f64>>,
}

/// Parse TOML text, apply `key=value` overrides and validate.
pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, overrides)
}

/// `a.b.c=value`; the value is read as a TOML value, or as a string if it does
/// not parse as one.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override `{item}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("override key `{key}` is malformed")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override `{key}`: `{p}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if let Some(d) = m.d {
            if d != m.extents.len() {
                return Err(CliError::Validation(format!(
                    "model.d = {d} does not match {} extents",
                    m.extents.len()
                )));
            }
        }
        if !(m.beta > 0.0 && m.beta.is_finite()) {
            return Err(CliError::Validation(format!("model.beta must be positive and finite, got {}", m.beta)));
        }
        let lattice = self.lattice()?;
        match &m.pinning {
            PinningSection::TwoPointSweep { origin, eps } => {
                lattice.index(origin)?;
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(CliError::Validation("model.pinning.eps must be positive".into()));
                }
            }
            _ => {
                let params = self.params_for(&lattice)?;
                if !params.has_pinning() {
                    return Err(CliError::Validation(
                        "model.pinning: at least one eps must be positive (eps = 0 everywhere leaves the measure unnormalizable)"
                            .into(),
                    ));
                }
            }
        }
        let r = &self.run;
        if r.chains == 0 {
            return Err(CliError::Validation("run.chains must be at least 1".into()));
        }
        if self.burn_in() >= r.sweeps {
            return Err(CliError::Validation(format!(
                "run.burn_in ({}) must be smaller than run.sweeps ({})",
                self.burn_in(),
                r.sweeps
            )));
        }
        if !(r.proposal_sigma > 0.0 && r.proposal_sigma.is_finite()) {
            return Err(CliError::Validation("run.proposal_sigma must be positive".into()));
        }
        if let Some(betas) = &self.bounds.betas {
            if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                return Err(CliError::Validation("bounds.betas must be a non-empty list of positive values".into()));
            }
        }
        if let Some(c0) = self.bounds.c0 {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(CliError::Validation(format!("bounds.c0 must be positive and finite, got {c0}")));
            }
        }
        if let Some(dims) = &self.bounds.dims {
            if dims.is_empty() || dims.contains(&0) {
                return Err(CliError::Validation("bounds.dims must be a non-empty list of positive values".into()));
            }
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Validation("output.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        let bc = match self.model.bc {
            BoundaryKind::Neumann => Boundary::Neumann,
            BoundaryKind::Periodic => Boundary::Periodic,
        };
        Ok(Lattice::new(&self.model.extents, bc)?)
    }

    fn params_for(&self, lattice: &Lattice) -> Result<ModelParams, CliError> {
        let pinning = match &self.model.pinning {
            PinningSection::Uniform { eps } => PinningScheme::Uniform { eps: *eps },
            PinningSection::TwoPoint { x, eps_x, y, eps_y } => PinningScheme::TwoPoint {
                x: lattice.index(x)?,
                eps_x: *eps_x,
                y: lattice.index(y)?,
                eps_y: *eps_y,
            },
            PinningSection::Single { site, eps } => PinningScheme::Single { site: lattice.index(site)?, eps: *eps },
            PinningSection::Custom { eps } => PinningScheme::Custom(eps.clone()),
            PinningSection::TwoPointSweep { .. } => {
                return Err(CliError::Validation(
                    "pinning mode two_point_sweep is only valid for the sample command".into(),
                ))
            }
        };
        Ok(ModelParams::new(self.model.beta, lattice.clone(), pinning)?)
    }

    /// Model parameters; fails for the sweep pinning mode.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.params_for(&self.lattice()?)
    }

    pub fn burn_in(&self) -> usize {
        self.run.burn_in.unwrap_or(self.run.sweeps / 10)
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            n_sweeps: self.run.sweeps,
            burn_in: self.burn_in(),
            n_chains: self.run.chains,
            seed: self.run.seed,
            proposal_sigma: self.run.proposal_sigma,
            tune: self.run.tune,
        }
    }

    /// Quadrature grid: configured values override the automatic choice.
    pub fn quadrature_spec(&self, params: &ModelParams) -> Result<QuadratureSpec, CliError> {
        let auto = QuadratureSpec::for_model(params);
        let q = &self.quadrature;
        Ok(QuadratureSpec::new(
            q.truncation.unwrap_or(auto.truncation),
            q.panels.unwrap_or(auto.panels),
            q.order.unwrap_or(auto.order),
        )?)
    }

    /// First 16 hex digits of the SHA-256 of the effective configuration. The
    /// output directory is left out: it does not change any result.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.directory = PathBuf::new();
        crate::output::hash_of(&canonical)
    }
}
