//! Run configuration: a TOML file, overridden key by key from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Subcommand to run when invoked as `pdm run`.
    pub scenario: Option<String>,
    pub mass: MassConfig,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub pairs: PairsConfig,
    pub em: EmConfig,
    pub gauge: GaugeConfig,
    pub classical: ClassicalConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MassConfig {
    /// A named 1D profile: `unit`, `constant`, `inverse-quartic`,
    /// `gaussian`, `quadratic`.
    Profile {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// A radial generating pair from the catalog.
    Catalog {
        tag: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default = "default_dof")]
        dof: u32,
    },
    /// Two-column table `x,m`.
    Csv {
        path: PathBuf,
        #[serde(default)]
        radial: bool,
    },
}

fn default_dof() -> u32 {
    3
}

impl Default for MassConfig {
    fn default() -> Self {
        MassConfig::Profile {
            name: "quadratic".into(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialTag {
    Harmonic,
    Box,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    Q,
    X,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub tag: PotentialTag,
    /// `V = k (q − centre)²` for `harmonic`.
    pub k: f64,
    pub centre: f64,
    /// Which coordinate `V` is written in.
    pub coordinate: Coordinate,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            tag: PotentialTag::Harmonic,
            k: 1.0,
            centre: 0.0,
            coordinate: Coordinate::Q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            min: -6.0,
            max: 6.0,
            n: 2001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub k: usize,
    pub tol: f64,
    pub richardson: bool,
    /// Von Roos `α`, `β`; `γ = −1 − α − β`.
    pub alpha: f64,
    pub beta: f64,
    pub anchor_x: f64,
    /// Defaults to on for confining potentials, off for `box`/`none`.
    pub require_confinement: Option<bool>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 5,
            tol: 1e-3,
            richardson: false,
            alpha: -0.25,
            beta: -0.5,
            anchor_x: 0.0,
            require_confinement: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairsConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub tol: f64,
    pub dof: u32,
}

impl Default for PairsConfig {
    fn default() -> Self {
        PairsConfig {
            r_min: 0.1,
            r_max: 10.0,
            n: 991,
            tol: 1e-8,
            dof: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmConfig {
    pub family: pdm_core::GaugeFamily,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "E0_field")]
    pub e0_field: f64,
    pub e: f64,
    pub k1: f64,
    pub k3: f64,
    /// Levels `n = 0..levels`.
    pub levels: usize,
    pub n: usize,
    pub richardson: bool,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            family: pdm_core::GaugeFamily::Symmetric,
            b0: 1.0,
            e0_field: 0.0,
            e: 1.0,
            k1: 0.0,
            k3: 0.0,
            levels: 6,
            n: 4001,
            richardson: true,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeConfig {
    pub points: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub seed: u64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            points: 100,
            r_min: 0.5,
            r_max: 5.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalMode {
    Trajectory,
    Equivalence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalConfig {
    pub mode: ClassicalMode,
    pub x0: f64,
    pub v0: f64,
    pub dt: f64,
    pub steps: usize,
    pub scheme: pdm_core::Scheme,
    pub m0: f64,
    /// Keep every `record_every`-th sample in the output.
    pub record_every: usize,
    pub drift_tol: f64,
    pub equivalence_tol: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            mode: ClassicalMode::Trajectory,
            x0: 0.5,
            v0: 0.0,
            dt: 1e-4,
            steps: 31_416,
            scheme: pdm_core::Scheme::Rk4,
            m0: 0.5,
            record_every: 100,
            drift_tol: 1e-8,
            equivalence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Artifact path; stdout when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            format: Format::Json,
        }
    }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value` to a TOML table, creating tables on the way.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override '{assignment}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("bad override key '{key}'")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override key '{key}': '{part}' is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Reads `path` (if any), applies the overrides, and validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be positive, got {v}")))
    }
}

fn enough_points(name: &str, n: usize) -> CliResult<()> {
    if n >= MIN_GRID_POINTS {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{name} = {n}; need at least {MIN_GRID_POINTS} points"
        )))
    }
}

fn interval(name: &str, lo: f64, hi: f64) -> CliResult<()> {
    finite(&format!("{name} min"), lo)?;
    finite(&format!("{name} max"), hi)?;
    if hi > lo {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name}: max {hi} must exceed min {lo}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        interval("grid", self.grid.min, self.grid.max)?;
        enough_points("grid.n", self.grid.n)?;
        positive("solver.tol", self.solver.tol)?;
        if self.solver.k == 0 {
            return Err(CliError::Validation("solver.k must be at least 1".into()));
        }
        finite("solver.alpha", self.solver.alpha)?;
        finite("solver.beta", self.solver.beta)?;
        finite("solver.anchor_x", self.solver.anchor_x)?;
        finite("potential.k", self.potential.k)?;
        finite("potential.centre", self.potential.centre)?;
        match &self.mass {
            MassConfig::Profile { params, .. } | MassConfig::Catalog { params, .. } => {
                for (k, v) in params {
                    finite(&format!("mass.params.{k}"), *v)?;
                }
            }
            MassConfig::Csv { .. } => {}
        }
        interval("pairs", self.pairs.r_min, self.pairs.r_max)?;
        positive("pairs.r_min", self.pairs.r_min)?;
        enough_points("pairs.n", self.pairs.n)?;
        positive("pairs.tol", self.pairs.tol)?;
        for (name, v) in [
            ("em.B0", self.em.b0),
            ("em.E0_field", self.em.e0_field),
            ("em.e", self.em.e),
            ("em.k1", self.em.k1),
            ("em.k3", self.em.k3),
        ] {
            finite(name, v)?;
        }
        enough_points("em.n", self.em.n)?;
        positive("em.tol", self.em.tol)?;
        if self.em.levels == 0 {
            return Err(CliError::Validation("em.levels must be at least 1".into()));
        }
        interval("gauge", self.gauge.r_min, self.gauge.r_max)?;
        if self.gauge.r_min < 0.0 {
            return Err(CliError::Validation("gauge.r_min must be non-negative".into()));
        }
        finite("classical.x0", self.classical.x0)?;
        finite("classical.v0", self.classical.v0)?;
        positive("classical.dt", self.classical.dt)?;
        positive("classical.m0", self.classical.m0)?;
        positive("classical.drift_tol", self.classical.drift_tol)?;
        positive("classical.equivalence_tol", self.classical.equivalence_tol)?;
        if self.classical.steps == 0 || self.classical.record_every == 0 {
            return Err(CliError::Validation(
                "classical.steps and classical.record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
