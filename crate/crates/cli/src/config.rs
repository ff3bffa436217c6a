//! Run configuration: one TOML file per experiment. Relative paths are
//! resolved against the directory holding the file.

use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use monocert::certify::DEFAULT_DELTA_U;
use monocert::solver::LossSpec;
use monocert::systems::{PolicySpec, SystemSpec};
use monocert::{LipschitzBounds, DEFAULT_ALPHA};
use serde::Deserialize;

/// Numeric defaults, in one place.
pub mod defaults {
    pub const SEED: u64 = 0;
    pub const TAIL_WINDOW: usize = 50;
    pub const CAP: f64 = 1e3;
    pub const VALIDATION_RUNS: usize = 1000;
    pub const GRID_RESOLUTION: usize = 200;
    pub const AUDIT_PAIRS: usize = 1000;

    pub fn seed() -> u64 {
        SEED
    }
    pub fn tail_window() -> usize {
        TAIL_WINDOW
    }
    pub fn cap() -> f64 {
        CAP
    }
    pub fn alpha() -> f64 {
        super::DEFAULT_ALPHA
    }
    pub fn delta_u() -> f64 {
        super::DEFAULT_DELTA_U
    }
    pub fn runs() -> usize {
        VALIDATION_RUNS
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    #[default]
    Json,
    Csv,
}

impl DataFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub x0: Vec<f64>,
    /// Policy id for controlled systems.
    pub policy: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    #[serde(default = "defaults::tail_window")]
    pub tail_window: usize,
    pub runs: Vec<RunSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    /// Trajectory files; defaults to the outputs of `[simulate]`.
    pub trajectories: Option<Vec<PathBuf>>,
    pub width: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::delta_u")]
    pub delta_u: f64,
    pub loss: Option<LossSpec>,
    #[serde(default = "defaults::cap")]
    pub cap: f64,
    pub output: PathBuf,
    /// Required by `verify`; zero `d_w` declares disturbance-free data.
    pub lipschitz: Option<LipschitzBounds>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "defaults::runs")]
    pub runs: usize,
    pub horizon: usize,
    /// Nominal input for shield mode: projected onto the controller box.
    pub nominal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    pub system: SystemSpec,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub simulate: Option<SimulateSection>,
    pub certificate: Option<CertificateSection>,
    pub validation: Option<ValidationSection>,
}

/// A parsed configuration with the directory its paths are relative to.
pub struct Loaded {
    pub config: Config,
    pub base: PathBuf,
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            normalize(&self.base.join(p))
        }
    }

    pub fn simulate(&self) -> Result<&SimulateSection> {
        self.config
            .simulate
            .as_ref()
            .context("config has no [simulate] section")
    }

    pub fn certificate(&self) -> Result<&CertificateSection> {
        self.config
            .certificate
            .as_ref()
            .context("config has no [certificate] section")
    }

    /// Trajectory files as written in the config (relative to its directory).
    pub fn trajectory_paths(&self) -> Result<Vec<PathBuf>> {
        if let Some(list) = self.certificate().ok().and_then(|c| c.trajectories.clone()) {
            return Ok(list);
        }
        let sim = self
            .simulate()
            .context("certificate.trajectories is not set and there is no [simulate] section to derive it from")?;
        Ok(sim
            .runs
            .iter()
            .map(|r| sim.output_dir.join(format!("{}.{}", r.name, sim.format.extension())))
            .collect())
    }
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let de = toml::Deserializer::new(&text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("invalid config {}: at `{field}`: {}", path.display(), e.into_inner().message())
    })?;
    if let Some(c) = &config.certificate {
        if !(c.width > 0.0 && c.width.is_finite()) {
            bail!("invalid config {}: at `certificate.width`: must be positive", path.display());
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

/// Lexical normalization: drops `.` and folds `dir/..`.
pub fn normalize(p: &Path) -> PathBuf {
    let mut out: Vec<Component> = Vec::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.last(), Some(Component::Normal(_))) => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out.iter().collect()
}

/// Path of `target` relative to directory `from`; both relative to the same
/// base, or both absolute.
pub fn relative_to(target: &Path, from: &Path) -> PathBuf {
    let (target, from) = (normalize(target), normalize(from));
    let t: Vec<Component> = target.components().collect();
    let f: Vec<Component> = from.components().collect();
    let common = t.iter().zip(&f).take_while(|(a, b)| a == b).count();
    let mut out = PathBuf::new();
    for _ in common..f.len() {
        out.push("..");
    }
    for c in &t[common..] {
        out.push(c);
    }
    out
}
