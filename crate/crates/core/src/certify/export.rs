use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::constraints::{ConstraintSystem, RowViolation};
use super::cspop::{CspopProblem, SupportPattern};
use super::rspop::RspopProblem;
use super::{CertificateMode, CertificateTemplate};
use crate::error::{Error, Result};
use crate::order::{BoxRegion, RegionSpec};
use crate::partition::{CoverSets, GridPartition};
use crate::systems::{LipschitzBounds, PolicySpec, Trajectory};

/// Default tolerance for re-verifying stored coefficients.
pub const REVERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRef {
    /// Path relative to the certificate file.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Coefficients {
    pub fn from_packed(p: &[f64], n: usize) -> Self {
        Self {
            a: p[0],
            b: p[1..=n].to_vec(),
            c: p[n + 1..=2 * n].to_vec(),
        }
    }

    pub fn packed(&self) -> Vec<f64> {
        let mut p = vec![self.a];
        p.extend(&self.b);
        p.extend(&self.c);
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerExport {
    pub pattern: SupportPattern,
    /// Set when every cell shares one box.
    pub uniform: Option<BoxRegion>,
    /// Per-cell boxes by linear cell index otherwise.
    pub cells: Vec<(usize, BoxRegion)>,
}

/// Self-contained certificate: everything needed to rebuild and re-check
/// the constraint rows from the referenced trajectory files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub mode: CertificateMode,
    pub alpha: f64,
    pub delta_u: f64,
    pub coefficients: Coefficients,
    pub trajectories: Vec<TrajectoryRef>,
    pub lipschitz: Option<LipschitzBounds>,
    pub partition: GridPartition,
    pub initial_set: RegionSpec,
    pub unsafe_set: RegionSpec,
    pub input_set: Option<BoxRegion>,
    pub policies: Vec<PolicySpec>,
    pub controller: Option<ControllerExport>,
}

/// A certificate whose rows were rebuilt from data and satisfied.
#[derive(Clone, Debug)]
pub struct VerifiedCertificate {
    pub file: CertificateFile,
    pub template: CertificateTemplate,
    pub system: ConstraintSystem,
    pub max_violation: f64,
}

impl CertificateFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Reads, then re-verifies every row against the referenced data.
    pub fn load_verified(path: &Path, tol: f64) -> Result<VerifiedCertificate> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        file.verify(&base, tol)
    }

    fn load_trajectories(&self, base: &Path) -> Result<Vec<Arc<Trajectory>>> {
        self.trajectories
            .iter()
            .map(|r| {
                let p: PathBuf = base.join(&r.path);
                let tr = Trajectory::load(&p)?;
                let hash = tr.content_hash();
                if hash != r.sha256 {
                    return Err(Error::Rejected(format!(
                        "trajectory {} changed: hash {hash} does not match {}",
                        r.path, r.sha256
                    )));
                }
                Ok(Arc::new(tr))
            })
            .collect()
    }

    /// Rebuilds the constraint system from the referenced trajectories and
    /// checks the stored coefficients against every row.
    pub fn verify(&self, base: &Path, tol: f64) -> Result<VerifiedCertificate> {
        let trajs = self.load_trajectories(base)?;
        let n = trajs.len();
        if self.coefficients.b.len() != n || self.coefficients.c.len() != n {
            return Err(Error::Rejected(format!("coefficient vectors do not match {n} trajectories")));
        }
        let p = self.coefficients.packed();
        let covers = CoverSets::new(&self.partition, &self.initial_set, &self.unsafe_set)?;
        let (system, template) = match self.mode {
            CertificateMode::Robust => {
                let problem = RspopProblem::new(
                    &trajs,
                    self.lipschitz.as_ref(),
                    &self.partition,
                    &covers,
                    self.alpha,
                    self.delta_u,
                )?;
                (problem.assemble()?, problem.template.clone())
            }
            CertificateMode::Controlled => {
                let input_set = self
                    .input_set
                    .as_ref()
                    .ok_or_else(|| Error::Rejected("controlled certificate without input set".into()))?;
                let ctrl = self
                    .controller
                    .as_ref()
                    .ok_or_else(|| Error::Rejected("controlled certificate without pattern".into()))?;
                let policies = self
                    .policies
                    .iter()
                    .map(|s| s.build(input_set).map(Arc::new))
                    .collect::<Result<Vec<_>>>()?;
                let problem = CspopProblem::new(
                    &trajs,
                    &policies,
                    &self.partition,
                    &covers,
                    input_set,
                    self.alpha,
                    self.delta_u,
                )?;
                let report = problem.compatibility(&ctrl.pattern)?;
                if !report.compatible {
                    return Err(Error::Rejected(format!(
                        "policies are incompatible with pattern {} on {} cells",
                        ctrl.pattern, report.failing_count
                    )));
                }
                let cset = problem.controller_set(&ctrl.pattern)?;
                if cset.uniform_box() != ctrl.uniform.as_ref() {
                    return Err(Error::Rejected("stored controller boxes do not match the policies".into()));
                }
                (problem.assemble(&ctrl.pattern)?, problem.template(&ctrl.pattern)?)
            }
        };
        let violations: Vec<RowViolation> = system.verify(&p, tol);
        if let Some(worst) = violations
            .iter()
            .max_by(|a, b| a.amount.total_cmp(&b.amount))
        {
            return Err(Error::Rejected(format!(
                "{} constraint rows violated; worst is row {} ({:?}) by {:e}",
                violations.len(),
                worst.row,
                worst.family,
                worst.amount
            )));
        }
        let max_violation = system
            .rows
            .iter()
            .map(|r| r.violation(&p))
            .fold(f64::NEG_INFINITY, f64::max);
        let template = template.with_coefficients(&p).map_err(|e| Error::Rejected(e.to_string()))?;
        Ok(VerifiedCertificate {
            file: self.clone(),
            template,
            system,
            max_violation,
        })
    }
}
