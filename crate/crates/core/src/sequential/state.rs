use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::blocks::StepLayout;
use crate::error::{Error, Result};
use crate::transport::{MonotoneTriangularMap, Transport};
use crate::variational::FitReport;

/// Current on-disk format.
pub const FORMAT_VERSION: u32 = 1;

/// What the coordinates of the step maps represent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    /// States `z_0, z_1, …` with optional static parameters.
    #[default]
    Smoothing,
    /// `z_0` plays the role of the static parameter; step maps cover
    /// `(z_0, z_{i+1}, z_{i+2})`.
    FixedPoint,
}

/// One fitted (or closed-form) step map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub map: Transport,
    #[serde(with = "crate::variational::float_text")]
    pub log_c: f64,
    /// Absent for closed-form steps.
    #[serde(default)]
    pub report: Option<FitReport>,
    /// Running parameter map after this step.
    #[serde(default)]
    pub param_map: Option<MonotoneTriangularMap>,
    #[serde(default)]
    pub regression_residual: Option<f64>,
}

impl StepRecord {
    pub fn variance_diagnostic(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.variance_diagnostic)
    }
}

/// Why assimilation stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub reason: String,
}

/// Fitted step maps plus the data they were fitted to.
#[derive(Clone, Debug, PartialEq)]
pub struct SmootherState {
    pub kind: StateKind,
    /// Dimension of each state `z_k`.
    pub state_dim: usize,
    /// Dimension of the static parameter block of the step maps.
    pub param_dim: usize,
    pub closed_form: bool,
    /// Observations consumed so far, one row per time index.
    pub observations: Vec<Vec<f64>>,
    pub steps: Vec<StepRecord>,
    pub failure: Option<StepFailure>,
}

impl SmootherState {
    pub fn new(kind: StateKind, state_dim: usize, param_dim: usize, closed_form: bool) -> Self {
        Self { kind, state_dim, param_dim, closed_form, observations: vec![], steps: vec![], failure: None }
    }

    pub fn layout(&self) -> StepLayout {
        StepLayout::new(self.state_dim, self.param_dim)
    }

    pub fn log_c(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.log_c).collect()
    }

    /// Log model evidence, the sum of the per-step `log c_i`.
    pub fn evidence(&self) -> f64 {
        self.steps.iter().map(|s| s.log_c).sum()
    }

    pub fn variance_diagnostics(&self) -> Vec<Option<f64>> {
        self.steps.iter().map(StepRecord::variance_diagnostic).collect()
    }

    pub(crate) fn require_steps(&self) -> Result<usize> {
        if self.steps.is_empty() {
            return Err(Error::Sequencing("no step maps have been fitted".into()));
        }
        Ok(self.steps.len() - 1)
    }

    /// Writes `manifest.json` and one `step_XXXX.json` per step into `dir`.
    /// Step files whose bytes are unchanged are left untouched.
    pub fn save(&self, dir: &Path, model_hash: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, s) in self.steps.iter().enumerate() {
            let path = dir.join(step_file(i));
            let text = serde_json::to_string_pretty(s)?;
            if fs::read(&path).ok().as_deref() != Some(text.as_bytes()) {
                fs::write(&path, text)?;
            }
        }
        let manifest = Manifest::from_state(self, model_hash);
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reads a state directory, checking its integrity against the manifest.
    pub fn load(dir: &Path) -> Result<(Self, Manifest)> {
        let text = fs::read_to_string(dir.join("manifest.json"))
            .map_err(|e| Error::Checkpoint(format!("cannot read manifest in {}: {e}", dir.display())))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("corrupt manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {}", manifest.format_version)));
        }
        if manifest.log_c.len() != manifest.steps {
            return Err(Error::Checkpoint("manifest step count and log_c length differ".into()));
        }
        let mut steps = Vec::with_capacity(manifest.steps);
        for i in 0..manifest.steps {
            let path = dir.join(step_file(i));
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::Checkpoint(format!("missing step checkpoint {}: {e}", path.display())))?;
            let s: StepRecord = serde_json::from_str(&text)
                .map_err(|e| Error::Checkpoint(format!("corrupt step checkpoint {}: {e}", path.display())))?;
            if s.log_c.to_bits() != manifest.log_c[i].to_bits() && !(s.log_c.is_nan() && manifest.log_c[i].is_nan()) {
                return Err(Error::Checkpoint(format!("step {i} does not match the manifest")));
            }
            let dim = crate::transport::TransportMap::dim(&s.map);
            if dim != StepLayout::new(manifest.state_dim, manifest.param_dim).dim() {
                return Err(Error::Checkpoint(format!("step {i} has dimension {dim}")));
            }
            steps.push(s);
        }
        let state = Self {
            kind: manifest.kind,
            state_dim: manifest.state_dim,
            param_dim: manifest.param_dim,
            closed_form: manifest.closed_form,
            observations: manifest.observations.clone(),
            steps,
            failure: manifest.failure.clone(),
        };
        Ok((state, manifest))
    }
}

/// File name of step `i`.
pub fn step_file(i: usize) -> String {
    format!("step_{i:04}.json")
}

/// Summary written next to the step checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub model_hash: String,
    pub kind: StateKind,
    pub state_dim: usize,
    pub param_dim: usize,
    pub closed_form: bool,
    pub steps: usize,
    pub observations_used: usize,
    pub observations: Vec<Vec<f64>>,
    #[serde(with = "float_list")]
    pub log_c: Vec<f64>,
    pub variance_diagnostics: Vec<Option<f64>>,
    #[serde(with = "crate::variational::float_text")]
    pub log_evidence: f64,
    pub failure: Option<StepFailure>,
}

impl Manifest {
    pub fn from_state(s: &SmootherState, model_hash: &str) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model_hash: model_hash.to_string(),
            kind: s.kind,
            state_dim: s.state_dim,
            param_dim: s.param_dim,
            closed_form: s.closed_form,
            steps: s.steps.len(),
            observations_used: s.observations.len(),
            observations: s.observations.clone(),
            log_c: s.log_c(),
            variance_diagnostics: s.variance_diagnostics().into_iter().map(|v| v.filter(|x| x.is_finite())).collect(),
            log_evidence: s.evidence(),
            failure: s.failure.clone(),
        }
    }
}

mod float_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct F(#[serde(with = "crate::variational::float_text")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| F(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<F>::deserialize(d)?.into_iter().map(|f| f.0).collect())
    }
}
