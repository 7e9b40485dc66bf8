//! TOML run configuration.

use std::path::{Path, PathBuf};

use lowdim::models::{Banana, Gaussian, LinearGaussianSsm, StandardNormal, StochasticVolatility, SvParameters};
use lowdim::sequential::{AssimilationOptions, StateSpaceModel};
use lowdim::transport::{DiagBasis, LogDensity, MapTemplate, Rectifier};
use lowdim::variational::{FitOptions, Method, RuleKind};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for Monte Carlo rules and regression points.
    #[serde(default)]
    pub seed: u64,
    pub model: Option<ModelConfig>,
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub template: TemplateConfig,
    pub rule: Option<RuleKind>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    StochasticVolatility(SvParameters),
    LinearGaussian(LinearGaussianSsm),
}

/// Target densities for `fit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    StandardNormal {
        dim: usize,
    },
    Banana {
        #[serde(default = "one")]
        curvature: f64,
        #[serde(default = "half")]
        sigma: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    /// Joint posterior of the configured model given an observations file.
    Posterior {
        observations: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparsitySource {
    None,
    Auto,
    Graph(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    #[serde(default = "two")]
    pub degree: usize,
    #[serde(default)]
    pub rectifier: Rectifier,
    #[serde(default)]
    pub diag_basis: DiagBasis,
    #[serde(default = "no_sparsity")]
    pub sparsity: SparsitySource,
}

fn two() -> usize {
    2
}

fn no_sparsity() -> SparsitySource {
    SparsitySource::None
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            rectifier: Rectifier::default(),
            diag_basis: DiagBasis::default(),
            sparsity: SparsitySource::None,
        }
    }
}

impl TemplateConfig {
    pub fn template(&self) -> MapTemplate {
        MapTemplate::new(self.degree).with_rectifier(self.rectifier).with_diag_basis(self.diag_basis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "gtol")]
    pub gradient_tolerance: f64,
    #[serde(default = "max_iter")]
    pub max_iterations: usize,
}

fn gtol() -> f64 {
    FitOptions::default().gradient_tolerance
}

fn max_iter() -> usize {
    FitOptions::default().max_iterations
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { method: Method::default(), gradient_tolerance: gtol(), max_iterations: max_iter() }
    }
}

impl OptimizerConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            method: self.method,
            gradient_tolerance: self.gradient_tolerance,
            max_iterations: self.max_iterations,
            ..FitOptions::default()
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.template.degree == 0 {
            return Err("template degree must be at least 1".into());
        }
        if !(cfg.optimizer.gradient_tolerance > 0.0) {
            return Err("optimizer gradient_tolerance must be positive".into());
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model, CliError> {
        match &self.model {
            Some(ModelConfig::StochasticVolatility(p)) => Ok(Model::Sv(StochasticVolatility { parameters: *p })),
            Some(ModelConfig::LinearGaussian(m)) => Ok(Model::Lg(m.clone())),
            None => Err(CliError::Config("a [model] table is required".into())),
        }
    }

    pub fn assimilation_options(&self) -> AssimilationOptions {
        let mut opts = AssimilationOptions::new(self.template.template());
        opts.rule = self.rule;
        opts.seed = self.seed;
        opts.fit = self.optimizer.fit_options();
        opts
    }

    /// Fingerprint of everything that determines the fitted maps.
    pub fn model_hash(&self) -> String {
        let key = (&self.model, &self.template, &self.rule, &self.optimizer, self.seed);
        let text = serde_json::to_string(&key).expect("configuration serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A configured state-space model.
pub enum Model {
    Sv(StochasticVolatility),
    Lg(LinearGaussianSsm),
}

impl Model {
    pub fn as_dyn(&self) -> &dyn StateSpaceModel {
        match self {
            Model::Sv(m) => m,
            Model::Lg(m) => m,
        }
    }
}

/// Builds a `fit` target. `Posterior` targets need the model and observations.
pub fn build_target(cfg: &RunConfig, observations: Option<&[Vec<f64>]>) -> Result<Box<dyn LogDensity>, CliError> {
    match cfg.target.as_ref().ok_or_else(|| CliError::Config("a [target] table is required".into()))? {
        TargetConfig::StandardNormal { dim } => Ok(Box::new(StandardNormal { dim: *dim })),
        TargetConfig::Banana { curvature, sigma } => {
            if !(*sigma > 0.0) {
                return Err(CliError::Config("banana sigma must be positive".into()));
            }
            Ok(Box::new(Banana { curvature: *curvature, sigma: *sigma }))
        }
        TargetConfig::Gaussian { mean, covariance } => {
            let n = mean.len();
            if covariance.len() != n || covariance.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("covariance must be {n}×{n}")));
            }
            let cov = DMatrix::from_fn(n, n, |i, j| covariance[i][j]);
            Ok(Box::new(Gaussian::new(DVector::from_column_slice(mean), cov)?))
        }
        TargetConfig::Posterior { .. } => {
            let obs = observations.expect("observations are loaded for posterior targets");
            let model = cfg.model()?;
            Ok(Box::new(OwnedPosterior { model, observations: obs.to_vec() }))
        }
    }
}

struct OwnedPosterior {
    model: Model,
    observations: Vec<Vec<f64>>,
}

impl LogDensity for OwnedPosterior {
    fn dim(&self) -> usize {
        self.view().dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.view().log_density(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.view().gradient(x)
    }
}

impl OwnedPosterior {
    fn view(&self) -> lowdim::sequential::JointPosterior<'_> {
        lowdim::sequential::JointPosterior::new(self.model.as_dyn(), &self.observations)
    }
}
