use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{DesignFamily, DesignSpec};

/// How nonzero coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaGenerator {
    /// `U[a, e]` for each `e` in the config's `e_grid`.
    Uniform { a: f64 },
    /// `|z| + 2` with `z ~ N(0, 1)`.
    Shifted,
}

/// Screened-model size used by the comparison and text studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DRule {
    TwoN,
    NOverLogp,
    SqrtN,
    Explicit(usize),
}

impl DRule {
    pub fn resolve(self, n: usize, p: usize) -> Result<usize> {
        let d = match self {
            DRule::TwoN => 2 * n,
            DRule::NOverLogp => crate::bounds::d_simple_n_over_logp(n, p)?,
            DRule::SqrtN => crate::bounds::d_sqrt_n(n),
            DRule::Explicit(d) => d,
        };
        if d == 0 {
            return Err(Error::invalid("screened model size must be positive"));
        }
        Ok(d.min(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentConfig {
    pub corpus_dir: PathBuf,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_train")]
    pub train_per_bin: usize,
    #[serde(default = "default_test")]
    pub test_per_bin: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_cv_lambdas")]
    pub cv_lambdas: usize,
    /// Smallest CV λ as a fraction of `λ_max`.
    #[serde(default = "default_cv_ratio")]
    pub cv_min_ratio: f64,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub smooth_idf: bool,
    #[serde(default = "default_corr_threshold")]
    pub corr_threshold: f64,
    /// Coordinate-descent tolerance for cross-validation and final fits,
    /// relative to the norm of the centered response.
    #[serde(default = "default_fit_tol")]
    pub tol: f64,
    #[serde(default = "default_fit_max_iters")]
    pub max_iters: usize,
}

impl SentimentConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>) -> Self {
        SentimentConfig {
            corpus_dir: corpus_dir.into(),
            bins: default_bins(),
            train_per_bin: default_train(),
            test_per_bin: default_test(),
            folds: default_folds(),
            cv_lambdas: default_cv_lambdas(),
            cv_min_ratio: default_cv_ratio(),
            min_df: default_min_df(),
            smooth_idf: false,
            corr_threshold: default_corr_threshold(),
            tol: default_fit_tol(),
            max_iters: default_fit_max_iters(),
        }
    }
}

fn default_bins() -> usize {
    2
}
fn default_train() -> usize {
    150
}
fn default_test() -> usize {
    100
}
fn default_folds() -> usize {
    5
}
fn default_cv_lambdas() -> usize {
    50
}
fn default_cv_ratio() -> f64 {
    1e-3
}
fn default_min_df() -> usize {
    crate::text::DEFAULT_MIN_DF
}
fn default_corr_threshold() -> f64 {
    0.95
}
fn default_fit_tol() -> f64 {
    1e-4
}
fn default_fit_max_iters() -> usize {
    10_000
}
fn default_trials() -> usize {
    100
}
fn default_mu_tolerance() -> f64 {
    0.01
}
fn default_lambda_grid_size() -> usize {
    200
}
fn default_alphas() -> Vec<f64> {
    vec![1.0, 0.5]
}
fn default_d_rule() -> DRule {
    DRule::TwoN
}
fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}
fn default_design() -> DesignSpec {
    DesignSpec::gaussian(200, 2000)
}
fn default_k() -> usize {
    5
}
fn default_beta_gen() -> BetaGenerator {
    BetaGenerator::Shifted
}

/// One experiment run, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Unset means a seed is drawn when the run starts.
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "default_design")]
    pub design: DesignSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_beta_gen")]
    pub beta_gen: BetaGenerator,
    #[serde(default)]
    pub mu_grid: Vec<f64>,
    #[serde(default)]
    pub e_grid: Vec<f64>,
    #[serde(default = "default_mu_tolerance")]
    pub mu_tolerance: f64,
    #[serde(default = "default_lambda_grid_size")]
    pub lambda_grid_size: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_d_rule")]
    pub d_rule: DRule,
    /// Also solve the regularization path to audit the rules.
    #[serde(default)]
    pub solve_path: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sentiment: Option<SentimentConfig>,
}

impl ExperimentConfig {
    /// Minimum-model-size study: `n = 500`, `p = 2000`, `k = 5`, `σ = 0`,
    /// `β ~ U[1, e]` for `e ∈ {2, 10}`.
    pub fn oracle_mms() -> Self {
        ExperimentConfig {
            name: "oracle_mms".into(),
            trials: 400,
            master_seed: None,
            design: DesignSpec::gaussian(500, 2000),
            k: 5,
            sigma: 0.0,
            beta_gen: BetaGenerator::Uniform { a: 1.0 },
            mu_grid: (0..8).map(|i| 0.05 + 0.1 * i as f64).collect(),
            e_grid: vec![2.0, 10.0],
            mu_tolerance: default_mu_tolerance(),
            lambda_grid_size: default_lambda_grid_size(),
            alphas: default_alphas(),
            d_rule: DRule::TwoN,
            solve_path: false,
            output_dir: default_output_dir(),
            sentiment: None,
        }
    }

    /// Screening comparison: `n = 200`, `k = 5`, `β = |z| + 2`, unit noise.
    pub fn compare(p: usize, rho: f64) -> Self {
        let design = if rho == 0.0 {
            DesignSpec::gaussian(200, p)
        } else {
            DesignSpec::equicorrelated(200, p, rho)
        };
        ExperimentConfig {
            name: format!("compare_p{p}_rho{rho}"),
            trials: 100,
            design,
            sigma: 1.0,
            beta_gen: BetaGenerator::Shifted,
            mu_grid: Vec::new(),
            e_grid: Vec::new(),
            ..Self::oracle_mms()
        }
    }

    pub fn sentiment(corpus_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            name: "sentiment".into(),
            trials: 1,
            sentiment: Some(SentimentConfig::new(corpus_dir)),
            ..Self::compare(2000, 0.0)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|err| Error::Parse {
            path: path.to_path_buf(),
            message: err.to_string(),
        })?;
        Ok(config)
    }

    /// Checks what every experiment needs; each run adds its own checks.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid(format!("experiment name {:?} is not a valid file stem", self.name)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be finite and nonnegative, got {}", self.sigma)));
        }
        if self.design.family == DesignFamily::EquicorrelatedGaussian && self.design.rho == 0.0 {
            log::debug!("equicorrelated design with rho = 0 is plain Gaussian");
        }
        self.design.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let config = ExperimentConfig::oracle_mms();
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), config);

        let minimal: ExperimentConfig = serde_json::from_str(r#"{"name": "x", "d_rule": {"explicit": 40}}"#).unwrap();
        assert_eq!(minimal.trials, 100);
        assert_eq!(minimal.d_rule, DRule::Explicit(40));
        assert_eq!(minimal.beta_gen, BetaGenerator::Shifted);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"name": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn grid_matches_figure_axis() {
        let grid = ExperimentConfig::oracle_mms().mu_grid;
        assert_eq!(grid.len(), 8);
        assert!((grid[7] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn d_rules() {
        assert_eq!(DRule::TwoN.resolve(200, 2000).unwrap(), 400);
        assert_eq!(DRule::NOverLogp.resolve(500, 2000).unwrap(), 66);
        assert_eq!(DRule::SqrtN.resolve(500, 2000).unwrap(), 23);
        assert_eq!(DRule::TwoN.resolve(200, 300).unwrap(), 300);
        assert!(DRule::Explicit(0).resolve(10, 20).is_err());
    }
}
