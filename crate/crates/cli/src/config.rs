//! Run configuration: one TOML file with a block per subcommand. Every key
//! has a default, unknown keys are rejected, and command-line flags override
//! the file.

use std::path::{Path, PathBuf};

use psynet::dataset::{ColumnSchema, PreprocessOptions};
use psynet::idiographic::Weighting;
use psynet::recurrence::Norm;
use psynet::var::GimmeOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed; per-person streams are derived from it and the person id.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub input: Option<InputConfig>,
    pub preprocess: PreprocessOptions,
    pub ising: IsingConfig,
    pub ggm: GgmConfig,
    pub gvar: GvarConfig,
    pub mlvar: MlvarConfig,
    pub gimme: GimmeOptions,
    pub idio: IdioConfig,
    pub rqa: RqaConfig,
    pub rn: RnConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output_dir: PathBuf::from("psynet-out"),
            input: None,
            preprocess: PreprocessOptions::default(),
            ising: IsingConfig::default(),
            ggm: GgmConfig::default(),
            gvar: GvarConfig::default(),
            mlvar: MlvarConfig::default(),
            gimme: GimmeOptions::default(),
            idio: IdioConfig::default(),
            rqa: RqaConfig::default(),
            rn: RnConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default = "default_day")]
    pub day: String,
    #[serde(default = "default_beep")]
    pub beep: String,
    pub items: Vec<String>,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_id() -> String {
    "id".into()
}

fn default_day() -> String {
    "day".into()
}

fn default_beep() -> String {
    "beep".into()
}

fn default_delimiter() -> char {
    ','
}

impl InputConfig {
    pub fn schema(&self) -> ColumnSchema {
        let items: Vec<&str> = self.items.iter().map(String::as_str).collect();
        let mut schema = ColumnSchema::new(&self.id, &self.day, &self.beep, &items);
        schema.group = self.group.clone();
        schema.delimiter = self.delimiter;
        schema
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsingConfig {
    /// JSON file with `mu`, `sigma` and `coding`. Without it the model is
    /// fitted to the binary input items by pseudo-likelihood.
    pub params: Option<PathBuf>,
    /// L1 penalty for the pseudo-likelihood fit.
    pub penalty: f64,
    /// Diagonal shift for the MIRT bridge; `None` picks the smallest valid.
    pub shift: Option<f64>,
    /// Gauss–Hermite points per latent dimension.
    pub quad_points: usize,
    /// Gibbs draws compared against the exact pmf; 0 skips sampling.
    pub gibbs_samples: usize,
    pub gibbs_burn_in: usize,
}

impl Default for IsingConfig {
    fn default() -> Self {
        IsingConfig { params: None, penalty: 0.0, shift: None, quad_points: 40, gibbs_samples: 0, gibbs_burn_in: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GgmSource {
    /// Pooled covariance of the preprocessed input rows.
    Input,
    /// Implied covariance of a one-factor model.
    OneFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GgmConfig {
    pub source: GgmSource,
    /// Loadings of the one-factor source; residual variances are `1 − λ²`.
    pub loadings: Vec<f64>,
    /// Ridge added to the covariance diagonal before inversion.
    pub ridge: f64,
    /// Edges with `|ω|` at or below this value are left out of graph exports.
    pub edge_threshold: f64,
    /// `|ω|` above which an edge counts as present in the saturation report.
    pub saturation_tol: f64,
}

impl Default for GgmConfig {
    fn default() -> Self {
        GgmConfig {
            source: GgmSource::Input,
            loadings: vec![0.7; 6],
            ridge: 0.0,
            edge_threshold: 0.0,
            saturation_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GvarConfig {
    pub min_obs_per_variable: usize,
    /// Fix the temporal matrix at zero.
    pub force_zero_b: bool,
    pub edge_threshold: f64,
}

impl Default for GvarConfig {
    fn default() -> Self {
        GvarConfig { min_obs_per_variable: 3, force_zero_b: false, edge_threshold: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlvarConfig {
    pub min_obs_per_variable: usize,
    pub edge_threshold: f64,
}

impl Default for MlvarConfig {
    fn default() -> Self {
        MlvarConfig { min_obs_per_variable: 3, edge_threshold: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdioConfig {
    /// JSON topology file; otherwise a uniform topology on `p` nodes.
    pub topology: Option<PathBuf>,
    pub p: usize,
    pub theta: f64,
    /// Main effects; empty means all zero.
    pub mu: Vec<f64>,
    pub weighting: Weighting,
    /// Monte-Carlo draws in addition to exact enumeration; 0 skips them.
    pub draws: usize,
}

impl Default for IdioConfig {
    fn default() -> Self {
        IdioConfig { topology: None, p: 3, theta: 0.4, mu: Vec::new(), weighting: Weighting::RandomCluster, draws: 0 }
    }
}

/// Recurrence threshold (a fixed `epsilon` or one tuned per person to
/// `target_rr`), line-length minima and delay embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RqaConfig {
    pub epsilon: Option<f64>,
    pub target_rr: f64,
    pub norm: Norm,
    pub l_min: usize,
    pub v_min: usize,
    pub theiler: usize,
    /// Delay embedding for single-item input; dimension 1 disables it.
    pub embed_dimension: usize,
    pub embed_delay: usize,
}

impl Default for RqaConfig {
    fn default() -> Self {
        RqaConfig {
            epsilon: None,
            target_rr: 0.1,
            norm: Norm::Euclidean,
            l_min: 2,
            v_min: 2,
            theiler: 1,
            embed_dimension: 1,
            embed_delay: 1,
        }
    }
}

/// Recurrence threshold and delay embedding for `rn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RnConfig {
    pub epsilon: Option<f64>,
    pub target_rr: f64,
    pub norm: Norm,
    pub embed_dimension: usize,
    pub embed_delay: usize,
}

impl Default for RnConfig {
    fn default() -> Self {
        RnConfig { epsilon: None, target_rr: 0.1, norm: Norm::Euclidean, embed_dimension: 1, embed_delay: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimModel {
    Gvar,
    Usem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub model: SimModel,
    pub persons: usize,
    pub t: usize,
    /// Beeps per day in the written `day`/`beep` columns.
    pub beeps_per_day: usize,
    /// Temporal matrix `B[to][from]` (gVAR) or `Φ` (uSEM).
    pub temporal: Vec<Vec<f64>>,
    /// Residual covariance (gVAR) or contemporaneous `A[to][from]` (uSEM).
    pub contemporaneous: Vec<Vec<f64>>,
    /// Standard deviation of the person means (gVAR).
    pub mean_sd: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            model: SimModel::Gvar,
            persons: 5,
            t: 200,
            beeps_per_day: 10,
            temporal: vec![vec![0.3, 0.0, 0.0], vec![0.2, 0.3, 0.0], vec![0.0, -0.2, 0.3]],
            contemporaneous: vec![vec![1.0, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 1.0]],
            mean_sd: 1.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    /// Makes relative file references of the config relative to `base`, the
    /// directory holding the config file. The output directory stays relative
    /// to the working directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(input) = &mut self.input {
            fix(&mut input.path);
        }
        if let Some(p) = &mut self.ising.params {
            fix(p);
        }
        if let Some(p) = &mut self.idio.topology {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn input(&self) -> Result<&InputConfig, CliError> {
        self.input
            .as_ref()
            .ok_or_else(|| CliError::validation("config", "this subcommand needs an [input] block or --input"))
    }
}
