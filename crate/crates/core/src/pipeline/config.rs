use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::corpus::DEFAULT_TRAIN_RATIO;
use crate::eval::{SynthConfig, Variant};
use crate::fusion::RegressorConfig;
use crate::spatial::{SdneConfig, DEFAULT_RADIUS_KM};
use crate::text::CbowConfig;

/// Raw data locations. When all are absent the pipeline generates a
/// synthetic dataset under `<out_dir>/data/`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub listings: Option<PathBuf>,
    pub reviews: Option<PathBuf>,
    pub pois: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_ratio: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_ratio: DEFAULT_TRAIN_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    /// Lasso with temporal k-fold cross-validation over an alpha grid.
    LassoCv,
    /// The `top_k` columns with the smallest univariate slope p-values.
    Pvalue,
    /// Exactly the configured `columns`.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoConfig {
    pub method: SelectionMethod,
    pub folds: usize,
    pub n_alphas: usize,
    /// Smallest alpha as a fraction of the largest.
    pub alpha_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub top_k: usize,
    pub columns: Vec<String>,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            method: SelectionMethod::LassoCv,
            folds: 5,
            n_alphas: 50,
            alpha_ratio: 1e-4,
            tol: 1e-6,
            max_iter: 10_000,
            top_k: 10,
            columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbConfig {
    /// Laplace smoothing constant.
    pub smoothing: f64,
    /// Labeled `pos|neg<TAB>text` file; the bundled seed corpus when absent.
    pub corpus: Option<PathBuf>,
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig {
            smoothing: 1.0,
            corpus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    pub radius_km: f64,
    pub sdne: SdneConfig,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            radius_km: DEFAULT_RADIUS_KM,
            sdne: SdneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            variants: Variant::ALL.to_vec(),
        }
    }
}

/// Complete pipeline configuration. Every block has defaults, so `{}` runs
/// end to end on synthetic data. The `seed` fields inside blocks are
/// replaced by seeds derived from the global `seed` and the stage name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub input: InputConfig,
    pub split: SplitConfig,
    pub lasso: LassoConfig,
    pub cbow: CbowConfig,
    pub nb: NbConfig,
    pub spatial: SpatialConfig,
    pub regressor: RegressorConfig,
    pub ablation: AblationConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out_dir: None,
            input: InputConfig::default(),
            split: SplitConfig::default(),
            lasso: LassoConfig::default(),
            cbow: CbowConfig::default(),
            nb: NbConfig::default(),
            spatial: SpatialConfig::default(),
            regressor: RegressorConfig::default(),
            ablation: AblationConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig, PipelineError> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let given = [&self.input.listings, &self.input.reviews, &self.input.pois]
            .iter()
            .filter(|p| p.is_some())
            .count();
        if given != 0 && given != 3 {
            return bad("input.listings, input.reviews and input.pois must be given together".into());
        }
        if !(self.split.train_ratio > 0.0 && self.split.train_ratio < 1.0) {
            return bad("split.train_ratio must lie in (0, 1)".into());
        }
        if self.lasso.method == SelectionMethod::Manual && self.lasso.columns.is_empty() {
            return bad("lasso.columns must list at least one column for the manual method".into());
        }
        if self.lasso.folds < 2 || self.lasso.n_alphas == 0 || !(self.lasso.alpha_ratio > 0.0 && self.lasso.alpha_ratio < 1.0)
        {
            return bad("lasso needs folds ≥ 2, n_alphas ≥ 1 and alpha_ratio in (0, 1)".into());
        }
        if !(self.nb.smoothing > 0.0) {
            return bad("nb.smoothing must be positive".into());
        }
        if !(self.spatial.radius_km > 0.0) {
            return bad("spatial.radius_km must be positive".into());
        }
        if self.ablation.variants.is_empty() {
            return bad("ablation.variants must not be empty".into());
        }
        self.synth.validate().map_err(|m| PipelineError::Config(format!("synth: {m}")))?;
        self.spatial
            .sdne
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.regressor
            .train_config()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn uses_synthetic_data(&self) -> bool {
        self.input.listings.is_none()
    }

    /// SHA-256 of the canonical JSON with `out_dir` removed, so the hash is
    /// independent of where artifacts are written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
