//! Stage-by-stage orchestration with on-disk artifacts and a provenance
//! manifest. Each stage reads only files (raw inputs or earlier artifacts)
//! and writes only into the output directory; missing prerequisites are
//! produced first.

mod config;
mod manifest;
mod stages;

pub use config::{
    AblationConfig, InputConfig, LassoConfig, NbConfig, PipelineConfig, SelectionMethod, SpatialConfig, SplitConfig,
};
pub use manifest::{sha256_hex, FileRecord, Manifest, StageRecord, MANIFEST_FILE};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{CorpusError, PoiCategory};
use crate::eval::Variant;
use crate::fusion::FusionError;
use crate::nn::NnError;
use crate::sentiment::SentimentError;
use crate::spatial::SpatialError;
use crate::stats::StatsError;
use crate::text::TextError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl PipelineError {
    /// Process exit status: 1 configuration, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Numeric(_) => 3,
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<StatsError> for PipelineError {
    fn from(e: StatsError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<TextError> for PipelineError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::NonFinite { .. } => PipelineError::Numeric(e.to_string()),
            TextError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<SentimentError> for PipelineError {
    fn from(e: SentimentError) -> Self {
        match e {
            SentimentError::BadSmoothing(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<NnError> for PipelineError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NonFinite(_) => PipelineError::Numeric(e.to_string()),
            NnError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<SpatialError> for PipelineError {
    fn from(e: SpatialError) -> Self {
        match e {
            SpatialError::NonFinite { .. } => PipelineError::Numeric(e.to_string()),
            SpatialError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            SpatialError::Nn(inner) => inner.into(),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<FusionError> for PipelineError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::NonFinite { .. } => PipelineError::Numeric(e.to_string()),
            FusionError::Nn(inner) => inner.into(),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Ingest,
    Stats,
    SelectFeatures,
    TrainText,
    Sentiment,
    BuildGraphs,
    EmbedSpatial,
    Fuse,
    Train,
    Evaluate,
    Ablate,
    Predict,
}

pub const DATA_DIR: &str = "data";
pub const GRAPHS_DIR: &str = "graphs";

impl Stage {
    pub const ALL: [Stage; 13] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Stats,
        Stage::SelectFeatures,
        Stage::TrainText,
        Stage::Sentiment,
        Stage::BuildGraphs,
        Stage::EmbedSpatial,
        Stage::Fuse,
        Stage::Train,
        Stage::Evaluate,
        Stage::Ablate,
        Stage::Predict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Stats => "stats",
            Stage::SelectFeatures => "select-features",
            Stage::TrainText => "train-text",
            Stage::Sentiment => "sentiment",
            Stage::BuildGraphs => "build-graphs",
            Stage::EmbedSpatial => "embed-spatial",
            Stage::Fuse => "fuse",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Ablate => "ablate",
            Stage::Predict => "predict",
        }
    }

    fn prerequisites(self, synthetic: bool) -> Vec<Stage> {
        match self {
            Stage::Synth => vec![],
            Stage::Ingest if synthetic => vec![Stage::Synth],
            Stage::Ingest => vec![],
            Stage::Stats
            | Stage::SelectFeatures
            | Stage::TrainText
            | Stage::Sentiment
            | Stage::BuildGraphs
            | Stage::EmbedSpatial => vec![Stage::Ingest],
            Stage::Fuse => vec![
                Stage::SelectFeatures,
                Stage::TrainText,
                Stage::Sentiment,
                Stage::EmbedSpatial,
            ],
            Stage::Train | Stage::Ablate => vec![Stage::Fuse],
            Stage::Evaluate | Stage::Predict => vec![Stage::Train],
        }
    }

    /// Files (relative to the output directory) whose presence marks the
    /// stage as done.
    pub fn outputs(self) -> Vec<String> {
        let v = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            Stage::Synth => crate::eval::SYNTH_FILES
                .iter()
                .map(|f| format!("{DATA_DIR}/{f}"))
                .collect(),
            Stage::Ingest => v(&["split.csv", "ingest_report.json"]),
            Stage::Stats => v(&["dataset_summary.json"]),
            Stage::SelectFeatures => v(&[
                "lasso_model.json",
                "stat_features.tsv",
                "target.csv",
                "target_transform.json",
            ]),
            Stage::TrainText => v(&["word_vectors.tsv", "text_features.tsv", "cbow_report.json"]),
            Stage::Sentiment => v(&["sentiment.csv"]),
            Stage::BuildGraphs => {
                let mut out: Vec<String> = PoiCategory::ALL
                    .iter()
                    .map(|c| format!("{GRAPHS_DIR}/{}.tsv", c.slug()))
                    .collect();
                out.push("graph_summary.json".into());
                out
            }
            Stage::EmbedSpatial => v(&["spatial_features.tsv", "sdne_report.json"]),
            Stage::Fuse => v(&["fused.tsv", "fused_layout.json"]),
            Stage::Train => v(&["model.json", "loss_curve.csv"]),
            Stage::Evaluate => v(&["metrics.json"]),
            Stage::Ablate => v(&["ablation_report.csv", "ablation_report.json"]),
            Stage::Predict => v(&["predictions.csv"]),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// A configured pipeline bound to an output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    /// Feature blocks used by `train`, `evaluate` and `predict`.
    pub variant: Variant,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out_dir: impl Into<PathBuf>) -> Result<Pipeline, PipelineError> {
        config.validate()?;
        Ok(Pipeline {
            config,
            out_dir: out_dir.into(),
            variant: Variant::STP,
        })
    }

    pub fn with_variant(mut self, variant: Variant) -> Pipeline {
        self.variant = variant;
        self
    }

    pub fn out_path(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    fn is_done(&self, stage: Stage) -> bool {
        let files_present = stage.outputs().iter().all(|f| self.out_path(f).is_file());
        match stage {
            Stage::Train => files_present && stages::model_blocks_match(self),
            _ => files_present,
        }
    }

    /// Runs missing prerequisites, then `stage` itself.
    pub fn run(&self, stage: Stage) -> Result<(), PipelineError> {
        self.ensure_prerequisites(stage)?;
        self.execute(stage)
    }

    fn ensure_prerequisites(&self, stage: Stage) -> Result<(), PipelineError> {
        for dep in stage.prerequisites(self.config.uses_synthetic_data()) {
            if !self.is_done(dep) {
                self.run(dep)?;
            }
        }
        Ok(())
    }

    /// Every stage in order (`synth` only when no inputs are configured).
    pub fn run_all(&self) -> Result<(), PipelineError> {
        for stage in Stage::ALL {
            if stage == Stage::Synth && !self.config.uses_synthetic_data() {
                continue;
            }
            self.execute(stage)?;
        }
        Ok(())
    }

    fn execute(&self, stage: Stage) -> Result<(), PipelineError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let seed = crate::rng::derive_seed(self.config.seed, stage.name());
        let mut io = StageIo::new(&self.out_dir);
        let outcome = stages::execute(self, stage, seed, &mut io);
        if io.outputs.is_empty() {
            return outcome;
        }
        let mut manifest = Manifest::load(&self.out_dir);
        manifest.stages.insert(
            stage.name().to_string(),
            StageRecord {
                seed,
                config_hash: self.config.hash(),
                inputs: io.inputs,
                outputs: io.outputs,
            },
        );
        manifest.save(&self.out_dir)?;
        outcome
    }
}

/// Records every file a stage reads or writes.
pub(crate) struct StageIo<'a> {
    out_dir: &'a Path,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
}

impl<'a> StageIo<'a> {
    fn new(out_dir: &'a Path) -> Self {
        StageIo {
            out_dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn display(&self, path: &Path) -> String {
        path.strip_prefix(self.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    pub(crate) fn read(&mut self, path: &Path) -> Result<Vec<u8>, PipelineError> {
        let bytes = std::fs::read(path)
            .map_err(|e| PipelineError::Data(format!("cannot read {}: {e}", path.display())))?;
        let record = FileRecord {
            path: self.display(path),
            sha256: sha256_hex(&bytes),
        };
        if !self.inputs.contains(&record) {
            self.inputs.push(record);
        }
        Ok(bytes)
    }

    pub(crate) fn read_artifact(&mut self, rel: &str) -> Result<Vec<u8>, PipelineError> {
        let path = self.out_dir.join(rel);
        self.read(&path)
    }

    pub(crate) fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)
            .map_err(|e| PipelineError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(FileRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }
}
