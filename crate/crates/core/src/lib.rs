//! Multi-source information embedding for short-term rental price prediction.
//!
//! The pipeline turns three kinds of listing data into one feature matrix and
//! regresses the (log) nightly price on it:
//!
//! * statistical attributes, standardized and pruned with cross-validated Lasso ([`stats`]);
//! * free text: CBOW word vectors averaged per document, plus a naive-Bayes
//!   review sentiment score ([`text`], [`sentiment`]);
//! * location: per-category listing/POI proximity graphs embedded with a deep
//!   autoencoder ([`spatial`]).
//!
//! The blocks are fused and fed to a dense ReLU network ([`fusion`]) built on the
//! small training substrate in [`nn`]. [`eval`] holds the regression metrics,
//! the feature-block ablation and a seeded synthetic data generator, and
//! [`pipeline`] wires everything into reproducible, file-backed stages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod eval;
pub mod fusion;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod sentiment;
pub mod spatial;
pub mod stats;
pub mod text;
mod tsv;

pub use corpus::{
    DatasetSummary, ListingRecord, ListingTable, PoiCategory, PoiRecord, PoiTable, ReviewDoc,
    ReviewTable,
};
pub use eval::{MetricReport, SynthConfig, Variant};
pub use fusion::{FeatureBundle, PriceModel};
pub use pipeline::{Pipeline, PipelineConfig, PipelineError, Stage};
pub use nn::{Activation, DenseLayer, DenseNet, TrainConfig};
pub use sentiment::{NbModel, SentimentVector};
pub use spatial::{GeoPoint, SpatialFeatures, SpatialGraph};
pub use stats::{LassoModel, StandardScaler, StatFeatureMatrix};
pub use text::{TextFeatures, Vocab, WordVectors};
