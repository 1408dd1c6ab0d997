//! Metrics, the S/ST/STP ablation and the synthetic dataset generator.

mod ablation;
mod metrics;
mod synth;

pub use ablation::{evaluate_model, run_ablation, AblationOutcome, Variant};
pub use metrics::{mae, mse, r2, reports_to_csv, rmse, MetricError, MetricReport};
pub use synth::{
    synth_generate, LatentScore, SynthConfig, SynthDataset, LATENT_FILE, LISTINGS_FILE, NEGATIVE_WORDS, POIS_FILE,
    POSITIVE_WORDS, REVIEWS_FILE, SYNTH_FILES,
};
