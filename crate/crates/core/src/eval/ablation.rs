use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::fusion::{train_price_model, Block, FeatureBundle, FusionError, PriceModel, RegressorConfig};
use crate::stats::TargetTransform;

/// Feature-block combinations compared in the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Statistical features only.
    S,
    /// Statistical plus text (description, host, sentiment).
    ST,
    /// Statistical, text and spatial.
    STP,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::S, Variant::ST, Variant::STP];

    pub fn blocks(self) -> &'static [Block] {
        match self {
            Variant::S => &[Block::S],
            Variant::ST => &[Block::S, Block::L, Block::H, Block::R],
            Variant::STP => &[Block::S, Block::L, Block::H, Block::R, Block::P],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::S => "S",
            Variant::ST => "ST",
            Variant::STP => "STP",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("MSIE-").unwrap_or(&t);
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == t)
            .ok_or_else(|| format!("unknown variant `{s}` (expected S, ST or STP)"))
    }
}

/// Metrics of a trained model on the given rows, plus currency-scale MAE.
pub fn evaluate_model(
    model: &PriceModel,
    bundle: &FeatureBundle,
    label: &str,
) -> Result<MetricReport, FusionError> {
    let pred = model.predict(bundle)?;
    let y = bundle.y.to_vec();
    let mut report =
        MetricReport::compute(label, &pred.y, &y).map_err(|e| FusionError::Artifact(e.to_string()))?;
    let true_price: Vec<f64> = y.iter().map(|&v| model.target.inverse(v)).collect();
    report.currency_mae = super::mae(&pred.price, &true_price).ok();
    Ok(report)
}

#[derive(Debug)]
pub struct AblationOutcome {
    pub variant: Variant,
    pub result: Result<(MetricReport, PriceModel), FusionError>,
}

/// Retrains the regressor once per variant on `train` with the same config
/// and scores it on `test`. A failing variant does not stop the others.
pub fn run_ablation(
    train: &FeatureBundle,
    test: &FeatureBundle,
    variants: &[Variant],
    target: TargetTransform,
    config: &RegressorConfig,
) -> Vec<AblationOutcome> {
    variants
        .par_iter()
        .map(|&variant| {
            let result = train_price_model(train, variant.blocks(), target, config).and_then(|model| {
                let report = evaluate_model(&model, test, variant.name())?;
                Ok((report, model))
            });
            AblationOutcome { variant, result }
        })
        .collect()
}
