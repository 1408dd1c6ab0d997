use serde::{Deserialize, Serialize};

use super::StatsError;

/// `y = (log10(price) − mean) / stdev`, with mean and stdev fit on training prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTransform {
    pub mean: f64,
    pub stdev: f64,
}

impl TargetTransform {
    pub const KIND: &'static str = "standardized-log10";

    pub fn fit(prices: &[f64]) -> Result<TargetTransform, StatsError> {
        if prices.len() < 2 {
            return Err(StatsError::TooFewRows {
                needed: 2,
                got: prices.len(),
            });
        }
        if prices.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(StatsError::Invalid("prices must be positive and finite".into()));
        }
        let logs: Vec<f64> = prices.iter().map(|p| p.log10()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let stdev = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if stdev <= 0.0 {
            return Err(StatsError::AllConstant);
        }
        Ok(TargetTransform { mean, stdev })
    }

    pub fn forward(&self, price: f64) -> f64 {
        (price.log10() - self.mean) / self.stdev
    }

    pub fn inverse(&self, y: f64) -> f64 {
        10f64.powf(y * self.stdev + self.mean)
    }
}
