use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("prediction has {pred} values, target has {target}")]
    LengthMismatch { pred: usize, target: usize },
    #[error("no values to evaluate")]
    Empty,
    #[error("target is constant; R² is undefined")]
    ConstantTarget,
}

fn check(pred: &[f64], target: &[f64]) -> Result<(), MetricError> {
    if pred.len() != target.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    check(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    check(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    mse(pred, target).map(f64::sqrt)
}

/// `1 − Σ(ŷ − y)² / Σ(ȳ − y)²`.
pub fn r2(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    check(pred, target)?;
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantTarget);
    }
    let ss_res: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub variant: String,
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    /// MAE in currency units after inverting the target transform.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub currency_mae: Option<f64>,
}

impl MetricReport {
    /// Metrics on the transformed scale.
    pub fn compute(variant: &str, pred: &[f64], target: &[f64]) -> Result<MetricReport, MetricError> {
        let mse = mse(pred, target)?;
        Ok(MetricReport {
            variant: variant.to_string(),
            n: pred.len(),
            mae: mae(pred, target)?,
            mse,
            rmse: mse.sqrt(),
            r2: r2(pred, target)?,
            currency_mae: None,
        })
    }
}

/// `variant,mae,mse,rmse,r2`, one row per report.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut s = String::from("variant,mae,mse,rmse,r2\n");
    for r in reports {
        s.push_str(&format!("{},{},{},{},{}\n", r.variant, r.mae, r.mse, r.rmse, r.r2));
    }
    s
}
