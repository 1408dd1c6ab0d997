//! Statistical attribute block: imputation, standardization, Lasso
//! coordinate descent with temporal cross-validation, and the univariate
//! p-value ranking used as a comparison selector.

mod lasso;
mod matrix;
mod pvalue;
mod scaler;
mod target;

pub use lasso::{
    alpha_grid, lasso_cv, lasso_fit, lasso_objective, select_features, CvReport, LassoModel,
    LassoParams,
};
pub use matrix::{StatFeatureMatrix, StatImputer, MAX_MISSING_FRACTION};
pub use pvalue::{pvalue_rank, slope_pvalue};
pub use scaler::StandardScaler;
pub use target::TargetTransform;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("every column has zero variance")]
    AllConstant,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("{rows} rows cannot be split into {folds} folds of at least 2 rows")]
    FoldTooSmall { rows: usize, folds: usize },
    #[error("no feature survived selection")]
    EmptySelection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("column `{0}` not present")]
    UnknownColumn(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}
