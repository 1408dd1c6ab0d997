use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{StatFeatureMatrix, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoParams {
    /// Stop when the largest coefficient change in a sweep falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub fit_intercept: bool,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams {
            tol: 1e-6,
            max_iter: 10_000,
            fit_intercept: true,
        }
    }
}

/// Solution of `½ Σ (yᵢ − wᵀxᵢ − b)² + α Σ |wⱼ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub selected_mask: Vec<bool>,
    pub converged: bool,
    pub sweeps: usize,
    /// Objective after each sweep.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

impl LassoModel {
    pub fn n_selected(&self) -> usize {
        self.selected_mask.iter().filter(|&&m| m).count()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&Array1::from(self.weights.clone())) + self.intercept
    }
}

fn soft_threshold(v: f64, alpha: f64) -> f64 {
    if v > alpha {
        v - alpha
    } else if v < -alpha {
        v + alpha
    } else {
        0.0
    }
}

/// `½‖y − Xw − b‖² + α‖w‖₁`.
pub fn lasso_objective(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    weights: &[f64],
    intercept: f64,
    alpha: f64,
) -> f64 {
    let pred = x.dot(&ArrayView1::from(weights)) + intercept;
    let rss: f64 = pred.iter().zip(y).map(|(p, t)| (t - p).powi(2)).sum();
    0.5 * rss + alpha * weights.iter().map(|w| w.abs()).sum::<f64>()
}

fn check_inputs(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(), StatsError> {
    if x.nrows() != y.len() {
        return Err(StatsError::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(StatsError::TooFewRows { needed: 1, got: 0 });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

struct Centered {
    x_mean: Array1<f64>,
    y_mean: f64,
    gram: Array2<f64>,
    xty: Array1<f64>,
    yty: f64,
}

fn center(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, fit_intercept: bool) -> Centered {
    let (x_mean, y_mean) = if fit_intercept {
        (x.mean_axis(Axis(0)).unwrap(), y.mean().unwrap())
    } else {
        (Array1::zeros(x.ncols()), 0.0)
    };
    let xc = &x - &x_mean;
    let yc = &y - y_mean;
    Centered {
        gram: xc.t().dot(&xc),
        xty: xc.t().dot(&yc),
        yty: yc.dot(&yc),
        x_mean,
        y_mean,
    }
}

/// Cyclic coordinate descent with covariance updates. Hitting `max_iter`
/// returns the last iterate with `converged = false`.
pub fn lasso_fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    alpha: f64,
    params: &LassoParams,
) -> Result<LassoModel, StatsError> {
    check_inputs(x, y)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(StatsError::Invalid(format!("alpha must be non-negative, got {alpha}")));
    }
    let c = center(x, y, params.fit_intercept);
    let d = x.ncols();
    let mut w = vec![0.0; d];
    // q = G w, kept current across coordinate updates.
    let mut q = Array1::<f64>::zeros(d);
    let objective = |w: &[f64], q: &Array1<f64>| {
        let wv = ArrayView1::from(w);
        let rss = c.yty - 2.0 * wv.dot(&c.xty) + wv.dot(q);
        0.5 * rss.max(0.0) + alpha * w.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..d {
            let gjj = c.gram[[j, j]];
            let old = w[j];
            let new = if gjj > 0.0 {
                let rho = c.xty[j] - (q[j] - gjj * old);
                soft_threshold(rho, alpha) / gjj
            } else {
                0.0
            };
            if new != old {
                q.scaled_add(new - old, &c.gram.column(j));
                w[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        history.push(objective(&w, &q));
        if max_change < params.tol {
            converged = true;
            break;
        }
    }
    let intercept = if params.fit_intercept {
        c.y_mean - c.x_mean.dot(&ArrayView1::from(&w[..]))
    } else {
        0.0
    };
    Ok(LassoModel {
        alpha,
        selected_mask: w.iter().map(|&v| v != 0.0).collect(),
        weights: w,
        intercept,
        converged,
        sweeps,
        objective_history: history,
    })
}

/// `n_alphas` values log-spaced from the critical alpha (above which every
/// weight is zero) down to `critical · ratio`, descending.
pub fn alpha_grid(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_alphas: usize,
    ratio: f64,
    fit_intercept: bool,
) -> Result<Vec<f64>, StatsError> {
    check_inputs(x, y)?;
    if n_alphas == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(StatsError::Invalid("alpha grid needs n ≥ 1 and ratio in (0,1)".into()));
    }
    let c = center(x, y, fit_intercept);
    let alpha_max = c.xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if alpha_max == 0.0 {
        return Ok(vec![0.0]);
    }
    if n_alphas == 1 {
        return Ok(vec![alpha_max]);
    }
    let (hi, lo) = (alpha_max.ln(), (alpha_max * ratio).ln());
    let mut grid: Vec<f64> = (0..n_alphas)
        .map(|i| (hi + (lo - hi) * i as f64 / (n_alphas - 1) as f64).exp())
        .collect();
    // exp(ln(a)) can land one ulp below `a`, which would let a weight through.
    grid[0] = alpha_max;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub alphas: Vec<f64>,
    pub mean_mse: Vec<f64>,
    pub best_alpha: f64,
    pub folds: usize,
}

/// K-fold cross-validation over contiguous row blocks (no shuffling, so
/// time-ordered rows stay time-ordered). The best alpha minimizes mean
/// validation MSE; ties go to the larger alpha. The returned model is refit
/// on all rows.
pub fn lasso_cv(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    alpha_grid: &[f64],
    folds: usize,
    params: &LassoParams,
) -> Result<(f64, LassoModel, CvReport), StatsError> {
    check_inputs(x, y)?;
    if alpha_grid.is_empty() {
        return Err(StatsError::Invalid("alpha grid is empty".into()));
    }
    if folds < 2 {
        return Err(StatsError::Invalid("need at least 2 folds".into()));
    }
    let n = x.nrows();
    if n / folds < 2 {
        return Err(StatsError::FoldTooSmall { rows: n, folds });
    }
    let bounds: Vec<(usize, usize)> = (0..folds).map(|f| (f * n / folds, (f + 1) * n / folds)).collect();
    let fold_mse: Vec<Vec<f64>> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let train_idx: Vec<usize> = (0..lo).chain(hi..n).collect();
            let xt = x.select(Axis(0), &train_idx);
            let yt = y.select(Axis(0), &train_idx);
            let xv = x.slice(s![lo..hi, ..]);
            let yv = y.slice(s![lo..hi]);
            alpha_grid
                .iter()
                .map(|&a| {
                    let m = lasso_fit(xt.view(), yt.view(), a, params)?;
                    let pred = m.predict(xv);
                    Ok(pred.iter().zip(yv).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / (hi - lo) as f64)
                })
                .collect::<Result<Vec<f64>, StatsError>>()
        })
        .collect::<Result<_, _>>()?;
    let mean_mse: Vec<f64> = (0..alpha_grid.len())
        .map(|a| fold_mse.iter().map(|f| f[a]).sum::<f64>() / folds as f64)
        .collect();
    let mut best = 0;
    for a in 1..alpha_grid.len() {
        let (m, b) = (mean_mse[a], mean_mse[best]);
        let tie = (m - b).abs() <= 1e-12 * b.abs().max(1e-300);
        if (m < b && !tie) || (tie && alpha_grid[a] > alpha_grid[best]) {
            best = a;
        }
    }
    let best_alpha = alpha_grid[best];
    let model = lasso_fit(x, y, best_alpha, params)?;
    Ok((
        best_alpha,
        model,
        CvReport {
            alphas: alpha_grid.to_vec(),
            mean_mse,
            best_alpha,
            folds,
        },
    ))
}

/// Keeps the columns with nonzero Lasso weight, in original order.
pub fn select_features(model: &LassoModel, x: &StatFeatureMatrix) -> Result<StatFeatureMatrix, StatsError> {
    if model.selected_mask.len() != x.ncols() {
        return Err(StatsError::DimensionMismatch {
            expected: model.selected_mask.len(),
            got: x.ncols(),
        });
    }
    let names: Vec<String> = x
        .column_names
        .iter()
        .zip(&model.selected_mask)
        .filter(|(_, &m)| m)
        .map(|(n, _)| n.clone())
        .collect();
    if names.is_empty() {
        return Err(StatsError::EmptySelection);
    }
    x.select_columns(&names)
}
