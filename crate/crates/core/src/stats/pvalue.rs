use ndarray::{ArrayView1, Axis};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{StatFeatureMatrix, StatsError};

/// Two-sided p-value of the slope in `y ~ a + b·x`. Student t below 31
/// rows, normal approximation above. Constant `x` gives 1.
pub fn slope_pvalue(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    let n = x.len();
    if n < 3 {
        return 1.0;
    }
    let nf = n as f64;
    let (mx, my) = (x.sum() / nf, y.sum() / nf);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 1.0;
    }
    let r2 = (sxy * sxy / (sxx * syy)).min(1.0);
    if r2 >= 1.0 {
        return 0.0;
    }
    let df = nf - 2.0;
    let t = (r2 * df / (1.0 - r2)).sqrt();
    let tail = if n > 30 {
        1.0 - Normal::standard().cdf(t)
    } else {
        1.0 - StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(t)
    };
    (2.0 * tail).clamp(0.0, 1.0)
}

/// Top `top_k` features by ascending univariate slope p-value. Ties keep
/// column order.
pub fn pvalue_rank(
    x: &StatFeatureMatrix,
    y: ArrayView1<'_, f64>,
    top_k: usize,
) -> Result<Vec<(String, f64)>, StatsError> {
    if top_k > x.ncols() {
        return Err(StatsError::Invalid(format!(
            "top_k {top_k} exceeds {} features",
            x.ncols()
        )));
    }
    if y.len() != x.nrows() {
        return Err(StatsError::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let mut ranked: Vec<(String, f64)> = x
        .values
        .axis_iter(Axis(1))
        .zip(&x.column_names)
        .map(|(col, name)| (name.clone(), slope_pvalue(col, y)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    ranked.truncate(top_k);
    Ok(ranked)
}
