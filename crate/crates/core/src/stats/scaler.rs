use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use super::{StatFeatureMatrix, StatsError};

/// Column-wise `(x − mean) / stdev` with population standard deviation.
/// Zero-variance columns are recorded in `excluded` and dropped on transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
    pub excluded: Vec<String>,
}

impl StandardScaler {
    pub fn fit(x: &StatFeatureMatrix) -> Result<StandardScaler, StatsError> {
        let n = x.nrows();
        if n < 2 {
            return Err(StatsError::TooFewRows { needed: 2, got: n });
        }
        if x.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        let mut scaler = StandardScaler {
            columns: Vec::new(),
            means: Vec::new(),
            stdevs: Vec::new(),
            excluded: Vec::new(),
        };
        for (col, name) in x.values.axis_iter(Axis(1)).zip(&x.column_names) {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd > 1e-12 * mean.abs().max(1.0) {
                scaler.columns.push(name.clone());
                scaler.means.push(mean);
                scaler.stdevs.push(sd);
            } else {
                scaler.excluded.push(name.clone());
            }
        }
        if scaler.columns.is_empty() {
            return Err(StatsError::AllConstant);
        }
        Ok(scaler)
    }

    pub fn transform(&self, x: &StatFeatureMatrix) -> Result<StatFeatureMatrix, StatsError> {
        let mut out = x.select_columns(&self.columns)?;
        let means = Array1::from(self.means.clone());
        let sds = Array1::from(self.stdevs.clone());
        out.values -= &means;
        out.values /= &sds;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn matrix(values: Array2<f64>, names: &[&str]) -> StatFeatureMatrix {
        let ids = (0..values.nrows()).map(|i| format!("L{i}")).collect();
        StatFeatureMatrix::new(ids, values, names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn standardizes_by_hand_arithmetic() {
        // mean 2, population sd sqrt(2/3); (1-2)/0.816496... = -1.224744871...
        let x = matrix(array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], &["a", "c"]);
        let s = StandardScaler::fit(&x).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert!((s.stdevs[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.excluded, vec!["c"]);
        let t = s.transform(&x).unwrap();
        assert_eq!(t.column_names, vec!["a"]);
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (v, e) in t.values.column(0).iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn transformed_columns_have_zero_mean_unit_sd() {
        let x = matrix(array![[1.0, 10.0], [4.0, -3.0], [2.5, 7.0], [9.0, 0.5]], &["a", "b"]);
        let t = StandardScaler::fit(&x).unwrap().transform(&x).unwrap();
        for col in t.values.axis_iter(Axis(1)) {
            let mean = col.sum() / 4.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn standardized_input_is_a_fixed_point() {
        let x = matrix(array![[1.0], [2.0], [3.0], [6.0]], &["a"]);
        let once = StandardScaler::fit(&x).unwrap().transform(&x).unwrap();
        let twice = StandardScaler::fit(&once).unwrap().transform(&once).unwrap();
        for (a, b) in once.values.iter().zip(twice.values.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn all_constant_is_an_error() {
        let x = matrix(array![[1.0, 2.0], [1.0, 2.0]], &["a", "b"]);
        assert_eq!(StandardScaler::fit(&x), Err(StatsError::AllConstant));
    }

    #[test]
    fn single_row_is_rejected() {
        let x = matrix(array![[1.0]], &["a"]);
        assert!(matches!(StandardScaler::fit(&x), Err(StatsError::TooFewRows { .. })));
    }
}
