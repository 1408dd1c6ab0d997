use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Block, FeatureBundle, FusionError};
use crate::nn::{half_mse, Activation, DenseNet, NnError, TrainConfig};
use crate::rng::seeded;
use crate::stats::TargetTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressorConfig {
    /// Widths of the ReLU layers between the input and the scalar output.
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RegressorConfig {
            hidden_dims: vec![128, 64, 64],
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            seed: t.seed,
            shuffle: t.shuffle,
        }
    }
}

impl RegressorConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }
}

/// Per-column standardization fit on training rows. Constant columns keep
/// scale 1 so the column layout never changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl InputScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> InputScaler {
        let n = x.nrows().max(1) as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            means.push(mean);
            scales.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        InputScaler { means, scales }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        out -= &Array1::from(self.means.clone());
        out /= &Array1::from(self.scales.clone());
        out
    }
}

/// Hash of the ordered column names a model was trained on.
pub fn layout_signature(columns: &[String]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceModel {
    pub blocks: Vec<Block>,
    pub layout: Vec<String>,
    pub layout_signature: String,
    pub scaler: InputScaler,
    pub target: TargetTransform,
    pub config: RegressorConfig,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    pub network: DenseNet,
}

/// Predictions on the transformed scale and in currency.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub listing_ids: Vec<String>,
    pub y: Vec<f64>,
    pub price: Vec<f64>,
}

/// Trains on the `blocks` columns of `train` with minibatch SGD on half-MSE.
pub fn train_price_model(
    train: &FeatureBundle,
    blocks: &[Block],
    target: TargetTransform,
    config: &RegressorConfig,
) -> Result<PriceModel, FusionError> {
    let tc = config.train_config();
    tc.validate()?;
    if train.is_empty() {
        return Err(FusionError::Empty);
    }
    if config.hidden_dims.contains(&0) {
        return Err(NnError::InvalidConfig("hidden layer widths must be positive".into()).into());
    }
    let raw = train.matrix(blocks);
    let scaler = InputScaler::fit(raw.view());
    let x = scaler.transform(raw.view());
    let y = train.y.view().insert_axis(Axis(1)).to_owned();

    let mut rng = seeded(config.seed);
    let mut dims = vec![x.ncols()];
    dims.extend(&config.hidden_dims);
    dims.push(1);
    let mut acts = vec![Activation::Relu; config.hidden_dims.len()];
    acts.push(Activation::Identity);
    let mut net = DenseNet::new(&dims, &acts, &mut rng);

    let n = x.nrows();
    let batch = config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb = y.select(Axis(0), chunk);
            let (pred, cache) = net.forward(xb.view()).map_err(|_| FusionError::NonFinite { epoch })?;
            let (loss, grad) = half_mse(&pred, &yb);
            if !loss.is_finite() {
                return Err(FusionError::NonFinite { epoch });
            }
            let (grads, _) = net.backward(&cache, grad.view())?;
            net.sgd_step(&grads, config.learning_rate);
            total += loss * chunk.len() as f64;
        }
        let mean = total / n as f64;
        if !mean.is_finite() || !net.is_finite() {
            return Err(FusionError::NonFinite { epoch });
        }
        loss_curve.push(mean);
    }
    let layout = train.column_names(blocks);
    Ok(PriceModel {
        blocks: blocks.to_vec(),
        layout_signature: layout_signature(&layout),
        layout,
        scaler,
        target,
        config: config.clone(),
        loss_curve,
        network: net,
    })
}

impl PriceModel {
    /// Transformed-scale predictions for an already assembled raw matrix.
    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, FusionError> {
        if x.ncols() != self.layout.len() {
            return Err(FusionError::LayoutMismatch {
                expected: self.layout.len(),
                got: x.ncols(),
            });
        }
        let out = self.network.predict(self.scaler.transform(x).view())?;
        Ok(out.column(0).to_owned())
    }

    /// Rejects bundles whose column names differ from the training layout.
    pub fn predict(&self, bundle: &FeatureBundle) -> Result<Prediction, FusionError> {
        let names = bundle.column_names(&self.blocks);
        if layout_signature(&names) != self.layout_signature {
            return Err(FusionError::LayoutMismatch {
                expected: self.layout.len(),
                got: names.len(),
            });
        }
        let y = self.predict_matrix(bundle.matrix(&self.blocks).view())?.to_vec();
        let price = y.iter().map(|&v| self.target.inverse(v)).collect();
        Ok(Prediction {
            listing_ids: bundle.listing_ids.clone(),
            y,
            price,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<PriceModel, FusionError> {
        let model: PriceModel = serde_json::from_str(text).map_err(|e| FusionError::Artifact(e.to_string()))?;
        if layout_signature(&model.layout) != model.layout_signature {
            return Err(FusionError::Artifact("layout signature does not match layout".into()));
        }
        if model.network.input_dim() != model.layout.len() || model.scaler.means.len() != model.layout.len() {
            return Err(FusionError::Artifact("network input width does not match layout".into()));
        }
        Ok(model)
    }

    /// `epoch,loss` rows, epochs counted from 1.
    pub fn loss_curve_csv(&self) -> String {
        let mut s = String::from("epoch,loss\n");
        for (i, l) in self.loss_curve.iter().enumerate() {
            s.push_str(&format!("{},{}\n", i + 1, l));
        }
        s
    }
}
