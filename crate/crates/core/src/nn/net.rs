use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerGrad};
use super::{NnError, Parametric};

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer intermediates recorded by [`DenseNet::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[k]` is the input to layer `k`; `inputs[0]` is the network input.
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().unwrap_or(&self.inputs[0])
    }

    /// Activation of layer `k` (zero-based).
    pub fn activation(&self, k: usize) -> &Array2<f64> {
        &self.post[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    /// Flattened in the same order as [`Parametric::params`] for [`DenseNet`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weights.iter().copied());
            out.extend(g.bias.iter().copied());
        }
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }
}

impl DenseNet {
    /// Builds a freshly initialized network. `dims` lists layer widths from
    /// input to output; `activations` has one entry per layer.
    pub fn new<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "a network needs at least an input and an output width");
        assert_eq!(dims.len() - 1, activations.len(), "one activation per layer");
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::init(w[0], w[1], act, rng))
            .collect();
        DenseNet { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(NnError::DimensionMismatch {
                    context: "adjacent layers",
                    expected: pair[0].outputs(),
                    got: pair[1].inputs(),
                });
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(NnError::DimensionMismatch {
                    context: "layer bias",
                    expected: l.outputs(),
                    got: l.bias.len(),
                });
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for layer in &self.layers {
            let (z, a) = layer.forward(current.view());
            inputs.push(current);
            pre.push(z);
            current = a.clone();
            post.push(a);
        }
        if !current.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite("network output".into()));
        }
        Ok((current, ForwardCache { inputs, pre, post }))
    }

    /// Inference only; skips the cache.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut current = x.to_owned();
        for layer in &self.layers {
            current = layer.forward(current.view()).1;
        }
        Ok(current)
    }

    /// Backpropagates d loss / d output. Returns parameter gradients and
    /// d loss / d input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        loss_grad: ArrayView2<'_, f64>,
    ) -> Result<(Gradients, Array2<f64>), NnError> {
        let out = cache.output();
        if loss_grad.dim() != out.dim() {
            return Err(NnError::DimensionMismatch {
                context: "loss gradient",
                expected: out.ncols(),
                got: loss_grad.ncols(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = loss_grad.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let (g, down) = layer.backward(
                cache.inputs[k].view(),
                &cache.pre[k],
                &cache.post[k],
                upstream.view(),
            );
            grads.push(g);
            upstream = down;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, upstream))
    }

    /// Plain SGD: `θ ← θ − lr·g`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-lr, &g.weights);
            layer.bias.scaled_add(-lr, &g.bias);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn to_checkpoint(&self) -> NetCheckpoint {
        NetCheckpoint {
            layers: self
                .layers
                .iter()
                .map(|l| LayerCheckpoint {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &NetCheckpoint) -> Result<Self, NnError> {
        let layers = ckpt
            .layers
            .iter()
            .map(|l| {
                if l.bias.len() != l.outputs {
                    return Err(NnError::Checkpoint(format!(
                        "bias length {} does not match {} outputs",
                        l.bias.len(),
                        l.outputs
                    )));
                }
                if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                    return Err(NnError::Checkpoint("non-finite parameter".into()));
                }
                let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights.clone())
                    .map_err(|e| NnError::Checkpoint(e.to_string()))?;
                Ok(DenseLayer {
                    weights,
                    bias: Array1::from(l.bias.clone()),
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        DenseNet::from_layers(layers)
    }
}

impl Parametric for DenseNet {
    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = it.next().expect("parameter vector too short");
            }
            for b in l.bias.iter_mut() {
                *b = it.next().expect("parameter vector too short");
            }
        }
    }
}

/// JSON checkpoint layout: layer dims, activation and row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetCheckpoint {
    pub layers: Vec<LayerCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerCheckpoint {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Serialize for DenseNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_checkpoint().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ckpt = NetCheckpoint::deserialize(d)?;
        DenseNet::from_checkpoint(&ckpt).map_err(serde::de::Error::custom)
    }
}

/// Half mean squared error over a batch and its gradient w.r.t. `pred`.
pub fn half_mse(pred: &Array2<f64>, target: &Array2<f64>) -> (f64, Array2<f64>) {
    let n = pred.nrows().max(1) as f64;
    let diff = pred - target;
    let loss = 0.5 * diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 120,
            batch_size: 256,
            learning_rate: 0.01,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 {
            return Err(NnError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(NnError::InvalidConfig(
                "learning_rate must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}
