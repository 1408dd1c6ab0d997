use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// One fully connected layer, `a = act(W x + b)` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    /// He-uniform for ReLU layers, Xavier-uniform otherwise. Bias starts at zero.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / inputs.max(1) as f64).sqrt(),
            Activation::Sigmoid | Activation::Identity => {
                (6.0 / (inputs + outputs).max(1) as f64).sqrt()
            }
        };
        let weights = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-limit..=limit));
        DenseLayer {
            weights,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Returns `(pre_activation, activation)` for a `batch × in` input.
    pub(crate) fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias;
        let act = self.activation;
        let a = z.mapv(|v| act.apply(v));
        (z, a)
    }

    /// Backpropagates `grad_out` (d loss / d activation) through the layer.
    /// Returns the parameter gradient and d loss / d input.
    pub(crate) fn backward(
        &self,
        input: ArrayView2<'_, f64>,
        z: &Array2<f64>,
        a: &Array2<f64>,
        grad_out: ArrayView2<'_, f64>,
    ) -> (LayerGrad, Array2<f64>) {
        let act = self.activation;
        let mut delta = grad_out.to_owned();
        ndarray::Zip::from(&mut delta)
            .and(z)
            .and(a)
            .for_each(|d, &zv, &av| *d *= act.derivative(zv, av));
        let weights = delta.t().dot(&input);
        let bias = delta.sum_axis(Axis(0));
        let grad_in = delta.dot(&self.weights);
        (LayerGrad { weights, bias }, grad_in)
    }
}
