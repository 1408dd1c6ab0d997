use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::SpatialError;
use crate::nn::{Activation, DenseNet, Gradients, Parametric};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdneConfig {
    pub embed_dim: usize,
    pub hidden_dims: Vec<usize>,
    /// Weight of the first-order (neighbour proximity) term.
    pub alpha_1st: f64,
    /// Reconstruction penalty on nonzero adjacency entries.
    pub beta: f64,
    /// L2 weight decay on layer weights.
    pub nu: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SdneConfig {
    fn default() -> Self {
        SdneConfig {
            embed_dim: 16,
            hidden_dims: vec![64],
            alpha_1st: 0.05,
            beta: 5.0,
            nu: 1e-4,
            epochs: 50,
            learning_rate: 0.001,
            seed: 42,
        }
    }
}

impl SdneConfig {
    pub fn validate(&self) -> Result<(), SpatialError> {
        let bad = |m: &str| Err(SpatialError::InvalidConfig(m.to_string()));
        if self.embed_dim == 0 || self.hidden_dims.contains(&0) {
            return bad("layer widths must be positive");
        }
        if !(self.beta >= 1.0) {
            return bad("beta must be at least 1");
        }
        if !(self.alpha_1st >= 0.0 && self.nu >= 0.0) {
            return bad("alpha_1st and nu must be non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Sigmoid autoencoder over adjacency rows. The encoder output is the node
/// embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdneModel {
    pub encoder: DenseNet,
    pub decoder: DenseNet,
}

impl SdneModel {
    pub fn new(input_dim: usize, hidden_dims: &[usize], embed_dim: usize, rng: &mut Rng) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden_dims);
        dims.push(embed_dim);
        let acts = vec![Activation::Sigmoid; dims.len() - 1];
        let encoder = DenseNet::new(&dims, &acts, rng);
        let rev: Vec<usize> = dims.iter().rev().copied().collect();
        let decoder = DenseNet::new(&rev, &acts, rng);
        SdneModel { encoder, decoder }
    }

    pub fn embed_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn embed(&self, adjacency: ArrayView2<'_, f64>) -> Result<Array2<f64>, SpatialError> {
        Ok(self.encoder.predict(adjacency)?)
    }
}

impl Parametric for SdneModel {
    fn params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    fn set_params(&mut self, params: &[f64]) {
        let k = self.encoder.param_count();
        self.encoder.set_params(&params[..k]);
        self.decoder.set_params(&params[k..]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SdneLoss {
    pub reconstruction: f64,
    pub first_order: f64,
    pub regularization: f64,
}

impl SdneLoss {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.first_order + self.regularization
    }
}

/// Laplacian product `L·Y` for the listing–listing similarity `S = A·Aᵀ`
/// (listings are similar in proportion to the POIs they share), computed
/// without materialising `S`.
fn laplacian_product(a: &Array2<f64>, degree: &Array1<f64>, y: &Array2<f64>) -> Array2<f64> {
    let mut ly = y * &degree.view().insert_axis(Axis(1));
    ly -= &a.dot(&a.t().dot(y));
    ly
}

/// Total loss and gradients w.r.t. encoder and decoder parameters.
///
/// `L = Σᵢ ‖(x̂ᵢ − xᵢ) ⊙ bᵢ‖² + α Σᵢⱼ sᵢⱼ ‖yᵢ − yⱼ‖² + ν/2 Σ ‖W‖²`
/// with `bᵢⱼ = β` where `xᵢⱼ > 0`, else 1.
pub fn sdne_loss_and_grad(
    model: &SdneModel,
    adjacency: &Array2<f64>,
    config: &SdneConfig,
) -> Result<(SdneLoss, Gradients, Gradients), SpatialError> {
    let x = adjacency;
    let (y, enc_cache) = model.encoder.forward(x.view())?;
    let (x_hat, dec_cache) = model.decoder.forward(y.view())?;

    let mut recon = 0.0;
    let mut d_xhat = Array2::zeros(x.dim());
    Zip::from(&mut d_xhat)
        .and(&x_hat)
        .and(x)
        .for_each(|g, &xh, &xv| {
            let b = if xv > 0.0 { config.beta } else { 1.0 };
            let r = (xh - xv) * b;
            recon += r * r;
            *g = 2.0 * r * b;
        });

    // Σᵢⱼ sᵢⱼ‖yᵢ − yⱼ‖² = 2·tr(Yᵀ L Y), gradient 4·L·Y.
    let degree = a_row_similarity_degree(x);
    let ly = laplacian_product(x, &degree, &y);
    let first_order = config.alpha_1st * 2.0 * (&y * &ly).sum();

    let (mut dec_grad, d_y) = model.decoder.backward(&dec_cache, d_xhat.view())?;
    let d_y = d_y + &(ly * (4.0 * config.alpha_1st));
    let (mut enc_grad, _) = model.encoder.backward(&enc_cache, d_y.view())?;

    let mut regularization = 0.0;
    for (net, grads) in [(&model.encoder, &mut enc_grad), (&model.decoder, &mut dec_grad)] {
        for (layer, g) in net.layers.iter().zip(grads.layers.iter_mut()) {
            regularization += 0.5 * config.nu * layer.weights.iter().map(|w| w * w).sum::<f64>();
            g.weights.scaled_add(config.nu, &layer.weights);
        }
    }
    Ok((
        SdneLoss {
            reconstruction: recon,
            first_order,
            regularization,
        },
        enc_grad,
        dec_grad,
    ))
}

/// Row sums of `A·Aᵀ`.
fn a_row_similarity_degree(a: &Array2<f64>) -> Array1<f64> {
    a.dot(&a.sum_axis(Axis(0)))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdneReport {
    /// Loss before each full-batch update.
    pub epoch_loss: Vec<SdneLoss>,
}

/// Full-batch gradient descent on all adjacency rows.
pub fn train_sdne(
    adjacency: &Array2<f64>,
    config: &SdneConfig,
) -> Result<(SdneModel, SdneReport), SpatialError> {
    config.validate()?;
    if !adjacency.iter().any(|&v| v != 0.0) {
        return Err(SpatialError::EmptyGraph);
    }
    let mut rng = Rng::seed_from_u64(config.seed);
    let mut model = SdneModel::new(adjacency.ncols(), &config.hidden_dims, config.embed_dim, &mut rng);
    let mut report = SdneReport::default();
    for epoch in 0..config.epochs {
        let (loss, enc_grad, dec_grad) = sdne_loss_and_grad(&model, adjacency, config)?;
        if !loss.total().is_finite() || !enc_grad.is_finite() || !dec_grad.is_finite() {
            return Err(SpatialError::NonFinite {
                epoch,
                loss: loss.total(),
            });
        }
        model.encoder.sgd_step(&enc_grad, config.learning_rate);
        model.decoder.sgd_step(&dec_grad, config.learning_rate);
        report.epoch_loss.push(loss);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::rng::seeded;
    use ndarray::array;
    use rand::Rng as _;

    fn small_graph() -> Array2<f64> {
        array![
            [1.0, 0.0, 0.5, 0.0],
            [0.8, 0.0, 0.0, 0.0],
            [0.0, 0.3, 0.0, 0.9],
            [0.0, 0.0, 0.0, 0.0],
            [0.2, 0.7, 0.0, 0.0],
            [0.0, 0.0, 0.6, 0.4],
        ]
    }

    fn random_graph(n: usize, m: usize, density: f64, seed: u64) -> Array2<f64> {
        let mut rng = seeded(seed);
        Array2::from_shape_fn((n, m), |_| {
            if rng.random_bool(density) {
                rng.random_range(0.05..1.0)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn laplacian_matches_explicit_pair_sum() {
        let a = small_graph();
        let y = random_graph(6, 3, 1.0, 3);
        let s = a.dot(&a.t());
        let mut explicit = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let d = &y.row(i) - &y.row(j);
                explicit += s[[i, j]] * d.dot(&d);
            }
        }
        let ly = laplacian_product(&a, &a_row_similarity_degree(&a), &y);
        assert!((2.0 * (&y * &ly).sum() - explicit).abs() < 1e-12);
    }

    #[test]
    fn gradient_check_full_loss() {
        let a = small_graph();
        let config = SdneConfig {
            embed_dim: 2,
            hidden_dims: vec![2],
            alpha_1st: 0.3,
            nu: 0.01,
            ..SdneConfig::default()
        };
        let model = SdneModel::new(4, &[2], 2, &mut seeded(5));
        let err = grad_check(
            &model,
            |m: &SdneModel| {
                let (loss, ge, gd) = sdne_loss_and_grad(m, &a, &config).unwrap();
                let mut g = ge.flatten();
                g.extend(gd.flatten());
                (loss.total(), g)
            },
            1e-6,
        );
        assert!(err < 1e-3, "relative error {err}");
    }

    #[test]
    fn identical_rows_identical_embeddings() {
        let mut a = small_graph();
        let row = a.row(0).to_owned();
        a.row_mut(4).assign(&row);
        let (model, _) = train_sdne(&a, &SdneConfig { epochs: 5, ..SdneConfig::default() }).unwrap();
        let e = model.embed(a.view()).unwrap();
        assert_eq!(e.row(0), e.row(4));
    }

    #[test]
    fn zero_rows_share_the_encoder_of_zero() {
        let mut a = random_graph(10, 5, 0.4, 1);
        a.row_mut(2).fill(0.0);
        a.row_mut(7).fill(0.0);
        let (model, _) = train_sdne(&a, &SdneConfig { epochs: 3, ..SdneConfig::default() }).unwrap();
        let e = model.embed(a.view()).unwrap();
        let z = model.embed(Array2::zeros((1, 5)).view()).unwrap();
        assert_eq!(e.row(2), e.row(7));
        assert_eq!(e.row(2), z.row(0));
    }

    #[test]
    fn reconstruction_halves_on_fifty_nodes() {
        // Sparsity comparable to a city-scale category graph.
        let a = random_graph(50, 100, 0.03, 50);
        let (_, report) = train_sdne(&a, &SdneConfig::default()).unwrap();
        let first = report.epoch_loss[0];
        let last = report.epoch_loss[49];
        assert!(
            last.reconstruction <= 0.5 * first.reconstruction,
            "{} -> {}",
            first.reconstruction,
            last.reconstruction
        );
        assert!(last.total() < first.total());
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let a = random_graph(20, 8, 0.3, 2);
        let cfg = SdneConfig { epochs: 10, ..SdneConfig::default() };
        let (m1, r1) = train_sdne(&a, &cfg).unwrap();
        let (m2, r2) = train_sdne(&a, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
        let (m3, _) = train_sdne(&a, &SdneConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(m1, m3);
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert!(matches!(
            train_sdne(&Array2::zeros((3, 2)), &SdneConfig::default()),
            Err(SpatialError::EmptyGraph)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let a = random_graph(10, 5, 0.5, 4);
        let cfg = SdneConfig { learning_rate: 1e300, epochs: 5, ..SdneConfig::default() };
        assert!(matches!(train_sdne(&a, &cfg), Err(SpatialError::NonFinite { .. })));
    }

    #[test]
    fn shapes() {
        let m = SdneModel::new(30, &[64], 16, &mut seeded(1));
        assert_eq!(m.embed_dim(), 16);
        assert_eq!(m.decoder.output_dim(), 30);
        assert_eq!(m.encoder.layers.len(), 2);
    }
}
