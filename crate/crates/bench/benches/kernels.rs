use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use msie_core::nn::{Activation, DenseNet};
use msie_core::rng::seeded;
use msie_core::spatial::{haversine_km, sdne_loss_and_grad, GeoPoint, SdneConfig, SdneModel};
use msie_core::stats::{lasso_fit, LassoParams};
use msie_core::text::{step_gradients, step_objective};
use ndarray::{Array1, Array2};
use rand::Rng;

fn haversine(c: &mut Criterion) {
    let mut rng = seeded(1);
    let points: Vec<(GeoPoint, GeoPoint)> = (0..1024)
        .map(|_| {
            (
                GeoPoint::new(rng.random_range(39.8..40.0), rng.random_range(116.3..116.5)),
                GeoPoint::new(rng.random_range(39.8..40.0), rng.random_range(116.3..116.5)),
            )
        })
        .collect();
    c.bench_function("haversine_1024_pairs", |b| {
        b.iter(|| points.iter().map(|&(p, q)| haversine_km(p, q)).sum::<f64>())
    });
}

fn lasso(c: &mut Criterion) {
    let mut rng = seeded(2);
    let x = Array2::from_shape_fn((1000, 40), |_| rng.random_range(-1.0..1.0));
    let w = Array1::from_shape_fn(40, |j| if j % 4 == 0 { 1.0 } else { 0.0 });
    let y = x.dot(&w) + Array1::from_shape_fn(1000, |_| rng.random_range(-0.1..0.1));
    let params = LassoParams::default();
    c.bench_function("lasso_fit_1000x40", |b| {
        b.iter(|| lasso_fit(x.view(), y.view(), black_box(5.0), &params).unwrap())
    });
}

fn cbow_step(c: &mut Criterion) {
    let mut rng = seeded(3);
    let input = Array2::from_shape_fn((5000, 100), |_| rng.random_range(-0.005..0.005));
    let output = Array2::from_shape_fn((5000, 100), |_| rng.random_range(-0.1..0.1));
    let context: Vec<usize> = (0..10).map(|_| rng.random_range(0..5000)).collect();
    let negatives: Vec<usize> = (0..5).map(|_| rng.random_range(0..5000)).collect();
    c.bench_function("cbow_step_objective_and_gradients", |b| {
        b.iter(|| {
            let obj = step_objective(input.view(), output.view(), &context, 17, &negatives);
            let grads = step_gradients(input.view(), output.view(), &context, 17, &negatives);
            (obj, grads)
        })
    });
}

fn dense_forward(c: &mut Criterion) {
    let mut rng = seeded(4);
    let net = DenseNet::new(
        &[349, 128, 64, 64, 1],
        &[Activation::Relu, Activation::Relu, Activation::Relu, Activation::Identity],
        &mut rng,
    );
    let x = Array2::from_shape_fn((256, 349), |_| rng.random_range(-1.0..1.0));
    c.bench_function("dense_forward_batch256", |b| b.iter(|| net.predict(x.view()).unwrap()));
}

fn sdne_loss(c: &mut Criterion) {
    let mut rng = seeded(5);
    let adjacency = Array2::from_shape_fn((500, 200), |_| {
        if rng.random_bool(0.02) {
            rng.random_range(0.05..1.0)
        } else {
            0.0
        }
    });
    let config = SdneConfig::default();
    let model = SdneModel::new(200, &config.hidden_dims, config.embed_dim, &mut rng);
    c.bench_function("sdne_loss_and_grad_500x200", |b| {
        b.iter(|| sdne_loss_and_grad(&model, &adjacency, &config).unwrap())
    });
}

criterion_group!(kernels, haversine, lasso, cbow_step, dense_forward, sdne_loss);
criterion_main!(kernels);
