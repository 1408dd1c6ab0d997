/// Models whose parameters can be viewed as one flat vector.
pub trait Parametric: Clone {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]);
}

/// Compares an analytic gradient against central finite differences.
///
/// `loss_and_grad` returns the scalar loss and the flat analytic gradient at
/// the given model. The result is the max over parameters of
/// `|g_a − g_n| / max(|g_a|, |g_n|, 1e-8)`.
pub fn grad_check<M, F>(model: &M, loss_and_grad: F, eps: f64) -> f64
where
    M: Parametric,
    F: Fn(&M) -> (f64, Vec<f64>),
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let (_, analytic) = loss_and_grad(model);
    let base = model.params();
    assert_eq!(analytic.len(), base.len(), "gradient length must match parameter count");
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        params[i] = base[i] + eps;
        probe.set_params(&params);
        let up = loss_and_grad(&probe).0;
        params[i] = base[i] - eps;
        probe.set_params(&params);
        let down = loss_and_grad(&probe).0;
        params[i] = base[i];
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
