//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use msie_core::eval::{mae, mse, r2, rmse, MetricReport};
use msie_core::nn::{grad_check, half_mse, Activation, DenseNet, Parametric};
use msie_core::rng::seeded;
use msie_core::sentiment::{train_nb, Polarity};
use msie_core::spatial::{haversine_km, sdne_loss_and_grad, train_sdne, GeoPoint, SdneConfig, SdneModel};
use msie_core::stats::{alpha_grid, lasso_fit, LassoParams};
use msie_core::text::{step_gradients, step_objective};
use msie_core::{Pipeline, PipelineConfig};
use ndarray::{array, Array1, Array2};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

// 1 ------------------------------------------------------------------------

fn metric_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(1);
    for i in 0..1000 {
        let n = rng.random_range(2..50);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (m, e) = (mse(&p, &y).unwrap(), rmse(&p, &y).unwrap());
        check(((e * e - m) / m).abs() <= 1e-12, format!("pair {i}: rmse² ≠ mse"))?;
        check(mae(&p, &y).unwrap() <= e, format!("pair {i}: mae > rmse"))?;
        let mean = y.iter().sum::<f64>() / n as f64;
        if y.iter().any(|&v| v != mean) {
            check(r2(&y, &y).unwrap() == 1.0, format!("pair {i}: r2(y, y) ≠ 1"))?;
            check(r2(&vec![mean; n], &y).unwrap().abs() <= 1e-12, format!("pair {i}: r2(mean) ≠ 0"))?;
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("1000 pairs in {:.3}s", start.elapsed().as_secs_f64()))
}

// 2 ------------------------------------------------------------------------

fn orthonormal_design(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    let mut q = Array2::<f64>::zeros((n, d));
    for j in 0..d {
        let mut v = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        for k in 0..j {
            let proj = v.dot(&q.column(k));
            v.scaled_add(-proj, &q.column(k));
        }
        let norm = v.dot(&v).sqrt();
        q.column_mut(j).assign(&(v / norm));
    }
    q
}

fn soft_threshold(z: f64, a: f64) -> f64 {
    z.signum() * (z.abs() - a).max(0.0)
}

fn lasso_oracle() -> Outcome {
    let start = Instant::now();
    let x = orthonormal_design(64, 8, 2);
    let mut rng = seeded(3);
    let truth = array![3.0, -2.0, 1.5, 0.0, 0.7, -0.3, 0.0, 0.1];
    let noise = Array1::from_shape_fn(64, |_| rng.random_range(-0.2..0.2));
    let y = x.dot(&truth) + noise;
    let params = LassoParams {
        tol: 1e-12,
        fit_intercept: false,
        ..LassoParams::default()
    };
    let z = x.t().dot(&y);
    let mut worst = 0.0f64;
    for alpha in [0.01, 0.1, 0.5, 1.0, 2.5] {
        let model = lasso_fit(x.view(), y.view(), alpha, &params).unwrap();
        for j in 0..8 {
            worst = worst.max((model.weights[j] - soft_threshold(z[j], alpha)).abs());
        }
    }
    check(worst <= 1e-6, format!("soft-threshold deviation {worst:e}"))?;

    let grid = alpha_grid(x.view(), y.view(), 50, 1e-4, false).unwrap();
    for alpha in [grid[0], grid[0] * 1.5] {
        let model = lasso_fit(x.view(), y.view(), alpha, &params).unwrap();
        check(model.weights.iter().all(|&w| w == 0.0), format!("α = {alpha} not all-zero"))?;
    }
    let counts: Vec<usize> = grid
        .iter()
        .map(|&a| lasso_fit(x.view(), y.view(), a, &params).unwrap().n_selected())
        .collect();
    check(counts.windows(2).all(|w| w[0] <= w[1]), format!("sparsity not monotone: {counts:?}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("max |w − S(xᵀy, α)| = {worst:.1e}"))
}

// 3 ------------------------------------------------------------------------

#[derive(Clone)]
struct Tables {
    input: Array2<f64>,
    output: Array2<f64>,
}

impl Parametric for Tables {
    fn params(&self) -> Vec<f64> {
        self.input.iter().chain(self.output.iter()).copied().collect()
    }
    fn set_params(&mut self, p: &[f64]) {
        let n = self.input.len();
        self.input.iter_mut().zip(&p[..n]).for_each(|(a, b)| *a = *b);
        self.output.iter_mut().zip(&p[n..]).for_each(|(a, b)| *a = *b);
    }
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(13);
    let tables = Tables {
        input: Array2::from_shape_fn((9, 5), |_| rng.random_range(-1.0..1.0)),
        output: Array2::from_shape_fn((9, 5), |_| rng.random_range(-1.0..1.0)),
    };
    let (context, center, negatives) = ([0, 2, 4, 7], 3, [1, 5, 6, 8, 5]);
    let cbow = grad_check(
        &tables,
        |t| {
            let obj = step_objective(t.input.view(), t.output.view(), &context, center, &negatives);
            let (gi, go) = step_gradients(t.input.view(), t.output.view(), &context, center, &negatives);
            (obj, gi.iter().chain(go.iter()).copied().collect())
        },
        1e-5,
    );

    let adjacency = array![
        [1.0, 0.0, 0.5, 0.0],
        [0.8, 0.0, 0.0, 0.0],
        [0.0, 0.3, 0.0, 0.9],
        [0.0, 0.0, 0.0, 0.0],
        [0.2, 0.7, 0.0, 0.0],
        [0.0, 0.0, 0.6, 0.4],
    ];
    let sdne_cfg = SdneConfig {
        embed_dim: 2,
        hidden_dims: vec![2],
        alpha_1st: 0.3,
        nu: 0.01,
        ..SdneConfig::default()
    };
    let sdne = grad_check(
        &SdneModel::new(4, &[2], 2, &mut seeded(5)),
        |m: &SdneModel| {
            let (loss, ge, gd) = sdne_loss_and_grad(m, &adjacency, &sdne_cfg).unwrap();
            let mut g = ge.flatten();
            g.extend(gd.flatten());
            (loss.total(), g)
        },
        1e-6,
    );

    let x = Array2::from_shape_fn((16, 4), |_| rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_fn((16, 1), |(i, _)| x[[i, 0]] - 0.5 * x[[i, 3]]);
    let net = DenseNet::new(
        &[4, 6, 4, 4, 1],
        &[Activation::Relu, Activation::Relu, Activation::Relu, Activation::Identity],
        &mut seeded(8),
    );
    let regressor = grad_check(
        &net,
        |n: &DenseNet| {
            let (pred, cache) = n.forward(x.view()).unwrap();
            let (loss, g) = half_mse(&pred, &y);
            (loss, n.backward(&cache, g.view()).unwrap().0.flatten())
        },
        1e-6,
    );
    check(cbow < 1e-4, format!("CBOW relative error {cbow:e}"))?;
    check(sdne < 1e-3, format!("SDNE relative error {sdne:e}"))?;
    check(regressor < 1e-4, format!("regressor relative error {regressor:e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("CBOW {cbow:.1e}, SDNE {sdne:.1e}, regressor {regressor:.1e}"))
}

// 4 ------------------------------------------------------------------------

/// Posterior from raw counts, multiplying probabilities directly.
fn product_form_posterior(docs: &[(Vec<String>, Polarity)], review: &[String], k: f64) -> f64 {
    let mut counts: BTreeMap<&str, [f64; 2]> = BTreeMap::new();
    let mut totals = [0.0; 2];
    let mut docs_per_class = [0.0; 2];
    for (tokens, label) in docs {
        let c = usize::from(*label == Polarity::Negative);
        docs_per_class[c] += 1.0;
        for t in tokens {
            counts.entry(t).or_default()[c] += 1.0;
            totals[c] += 1.0;
        }
    }
    let v = counts.len() as f64;
    let n = docs.len() as f64;
    let mut joint = [docs_per_class[0] / n, docs_per_class[1] / n];
    for t in review {
        if let Some(cnt) = counts.get(t.as_str()) {
            for c in 0..2 {
                joint[c] *= (cnt[c] + k) / (totals[c] + k * v);
            }
        }
    }
    joint[0] / (joint[0] + joint[1])
}

fn naive_bayes_oracle() -> Outcome {
    let mut rng = seeded(4);
    let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let mut worst = 0.0f64;
    let mut worst_swap = 0.0f64;
    for _ in 0..100 {
        let n_docs = rng.random_range(2..8);
        let mut docs: Vec<(Vec<String>, Polarity)> = (0..n_docs)
            .map(|i| {
                let len = rng.random_range(1..6);
                let tokens = (0..len).map(|_| words[rng.random_range(0..words.len())].clone()).collect();
                let label = if i % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
                (tokens, label)
            })
            .collect();
        if rng.random_bool(0.5) {
            docs.swap(0, n_docs - 1);
        }
        let k = rng.random_range(0.1..2.0);
        let review: Vec<String> = (0..rng.random_range(0..8))
            .map(|_| words[rng.random_range(0..words.len())].clone())
            .collect();
        let model = train_nb(&docs, k).unwrap();
        let score = model.score_review(&review);
        worst = worst.max((score - product_form_posterior(&docs, &review, k)).abs());
        let swapped: Vec<_> = docs.iter().map(|(t, p)| (t.clone(), p.flipped())).collect();
        let swapped_score = train_nb(&swapped, k).unwrap().score_review(&review);
        worst_swap = worst_swap.max((score + swapped_score - 1.0).abs());
    }
    check(worst <= 1e-12, format!("oracle deviation {worst:e}"))?;
    check(worst_swap <= 1e-12, format!("label-swap deviation {worst_swap:e}"))?;
    Ok(format!("oracle {worst:.1e}, swap {worst_swap:.1e}"))
}

// 5 ------------------------------------------------------------------------

fn cosine_law_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dl = (b.longitude - a.longitude).to_radians();
    let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
    6371.004 * c.acos()
}

fn haversine_checks() -> Outcome {
    let mut rng = seeded(5);
    let antipodal = std::f64::consts::PI * 6371.004;
    for (a, b) in [
        (GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 180.0)),
        (GeoPoint::new(39.9, 116.4), GeoPoint::new(-39.9, -63.6)),
        (GeoPoint::new(90.0, 0.0), GeoPoint::new(-90.0, 0.0)),
    ] {
        let d = haversine_km(a, b);
        check((d - antipodal).abs() <= 1e-6, format!("antipodal {a:?} {b:?}: {d}"))?;
    }
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = GeoPoint::new(rng.random_range(-90.0..90.0), rng.random_range(-180.0..180.0));
        let b = GeoPoint::new(rng.random_range(-90.0..90.0), rng.random_range(-180.0..180.0));
        check(haversine_km(a, a) == 0.0, format!("d(p, p) ≠ 0 at {a:?}"))?;
        check(haversine_km(a, b) == haversine_km(b, a), format!("asymmetric at {a:?} {b:?}"))?;
        worst = worst.max((haversine_km(a, b) - cosine_law_km(a, b)).abs());
    }
    check(worst <= 1e-6, format!("cosine-law deviation {worst:e} km"))?;
    Ok(format!("cosine-law deviation {worst:.1e} km"))
}

// 6, 7, 8 --------------------------------------------------------------------

fn run_pipeline(config_json: &str, dir: &Path) -> Result<Duration, String> {
    let config = PipelineConfig::from_json(config_json).map_err(|e| e.to_string())?;
    let start = Instant::now();
    Pipeline::new(config, dir)
        .and_then(|p| p.run_all())
        .map_err(|e| e.to_string())?;
    Ok(start.elapsed())
}

fn test_r2(dir: &Path) -> Result<HashMap<String, f64>, String> {
    let text = std::fs::read_to_string(dir.join("ablation_report.json")).map_err(|e| e.to_string())?;
    let reports: Vec<MetricReport> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(reports.into_iter().map(|r| (r.variant, r.r2)).collect())
}

fn ablation_ordering(default_run: &Path, no_spatial_run: &Path, elapsed: Duration) -> Outcome {
    let r = test_r2(default_run)?;
    let (s, st, stp) = (r["S"], r["ST"], r["STP"]);
    let summary = format!("R² S {s:.3}, ST {st:.3}, STP {stp:.3}");
    check(st - s >= 0.05, format!("{summary}: ST − S < 0.05"))?;
    check(stp - st >= 0.05, format!("{summary}: STP − ST < 0.05"))?;
    check(stp >= 0.6, format!("{summary}: STP < 0.6"))?;
    let r0 = test_r2(no_spatial_run)?;
    let gap = r0["STP"] - r0["ST"];
    check(gap < 0.03, format!("{summary}; spatial_w = 0 gap {gap:.3} ≥ 0.03"))?;
    within(elapsed, 300.0)?;
    Ok(format!(
        "{summary}; spatial_w = 0: STP − ST = {gap:.3}; {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn loss_curve_shape(run: &Path) -> Outcome {
    let text = std::fs::read_to_string(run.join("loss_curve.csv")).map_err(|e| e.to_string())?;
    let loss: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    check(loss.len() == 120, format!("curve length {}", loss.len()))?;
    let ratio = loss[119] / loss[0];
    check(ratio < 0.5, format!("final/initial = {ratio:.3}"))?;
    let avg: Vec<f64> = loss.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    let worst_rise = avg.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    check(worst_rise <= 0.0, format!("moving average rises by {worst_rise:e}"))?;
    Ok(format!("120 epochs, final/initial {ratio:.3}"))
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let (a, b) = (files_under(first), files_under(second));
    check(
        a.keys().eq(b.keys()),
        format!("file sets differ: {:?} vs {:?}", a.keys(), b.keys()),
    )?;
    check(a.contains_key(Path::new("manifest.json")), "no manifest written")?;
    for (path, bytes) in &a {
        check(bytes == &b[path], format!("{} differs", path.display()))?;
    }
    Ok(format!("{} files byte-identical", a.len()))
}

// 9 ------------------------------------------------------------------------

fn sdne_invariants() -> Outcome {
    let mut rng = seeded(9);
    let mut a = Array2::from_shape_fn((30, 20), |_| {
        if rng.random_bool(0.2) {
            rng.random_range(0.05..1.0)
        } else {
            0.0
        }
    });
    let row = a.row(3).to_owned();
    a.row_mut(17).assign(&row);
    a.row_mut(25).assign(&row);
    let (model, _) = train_sdne(&a, &SdneConfig::default()).map_err(|e| e.to_string())?;
    let e = model.embed(a.view()).map_err(|e| e.to_string())?;
    check(e.row(3) == e.row(17) && e.row(3) == e.row(25), "identical rows embed differently")?;

    let mut rng = seeded(50);
    let fixture = Array2::from_shape_fn((50, 100), |_| {
        if rng.random_bool(0.03) {
            rng.random_range(0.05..1.0)
        } else {
            0.0
        }
    });
    let (_, report) = train_sdne(&fixture, &SdneConfig::default()).map_err(|e| e.to_string())?;
    let ratio = report.epoch_loss[49].reconstruction / report.epoch_loss[0].reconstruction;
    check(report.epoch_loss.len() == 50, "expected 50 epochs")?;
    check(ratio <= 0.5, format!("reconstruction ratio {ratio:.3}"))?;
    Ok(format!("reconstruction after/before {ratio:.3}"))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let (run_a, run_b, run_w0) = (work.path().join("a"), work.path().join("b"), work.path().join("w0"));

    let pipelines = std::thread::scope(|s| {
        let a = s.spawn(|| run_pipeline("{}", &run_a));
        let b = s.spawn(|| run_pipeline("{}", &run_b));
        let w0 = s.spawn(|| run_pipeline(r#"{"synth": {"spatial_w": 0.0}}"#, &run_w0));
        (a.join().unwrap(), b.join().unwrap(), w0.join().unwrap())
    });

    let results: Vec<(&str, Outcome)> = vec![
        ("1 metric identities", metric_identities()),
        ("2 lasso soft-threshold oracle", lasso_oracle()),
        ("3 gradient checks", gradient_checks()),
        ("4 naive Bayes product-form oracle", naive_bayes_oracle()),
        ("5 haversine", haversine_checks()),
        (
            "6 ablation ordering",
            match (&pipelines.0, &pipelines.2) {
                (Ok(t), Ok(_)) => ablation_ordering(&run_a, &run_w0, *t),
                (Err(e), _) | (_, Err(e)) => Err(format!("pipeline failed: {e}")),
            },
        ),
        (
            "7 loss-curve shape",
            pipelines.0.as_ref().map_err(|e| e.clone()).and_then(|_| loss_curve_shape(&run_a)),
        ),
        (
            "8 determinism",
            match (&pipelines.0, &pipelines.1) {
                (Ok(_), Ok(_)) => determinism(&run_a, &run_b),
                (Err(e), _) | (_, Err(e)) => Err(format!("pipeline failed: {e}")),
            },
        ),
        ("9 SDNE invariants", sdne_invariants()),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
