use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use ndarray::{s, Array1};
use serde::{Deserialize, Serialize};

use super::{Pipeline, PipelineError, SelectionMethod, Stage, StageIo, DATA_DIR, GRAPHS_DIR};
use crate::corpus::{
    dataset_stats, read_listings, read_pois, read_reviews, temporal_split, ListingTable, PoiTable, ReviewTable,
    RowRejection,
};
use crate::eval::{
    evaluate_model, reports_to_csv, run_ablation, synth_generate, MetricReport, SynthConfig, LISTINGS_FILE,
    POIS_FILE, REVIEWS_FILE,
};
use crate::fusion::{fuse, Block, FeatureBundle, PriceModel, RegressorConfig};
use crate::sentiment::{listing_sentiment, parse_labeled_corpus, seed_corpus, train_nb, SentimentVector};
use crate::spatial::{build_graphs, embed_spatial, SdneConfig, SpatialFeatures};
use crate::stats::{
    alpha_grid, lasso_cv, pvalue_rank, select_features, CvReport, LassoModel, LassoParams, StandardScaler,
    StatFeatureMatrix, StatImputer, TargetTransform,
};
use crate::text::{build_vocab, embed_listing_texts, tokenize, train_cbow, CbowConfig, TextFeatures, WhitespaceTokenizer};

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8], name: &str) -> Result<T, PipelineError> {
    serde_json::from_slice(bytes).map_err(|e| PipelineError::Data(format!("malformed {name}: {e}")))
}

fn tsv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

pub(super) fn execute(p: &Pipeline, stage: Stage, seed: u64, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    match stage {
        Stage::Synth => synth(p, seed, io),
        Stage::Ingest => ingest(p, io),
        Stage::Stats => stats(p, io),
        Stage::SelectFeatures => select(p, io),
        Stage::TrainText => train_text(p, seed, io),
        Stage::Sentiment => sentiment(p, io),
        Stage::BuildGraphs => graphs(p, io),
        Stage::EmbedSpatial => spatial(p, seed, io),
        Stage::Fuse => fuse_stage(io),
        Stage::Train => train(p, io),
        Stage::Evaluate => evaluate(p, io),
        Stage::Ablate => ablate(p, io),
        Stage::Predict => predict(p, io),
    }
}

/// The regressor seed is shared by `train` and `ablate` so that the STP
/// ablation row and the trained STP model coincide.
fn regressor_config(p: &Pipeline) -> RegressorConfig {
    RegressorConfig {
        seed: crate::rng::derive_seed(p.config.seed, "regressor"),
        ..p.config.regressor.clone()
    }
}

fn synth(p: &Pipeline, seed: u64, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let cfg = SynthConfig {
        seed,
        ..p.config.synth.clone()
    };
    let data = synth_generate(&cfg).map_err(PipelineError::Config)?;
    for (name, bytes) in data.to_files()? {
        io.write(&format!("{DATA_DIR}/{name}"), &bytes)?;
    }
    Ok(())
}

fn input_paths(p: &Pipeline) -> (PathBuf, PathBuf, PathBuf) {
    let i = &p.config.input;
    match (&i.listings, &i.reviews, &i.pois) {
        (Some(l), Some(r), Some(q)) => (l.clone(), r.clone(), q.clone()),
        _ => {
            let d = p.out_dir.join(DATA_DIR);
            (d.join(LISTINGS_FILE), d.join(REVIEWS_FILE), d.join(POIS_FILE))
        }
    }
}

struct Corpus {
    listings: ListingTable,
    reviews: ReviewTable,
    pois: PoiTable,
    orphan_reviews: usize,
}

fn load_listings(p: &Pipeline, io: &mut StageIo<'_>) -> Result<ListingTable, PipelineError> {
    let (l, _, _) = input_paths(p);
    let table = read_listings(io.read(&l)?.as_slice(), None)?;
    if table.is_empty() {
        return Err(PipelineError::Data("listing table has no valid rows".into()));
    }
    Ok(table)
}

fn load_pois(p: &Pipeline, io: &mut StageIo<'_>) -> Result<PoiTable, PipelineError> {
    let (_, _, q) = input_paths(p);
    Ok(read_pois(io.read(&q)?.as_slice())?)
}

/// Reviews whose listing is unknown are dropped and counted.
fn load_reviews(p: &Pipeline, io: &mut StageIo<'_>, listings: &ListingTable) -> Result<(ReviewTable, usize), PipelineError> {
    let (_, r, _) = input_paths(p);
    let mut reviews = read_reviews(io.read(&r)?.as_slice())?;
    let index = listings.index_by_id();
    let before = reviews.records.len();
    reviews.records.retain(|r| index.contains_key(r.listing_id.as_str()));
    let orphans = before - reviews.records.len();
    Ok((reviews, orphans))
}

fn load_corpus(p: &Pipeline, io: &mut StageIo<'_>) -> Result<Corpus, PipelineError> {
    let listings = load_listings(p, io)?;
    let (reviews, orphan_reviews) = load_reviews(p, io, &listings)?;
    let pois = load_pois(p, io)?;
    Ok(Corpus {
        listings,
        reviews,
        pois,
        orphan_reviews,
    })
}

#[derive(Serialize)]
struct Rejection {
    row: usize,
    reason: String,
}

fn rejections(rows: &[RowRejection]) -> Vec<Rejection> {
    rows.iter()
        .map(|r| Rejection {
            row: r.row,
            reason: r.error.to_string(),
        })
        .collect()
}

#[derive(Serialize)]
struct IngestReport {
    listings: usize,
    reviews: usize,
    pois: usize,
    train: usize,
    test: usize,
    stat_columns: Vec<String>,
    rejected_listings: Vec<Rejection>,
    rejected_reviews: Vec<Rejection>,
    rejected_pois: Vec<Rejection>,
    empty_reviews_dropped: usize,
    orphan_reviews_dropped: usize,
}

fn ingest(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let c = load_corpus(p, io)?;
    let (train, test) = temporal_split(&c.listings, p.config.split.train_ratio)?;
    let mut split = String::from("listing_id,split\n");
    for r in &train.records {
        split.push_str(&format!("{},train\n", r.listing_id));
    }
    for r in &test.records {
        split.push_str(&format!("{},test\n", r.listing_id));
    }
    let report = IngestReport {
        listings: c.listings.len(),
        reviews: c.reviews.len(),
        pois: c.pois.len(),
        train: train.len(),
        test: test.len(),
        stat_columns: c.listings.stat_columns.clone(),
        rejected_listings: rejections(&c.listings.rejected),
        rejected_reviews: rejections(&c.reviews.rejected),
        rejected_pois: rejections(&c.pois.rejected),
        empty_reviews_dropped: c.reviews.dropped_empty,
        orphan_reviews_dropped: c.orphan_reviews,
    };
    io.write("split.csv", split.as_bytes())?;
    io.write("ingest_report.json", &json(&report))
}

/// Listing ids of the train and test sets, each in temporal order.
fn read_split(io: &mut StageIo<'_>) -> Result<(Vec<String>, Vec<String>), PipelineError> {
    let bytes = io.read_artifact("split.csv")?;
    let text = String::from_utf8_lossy(&bytes);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for line in text.lines().skip(1) {
        match line.rsplit_once(',') {
            Some((id, "train")) => train.push(id.to_string()),
            Some((id, "test")) => test.push(id.to_string()),
            _ => return Err(PipelineError::Data(format!("malformed split.csv line `{line}`"))),
        }
    }
    Ok((train, test))
}

fn rows_of(ids: &[String], index: &HashMap<&str, usize>) -> Result<Vec<usize>, PipelineError> {
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| PipelineError::Data(format!("split lists unknown listing `{id}`")))
        })
        .collect()
}

fn stats(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let c = load_corpus(p, io)?;
    io.write("dataset_summary.json", &json(&dataset_stats(&c.listings, &c.reviews, &c.pois)))
}

#[derive(Serialize, Deserialize)]
struct SelectionReport {
    method: SelectionMethod,
    selected_columns: Vec<String>,
    imputer: StatImputer,
    scaler: StandardScaler,
    #[serde(skip_serializing_if = "Option::is_none")]
    lasso: Option<LassoModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<CvReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pvalues: Option<Vec<(String, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct TargetArtifact {
    kind: String,
    #[serde(flatten)]
    transform: TargetTransform,
}

fn select(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let listings = load_listings(p, io)?;
    let (train_ids, _) = read_split(io)?;
    let index = listings.index_by_id();
    let train_rows = rows_of(&train_ids, &index)?;

    let imputer = StatImputer::fit(&listings, &train_rows);
    let x_all = imputer.transform(&listings)?;
    let scaler = StandardScaler::fit(&x_all.select_rows(&train_rows))?;
    let x_all = scaler.transform(&x_all)?;
    let x_train = x_all.select_rows(&train_rows);

    let prices: Vec<f64> = listings.records.iter().map(|r| r.price).collect();
    let train_prices: Vec<f64> = train_rows.iter().map(|&i| prices[i]).collect();
    let target = TargetTransform::fit(&train_prices)?;
    let y_train = Array1::from_iter(train_prices.iter().map(|&v| target.forward(v)));

    let cfg = &p.config.lasso;
    let mut report = SelectionReport {
        method: cfg.method,
        selected_columns: Vec::new(),
        imputer,
        scaler,
        lasso: None,
        cv: None,
        pvalues: None,
    };
    let selected = match cfg.method {
        SelectionMethod::LassoCv => {
            let params = LassoParams {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                ..LassoParams::default()
            };
            let grid = alpha_grid(x_train.values.view(), y_train.view(), cfg.n_alphas, cfg.alpha_ratio, true)?;
            let (_, model, cv) = lasso_cv(x_train.values.view(), y_train.view(), &grid, cfg.folds, &params)?;
            let selected = select_features(&model, &x_all)?;
            report.lasso = Some(model);
            report.cv = Some(cv);
            selected
        }
        SelectionMethod::Pvalue => {
            let ranked = pvalue_rank(&x_train, y_train.view(), cfg.top_k.min(x_train.ncols()))?;
            let names: Vec<String> = ranked.iter().map(|(n, _)| n.clone()).collect();
            report.pvalues = Some(ranked);
            x_all.select_columns(&names)?
        }
        SelectionMethod::Manual => {
            if let Some(missing) = cfg.columns.iter().find(|c| !x_all.column_names.contains(c)) {
                return Err(PipelineError::Config(format!(
                    "lasso.columns names `{missing}`, which is not a usable statistical column"
                )));
            }
            x_all.select_columns(&cfg.columns)?
        }
    };
    report.selected_columns = selected.column_names.clone();

    let mut target_csv = String::from("listing_id,price,y\n");
    for (r, &price) in listings.records.iter().zip(&prices) {
        target_csv.push_str(&format!("{},{},{}\n", r.listing_id, price, target.forward(price)));
    }
    io.write("lasso_model.json", &json(&report))?;
    io.write("stat_features.tsv", &tsv(|b| selected.write_tsv(b)))?;
    io.write("target.csv", target_csv.as_bytes())?;
    io.write(
        "target_transform.json",
        &json(&TargetArtifact {
            kind: TargetTransform::KIND.to_string(),
            transform: target,
        }),
    )
}

fn train_text(p: &Pipeline, seed: u64, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let listings = load_listings(p, io)?;
    let corpus: Vec<Vec<String>> = listings
        .records
        .iter()
        .flat_map(|r| [tokenize(&r.description), tokenize(&r.host_about)])
        .filter(|d| !d.is_empty())
        .collect();
    let cfg = CbowConfig {
        seed,
        ..p.config.cbow.clone()
    };
    let vocab = build_vocab(&corpus, cfg.min_count)?;
    let (wv, report) = train_cbow(&corpus, &vocab, &cfg)?;
    let features = embed_listing_texts(&listings, &wv, &WhitespaceTokenizer);
    io.write("word_vectors.tsv", &tsv(|b| wv.write_tsv(b)))?;
    io.write("text_features.tsv", &tsv(|b| features.write_tsv(b)))?;
    io.write("cbow_report.json", &json(&report))
}

fn sentiment(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let listings = load_listings(p, io)?;
    let (reviews, _) = load_reviews(p, io, &listings)?;
    let docs = match &p.config.nb.corpus {
        Some(path) => parse_labeled_corpus(&String::from_utf8_lossy(&io.read(path)?))?,
        None => seed_corpus(),
    };
    let model = train_nb(&docs, p.config.nb.smoothing)?;
    let mut by_listing: HashMap<String, Vec<Vec<String>>> = HashMap::new();
    for r in &reviews.records {
        by_listing.entry(r.listing_id.clone()).or_default().push(tokenize(&r.text));
    }
    let vector = listing_sentiment(&model, &listings.ids(), &by_listing);
    let mut buf = Vec::new();
    vector.write_csv(&mut buf)?;
    io.write("sentiment.csv", &buf)
}

#[derive(Serialize)]
struct GraphSummary {
    pois: usize,
    edges: usize,
    isolated_listings: usize,
}

fn graphs(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let listings = load_listings(p, io)?;
    let pois = load_pois(p, io)?;
    let mut summary = BTreeMap::new();
    for g in build_graphs(&listings, &pois, p.config.spatial.radius_km) {
        io.write(&format!("{GRAPHS_DIR}/{}.tsv", g.category.slug()), &tsv(|b| g.write_tsv(b)))?;
        summary.insert(
            g.category.name().to_string(),
            GraphSummary {
                pois: g.n_pois(),
                edges: g.edges.len(),
                isolated_listings: g.isolated().iter().filter(|&&f| f).count(),
            },
        );
    }
    io.write("graph_summary.json", &json(&summary))
}

#[derive(Serialize)]
struct SdneSummary {
    trained: bool,
    epochs: usize,
    first_loss: Option<f64>,
    final_loss: Option<f64>,
    first_reconstruction: Option<f64>,
    final_reconstruction: Option<f64>,
}

fn spatial(p: &Pipeline, seed: u64, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let listings = load_listings(p, io)?;
    let pois = load_pois(p, io)?;
    let cfg = SdneConfig {
        seed,
        ..p.config.spatial.sdne.clone()
    };
    let (features, details) = embed_spatial(&listings, &pois, &cfg, p.config.spatial.radius_km)?;
    let mut summary = BTreeMap::new();
    for d in &details {
        let losses = d.report.as_ref().map(|r| r.epoch_loss.as_slice()).unwrap_or(&[]);
        summary.insert(
            d.category.name().to_string(),
            SdneSummary {
                trained: d.report.is_some(),
                epochs: losses.len(),
                first_loss: losses.first().map(|l| l.total()),
                final_loss: losses.last().map(|l| l.total()),
                first_reconstruction: losses.first().map(|l| l.reconstruction),
                final_reconstruction: losses.last().map(|l| l.reconstruction),
            },
        );
    }
    io.write("spatial_features.tsv", &tsv(|b| features.write_tsv(b)))?;
    io.write("sdne_report.json", &json(&summary))
}

#[derive(Serialize, Deserialize)]
struct FusedLayout {
    s_columns: Vec<String>,
    l_dim: usize,
    h_dim: usize,
    p_columns: Vec<String>,
}

fn read_target(io: &mut StageIo<'_>) -> Result<HashMap<String, f64>, PipelineError> {
    let bytes = io.read_artifact("target.csv")?;
    let mut out = HashMap::new();
    for line in String::from_utf8_lossy(&bytes).lines().skip(1) {
        let mut f = line.split(',');
        let (id, _, y) = (f.next(), f.next(), f.next());
        let y = y
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| PipelineError::Data(format!("malformed target.csv line `{line}`")))?;
        out.insert(id.unwrap_or_default().to_string(), y);
    }
    Ok(out)
}

fn fuse_stage(io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let s = StatFeatureMatrix::read_tsv(io.read_artifact("stat_features.tsv")?.as_slice())?;
    let target = read_target(io)?;
    let text = TextFeatures::read_tsv(io.read_artifact("text_features.tsv")?.as_slice())?;
    let sentiment = SentimentVector::read_csv(io.read_artifact("sentiment.csv")?.as_slice())?;
    let spatial = SpatialFeatures::read_tsv(io.read_artifact("spatial_features.tsv")?.as_slice())?;
    let y = s
        .listing_ids
        .iter()
        .map(|id| {
            target
                .get(id)
                .copied()
                .ok_or_else(|| PipelineError::Data(format!("listing `{id}` has no target")))
        })
        .collect::<Result<Array1<f64>, _>>()?;
    let bundle = fuse(&s, &text, &sentiment, &spatial, &y)?;
    let layout = FusedLayout {
        s_columns: bundle.s_columns.clone(),
        l_dim: bundle.l.ncols(),
        h_dim: bundle.h.ncols(),
        p_columns: bundle.p_columns.clone(),
    };
    io.write("fused.tsv", &tsv(|b| bundle.write_tsv(b)))?;
    io.write("fused_layout.json", &json(&layout))
}

fn read_bundle(io: &mut StageIo<'_>) -> Result<FeatureBundle, PipelineError> {
    let layout: FusedLayout = parse_json(&io.read_artifact("fused_layout.json")?, "fused_layout.json")?;
    let (ids, columns, m) = crate::tsv::read_matrix(io.read_artifact("fused.tsv")?.as_slice())
        .map_err(|e| PipelineError::Data(format!("fused.tsv: {e}")))?;
    let d_s = layout.s_columns.len();
    let (l0, h0) = (d_s, d_s + layout.l_dim);
    let r0 = h0 + layout.h_dim;
    let p0 = r0 + 1;
    let y0 = p0 + layout.p_columns.len();
    if columns.len() != y0 + 1 {
        return Err(PipelineError::Data("fused.tsv does not match fused_layout.json".into()));
    }
    Ok(FeatureBundle {
        listing_ids: ids,
        s: m.slice(s![.., ..l0]).to_owned(),
        l: m.slice(s![.., l0..h0]).to_owned(),
        h: m.slice(s![.., h0..r0]).to_owned(),
        r: m.slice(s![.., r0..p0]).to_owned(),
        p: m.slice(s![.., p0..y0]).to_owned(),
        y: m.column(y0).to_owned(),
        s_columns: layout.s_columns,
        p_columns: layout.p_columns,
    })
}

/// Fused bundle split into (train, test) by `split.csv`.
fn split_bundle(io: &mut StageIo<'_>) -> Result<(FeatureBundle, FeatureBundle), PipelineError> {
    let bundle = read_bundle(io)?;
    let (train_ids, test_ids) = read_split(io)?;
    let index: HashMap<&str, usize> = bundle
        .listing_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let train = bundle.select_rows(&rows_of(&train_ids, &index)?);
    let test = bundle.select_rows(&rows_of(&test_ids, &index)?);
    Ok((train, test))
}

fn read_target_transform(io: &mut StageIo<'_>) -> Result<TargetTransform, PipelineError> {
    let t: TargetArtifact = parse_json(&io.read_artifact("target_transform.json")?, "target_transform.json")?;
    Ok(t.transform)
}

fn train(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let (train, _) = split_bundle(io)?;
    let target = read_target_transform(io)?;
    let model = crate::fusion::train_price_model(&train, p.variant.blocks(), target, &regressor_config(p))?;
    io.write("model.json", model.to_json().as_bytes())?;
    io.write("loss_curve.csv", model.loss_curve_csv().as_bytes())
}

fn read_model(io: &mut StageIo<'_>) -> Result<PriceModel, PipelineError> {
    let bytes = io.read_artifact("model.json")?;
    Ok(PriceModel::from_json(&String::from_utf8_lossy(&bytes))?)
}

/// Whether `model.json` was trained on the pipeline's current variant.
pub(super) fn model_blocks_match(p: &Pipeline) -> bool {
    #[derive(Deserialize)]
    struct Blocks {
        blocks: Vec<Block>,
    }
    std::fs::read(p.out_path("model.json"))
        .ok()
        .and_then(|b| serde_json::from_slice::<Blocks>(&b).ok())
        .is_some_and(|m| m.blocks == p.variant.blocks())
}

#[derive(Serialize)]
struct Metrics {
    variant: String,
    train: MetricReport,
    test: MetricReport,
}

fn evaluate(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let model = read_model(io)?;
    let (train, test) = split_bundle(io)?;
    let metrics = Metrics {
        variant: p.variant.name().to_string(),
        train: evaluate_model(&model, &train, p.variant.name())?,
        test: evaluate_model(&model, &test, p.variant.name())?,
    };
    io.write("metrics.json", &json(&metrics))
}

fn ablate(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let (train, test) = split_bundle(io)?;
    let target = read_target_transform(io)?;
    let outcomes = run_ablation(&train, &test, &p.config.ablation.variants, target, &regressor_config(p));
    let mut reports = Vec::new();
    let mut first_error = None;
    for o in outcomes {
        match o.result {
            Ok((report, model)) => {
                io.write(&format!("loss_curve_{}.csv", o.variant), model.loss_curve_csv().as_bytes())?;
                reports.push(report);
            }
            Err(e) => {
                first_error.get_or_insert(PipelineError::from(e));
            }
        }
    }
    io.write("ablation_report.csv", reports_to_csv(&reports).as_bytes())?;
    io.write("ablation_report.json", &json(&reports))?;
    first_error.map_or(Ok(()), Err)
}

fn predict(p: &Pipeline, io: &mut StageIo<'_>) -> Result<(), PipelineError> {
    let _ = p;
    let model = read_model(io)?;
    let bundle = read_bundle(io)?;
    let (train_ids, _) = read_split(io)?;
    let train: std::collections::HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    let pred = model.predict(&bundle)?;
    let mut out = String::from("listing_id,split,price,predicted_price,y,predicted_y\n");
    for i in 0..bundle.len() {
        let id = &bundle.listing_ids[i];
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            id,
            if train.contains(id.as_str()) { "train" } else { "test" },
            model.target.inverse(bundle.y[i]),
            pred.price[i],
            bundle.y[i],
            pred.y[i]
        ));
    }
    io.write("predictions.csv", out.as_bytes())
}
