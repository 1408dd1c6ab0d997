use std::collections::HashMap;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{TextError, Vocab};
use crate::nn::sigmoid;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate; decays linearly to `min_learning_rate`.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            min_count: 2,
            seed: 42,
        }
    }
}

impl CbowConfig {
    fn validate(&self) -> Result<(), TextError> {
        if self.dim == 0 {
            return Err(TextError::InvalidConfig("dim must be at least 1".into()));
        }
        if self.negatives == 0 {
            return Err(TextError::InvalidConfig("negatives must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(TextError::InvalidConfig("window must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TextError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Input vectors `v(w)` (the embeddings) and output vectors `θ(w)`, one row
/// per vocabulary index.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pub input: Array2<f64>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbowReport {
    /// Mean per-position objective seen during each epoch.
    pub epoch_objective: Vec<f64>,
    pub positions_per_epoch: usize,
}

impl WordVectors {
    pub fn new(tokens: Vec<String>, input: Array2<f64>, output: Array2<f64>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        WordVectors {
            tokens,
            index,
            input,
            output,
        }
    }

    pub fn dim(&self) -> usize {
        self.input.ncols()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Writes input vectors as `V D` followed by `token\tv1 v2 … vD` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim())?;
        for (t, row) in self.tokens.iter().zip(self.input.rows()) {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{t}\t{}", vals.join(" "))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_tsv`](Self::write_tsv). Output
    /// vectors are not persisted and come back as zeros.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<WordVectors, TextError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| TextError::Format("missing header".into()))?
            .map_err(|e| TextError::Format(e.to_string()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| TextError::Format(format!("bad header `{header}`"))))
            .collect::<Result<_, _>>()?;
        let [v, d] = dims[..] else {
            return Err(TextError::Format(format!("bad header `{header}`")));
        };
        let mut tokens = Vec::with_capacity(v);
        let mut data = Vec::with_capacity(v * d);
        for line in lines {
            let line = line.map_err(|e| TextError::Format(e.to_string()))?;
            let (tok, vals) = line
                .split_once('\t')
                .ok_or_else(|| TextError::Format("line without tab".into()))?;
            let before = data.len();
            for s in vals.split(' ') {
                data.push(s.parse::<f64>().map_err(|_| TextError::Format(format!("bad value `{s}`")))?);
            }
            if data.len() - before != d {
                return Err(TextError::Format(format!("token `{tok}` has wrong width")));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != v {
            return Err(TextError::Format(format!("expected {v} rows, found {}", tokens.len())));
        }
        let input = Array2::from_shape_vec((v, d), data).map_err(|e| TextError::Format(e.to_string()))?;
        Ok(WordVectors::new(tokens, input, Array2::zeros((v, d))))
    }
}

fn context_mean(input: ArrayView2<'_, f64>, context: &[usize]) -> Array1<f64> {
    let mut x = Array1::zeros(input.ncols());
    for &c in context {
        x += &input.row(c);
    }
    x / context.len() as f64
}

/// Negative-sampling objective of one CBOW step:
/// `log σ(x·θ(center)) + Σ_u log σ(−x·θ(u))` with `x` the mean context input vector.
pub fn step_objective(
    input: ArrayView2<'_, f64>,
    output: ArrayView2<'_, f64>,
    context: &[usize],
    center: usize,
    negatives: &[usize],
) -> f64 {
    let x = context_mean(input, context);
    let pos = x.dot(&output.row(center));
    let mut obj = sigmoid(pos).ln();
    for &u in negatives {
        obj += sigmoid(-x.dot(&output.row(u))).ln();
    }
    obj
}

/// Exact gradients of [`step_objective`] w.r.t. every input and output
/// vector (ascent direction). Returns `(d/d input, d/d output)`.
pub fn step_gradients(
    input: ArrayView2<'_, f64>,
    output: ArrayView2<'_, f64>,
    context: &[usize],
    center: usize,
    negatives: &[usize],
) -> (Array2<f64>, Array2<f64>) {
    let x = context_mean(input, context);
    let mut g_in = Array2::zeros(input.raw_dim());
    let mut g_out = Array2::zeros(output.raw_dim());
    let mut g_x = Array1::<f64>::zeros(x.len());
    let targets = std::iter::once((center, 1.0)).chain(negatives.iter().map(|&u| (u, 0.0)));
    for (u, label) in targets {
        let g = label - sigmoid(x.dot(&output.row(u)));
        g_x.scaled_add(g, &output.row(u));
        g_out.row_mut(u).scaled_add(g, &x);
    }
    let share = 1.0 / context.len() as f64;
    for &c in context {
        g_in.row_mut(c).scaled_add(share, &g_x);
    }
    (g_in, g_out)
}

/// One in-place update. The context vectors each receive `η · ∂L/∂x`
/// (the mean's gradient, not divided by the context size). Returns the
/// step objective evaluated before the update.
#[allow(clippy::too_many_arguments)]
fn train_step(
    input: &mut Array2<f64>,
    output: &mut Array2<f64>,
    context: &[usize],
    center: usize,
    negatives: &[usize],
    lr: f64,
    x: &mut Array1<f64>,
    grad_x: &mut Array1<f64>,
) -> f64 {
    x.fill(0.0);
    for &c in context {
        *x += &input.row(c);
    }
    *x /= context.len() as f64;
    grad_x.fill(0.0);
    let mut obj = 0.0;
    let targets = std::iter::once((center, 1.0)).chain(negatives.iter().map(|&u| (u, 0.0)));
    for (u, label) in targets {
        let f = x.dot(&output.row(u));
        let s = sigmoid(f);
        obj += if label > 0.0 { s.ln() } else { sigmoid(-f).ln() };
        let g = label - s;
        grad_x.scaled_add(g, &output.row(u));
        output.row_mut(u).scaled_add(lr * g, &*x);
    }
    for &c in context {
        input.row_mut(c).scaled_add(lr, &*grad_x);
    }
    obj
}

fn encode<S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocab) -> Vec<Vec<usize>> {
    corpus
        .iter()
        .map(|doc| doc.iter().filter_map(|t| vocab.get(t.as_ref())).collect())
        .collect()
}

/// Trains CBOW word vectors by stochastic gradient ascent on the
/// negative-sampling objective. Single-threaded and fully determined by
/// `config.seed`. Each document is a sentence; windows do not cross documents.
pub fn train_cbow<S: AsRef<str>>(
    corpus: &[Vec<S>],
    vocab: &Vocab,
    config: &CbowConfig,
) -> Result<(WordVectors, CbowReport), TextError> {
    config.validate()?;
    let docs = encode(corpus, vocab);
    let positions: usize = docs.iter().map(Vec::len).sum();
    if positions == 0 {
        return Err(TextError::EmptyCorpus);
    }
    let mut rng = seeded(config.seed);
    let (v, d) = (vocab.len(), config.dim);
    let bound = 0.5 / d as f64;
    let mut input = Array2::from_shape_fn((v, d), |_| rng.random_range(-bound..bound));
    let mut output = Array2::zeros((v, d));

    let total = (positions * config.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_objective = Vec::with_capacity(config.epochs);
    let mut context = Vec::with_capacity(2 * config.window);
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut x = Array1::zeros(d);
    let mut grad_x = Array1::zeros(d);

    for epoch in 0..config.epochs {
        let mut sum = 0.0;
        let mut steps = 0usize;
        for doc in &docs {
            for (i, &center) in doc.iter().enumerate() {
                let lr = config.learning_rate
                    - (config.learning_rate - config.min_learning_rate) * (processed as f64 / total);
                processed += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window + 1).min(doc.len());
                context.clear();
                context.extend((lo..hi).filter(|&j| j != i).map(|j| doc[j]));
                if context.is_empty() {
                    continue;
                }
                negatives.clear();
                for _ in 0..config.negatives {
                    let u = vocab.sample_negative(&mut rng);
                    if u != center {
                        negatives.push(u);
                    }
                }
                sum += train_step(
                    &mut input,
                    &mut output,
                    &context,
                    center,
                    &negatives,
                    lr,
                    &mut x,
                    &mut grad_x,
                );
                steps += 1;
            }
        }
        let mean = if steps > 0 { sum / steps as f64 } else { 0.0 };
        if !mean.is_finite() || !input.iter().all(|v| v.is_finite()) {
            return Err(TextError::NonFinite { epoch });
        }
        epoch_objective.push(mean);
    }
    let wv = WordVectors::new(vocab.tokens().to_vec(), input, output);
    Ok((
        wv,
        CbowReport {
            epoch_objective,
            positions_per_epoch: positions,
        },
    ))
}

/// Mean step objective over the corpus under fixed, seeded negatives.
/// Does not update anything.
pub fn corpus_objective<S: AsRef<str>>(
    wv: &WordVectors,
    corpus: &[Vec<S>],
    vocab: &Vocab,
    window: usize,
    negatives: usize,
    seed: u64,
) -> f64 {
    let docs = encode(corpus, vocab);
    let mut rng = seeded(seed);
    let (mut sum, mut steps) = (0.0, 0usize);
    for doc in &docs {
        for (i, &center) in doc.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(doc.len());
            let context: Vec<usize> = (lo..hi).filter(|&j| j != i).map(|j| doc[j]).collect();
            if context.is_empty() {
                continue;
            }
            let negs: Vec<usize> = (0..negatives)
                .map(|_| vocab.sample_negative(&mut rng))
                .filter(|&u| u != center)
                .collect();
            sum += step_objective(wv.input.view(), wv.output.view(), &context, center, &negs);
            steps += 1;
        }
    }
    sum / steps.max(1) as f64
}
