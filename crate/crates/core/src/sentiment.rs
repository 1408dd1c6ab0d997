//! Review sentiment: multinomial naive Bayes with Laplace smoothing, scored
//! in log space, averaged per listing into a score in `[0, 1]`.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::sigmoid;
use crate::text::tokenize;

/// Labeled review templates bundled for default training.
pub const SEED_CORPUS: &str = include_str!("../data/sentiment_seed.tsv");

/// Score assigned to listings without reviews.
pub const NEUTRAL_SCORE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("training data contains only one polarity")]
    SingleClass,
    #[error("smoothing must be positive, got {0}")]
    BadSmoothing(f64),
    #[error("line {line}: expected `pos|neg<TAB>text`")]
    BadLabel { line: usize },
    #[error("malformed sentiment file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    pub log_prior_pos: f64,
    pub log_prior_neg: f64,
    pub smoothing: f64,
    /// token → (log P(token | pos), log P(token | neg))
    pub log_likelihood: HashMap<String, (f64, f64)>,
}

pub fn train_nb<S: AsRef<str>>(
    docs: &[(Vec<S>, Polarity)],
    smoothing: f64,
) -> Result<NbModel, SentimentError> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(SentimentError::BadSmoothing(smoothing));
    }
    let n_pos = docs.iter().filter(|(_, p)| *p == Polarity::Positive).count();
    let n_neg = docs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SentimentError::SingleClass);
    }
    let mut counts: HashMap<&str, (f64, f64)> = HashMap::new();
    let (mut total_pos, mut total_neg) = (0.0, 0.0);
    for (tokens, label) in docs {
        for t in tokens {
            let e = counts.entry(t.as_ref()).or_default();
            match label {
                Polarity::Positive => {
                    e.0 += 1.0;
                    total_pos += 1.0;
                }
                Polarity::Negative => {
                    e.1 += 1.0;
                    total_neg += 1.0;
                }
            }
        }
    }
    let v = counts.len() as f64;
    let denom_pos = (total_pos + smoothing * v).ln();
    let denom_neg = (total_neg + smoothing * v).ln();
    let log_likelihood = counts
        .into_iter()
        .map(|(t, (cp, cn))| {
            (
                t.to_string(),
                ((cp + smoothing).ln() - denom_pos, (cn + smoothing).ln() - denom_neg),
            )
        })
        .collect();
    let n = docs.len() as f64;
    Ok(NbModel {
        log_prior_pos: (n_pos as f64 / n).ln(),
        log_prior_neg: (n_neg as f64 / n).ln(),
        smoothing,
        log_likelihood,
    })
}

impl NbModel {
    /// `P(pos | tokens) = 1 / (1 + γ)` where `γ` is the neg/pos joint
    /// likelihood ratio. Unknown tokens are skipped, so an empty review
    /// scores the positive prior.
    pub fn score_review<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut log_gamma = self.log_prior_neg - self.log_prior_pos;
        for t in tokens {
            if let Some((lp, ln)) = self.log_likelihood.get(t.as_ref()) {
                log_gamma += ln - lp;
            }
        }
        sigmoid(-log_gamma)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.log_likelihood.len()
    }
}

/// Parses `label<TAB>text` lines; labels are `pos` or `neg`. Blank lines are skipped.
pub fn parse_labeled_corpus(text: &str) -> Result<Vec<(Vec<String>, Polarity)>, SentimentError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (label, body) = l.split_once('\t').ok_or(SentimentError::BadLabel { line: i + 1 })?;
            let polarity = match label.trim().to_ascii_lowercase().as_str() {
                "pos" | "positive" | "1" => Polarity::Positive,
                "neg" | "negative" | "0" => Polarity::Negative,
                _ => return Err(SentimentError::BadLabel { line: i + 1 }),
            };
            Ok((tokenize(body), polarity))
        })
        .collect()
}

pub fn seed_corpus() -> Vec<(Vec<String>, Polarity)> {
    parse_labeled_corpus(SEED_CORPUS).expect("bundled corpus is well formed")
}

/// Per-listing mean review score `r`, review count `q` and a zero-review flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentVector {
    pub listing_ids: Vec<String>,
    pub r: Vec<f64>,
    pub q: Vec<usize>,
    pub zero_review: Vec<bool>,
}

/// `reviews` maps listing id to that listing's tokenized reviews. Listings
/// without reviews get [`NEUTRAL_SCORE`] and the zero-review flag.
pub fn listing_sentiment<S: AsRef<str>>(
    model: &NbModel,
    listing_ids: &[String],
    reviews: &HashMap<String, Vec<Vec<S>>>,
) -> SentimentVector {
    let mut out = SentimentVector {
        listing_ids: listing_ids.to_vec(),
        r: Vec::with_capacity(listing_ids.len()),
        q: Vec::with_capacity(listing_ids.len()),
        zero_review: Vec::with_capacity(listing_ids.len()),
    };
    for id in listing_ids {
        let docs = reviews.get(id).map(Vec::as_slice).unwrap_or(&[]);
        let q = docs.len();
        let r = if q == 0 {
            NEUTRAL_SCORE
        } else {
            docs.iter().map(|d| model.score_review(d)).sum::<f64>() / q as f64
        };
        out.r.push(r);
        out.q.push(q);
        out.zero_review.push(q == 0);
    }
    out
}

impl SentimentVector {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SentimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["listing_id", "r", "q", "zero_review_flag"])?;
        for i in 0..self.listing_ids.len() {
            w.write_record([
                self.listing_ids[i].clone(),
                self.r[i].to_string(),
                self.q[i].to_string(),
                u8::from(self.zero_review[i]).to_string(),
            ])?;
        }
        w.flush().map_err(|e| SentimentError::Format(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<SentimentVector, SentimentError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut out = SentimentVector {
            listing_ids: vec![],
            r: vec![],
            q: vec![],
            zero_review: vec![],
        };
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| SentimentError::Format("short row".into()));
            let bad = |s: &str| SentimentError::Format(format!("bad value `{s}`"));
            out.listing_ids.push(field(0)?.to_string());
            out.r.push(field(1)?.parse().map_err(|_| bad(field(1).unwrap()))?);
            out.q.push(field(2)?.parse().map_err(|_| bad(field(2).unwrap()))?);
            out.zero_review.push(field(3)? == "1");
        }
        Ok(out)
    }
}
