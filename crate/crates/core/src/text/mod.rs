//! Text block: tokenization, vocabulary, CBOW word vectors trained with
//! negative sampling, and per-listing document vectors (word-vector means).

mod cbow;
mod document;
mod tokenize;
mod vocab;

pub use cbow::{corpus_objective, step_gradients, step_objective, train_cbow, CbowConfig, CbowReport, WordVectors};
pub use document::{embed_document, embed_listing_texts, TextFeatures};
pub use tokenize::{tokenize, Tokenizer, WhitespaceTokenizer};
pub use vocab::{build_vocab, Vocab};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("no token reaches min_count {0}")]
    EmptyVocab(usize),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite in epoch {epoch}; lower the learning rate")]
    NonFinite { epoch: usize },
    #[error("malformed word-vector file: {0}")]
    Format(String),
}
