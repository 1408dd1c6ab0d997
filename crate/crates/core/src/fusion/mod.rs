//! Row alignment of the feature sources into the fused matrix
//! `M = [S | L | H | R | P]` and the dense price regressor trained on it.

mod model;

pub use model::{
    layout_signature, train_price_model, InputScaler, PriceModel, Prediction, RegressorConfig,
};

use std::collections::HashMap;

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::nn::NnError;
use crate::sentiment::SentimentVector;
use crate::spatial::SpatialFeatures;
use crate::stats::StatFeatureMatrix;
use crate::text::TextFeatures;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("listing `{listing_id}` is missing from the {source_name} features")]
    Alignment {
        source_name: &'static str,
        listing_id: String,
    },
    #[error("target has {got} rows, statistical features have {expected}")]
    TargetLength { expected: usize, got: usize },
    #[error("feature layout does not match the trained model (expected {expected} columns, got {got})")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("no training rows")]
    Empty,
    #[error("malformed model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// One of the fused column groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Block {
    /// Selected statistical attributes.
    S,
    /// Listing description vector.
    L,
    /// Host introduction vector.
    H,
    /// Mean review sentiment.
    R,
    /// Spatial embedding.
    P,
}

impl Block {
    pub const ALL: [Block; 5] = [Block::S, Block::L, Block::H, Block::R, Block::P];
}

/// Row-aligned feature blocks plus the transformed target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub listing_ids: Vec<String>,
    pub s: Array2<f64>,
    pub l: Array2<f64>,
    pub h: Array2<f64>,
    pub r: Array2<f64>,
    pub p: Array2<f64>,
    pub y: Array1<f64>,
    pub s_columns: Vec<String>,
    pub p_columns: Vec<String>,
}

fn gather<'a>(
    ids: &[String],
    source_ids: &'a [String],
    source_name: &'static str,
) -> Result<Vec<usize>, FusionError> {
    let index: HashMap<&'a str, usize> = source_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    ids.iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| FusionError::Alignment {
                source_name,
                listing_id: id.clone(),
            })
        })
        .collect()
}

/// Aligns every source to the row order of `s`. `y` is row-aligned with `s`.
pub fn fuse(
    s: &StatFeatureMatrix,
    text: &TextFeatures,
    sentiment: &SentimentVector,
    spatial: &SpatialFeatures,
    y: &Array1<f64>,
) -> Result<FeatureBundle, FusionError> {
    if y.len() != s.nrows() {
        return Err(FusionError::TargetLength {
            expected: s.nrows(),
            got: y.len(),
        });
    }
    let ids = &s.listing_ids;
    let t_rows = gather(ids, &text.listing_ids, "text")?;
    let r_rows = gather(ids, &sentiment.listing_ids, "sentiment")?;
    let p_rows = gather(ids, &spatial.listing_ids, "spatial")?;
    Ok(FeatureBundle {
        listing_ids: ids.clone(),
        s: s.values.clone(),
        l: text.description.select(Axis(0), &t_rows),
        h: text.host.select(Axis(0), &t_rows),
        r: Array2::from_shape_fn((ids.len(), 1), |(i, _)| sentiment.r[r_rows[i]]),
        p: spatial.values.select(Axis(0), &p_rows),
        y: y.clone(),
        s_columns: s.column_names.clone(),
        p_columns: spatial.column_names.clone(),
    })
}

impl FeatureBundle {
    pub fn len(&self) -> usize {
        self.listing_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.listing_ids.is_empty()
    }

    fn block(&self, b: Block) -> ArrayView2<'_, f64> {
        match b {
            Block::S => self.s.view(),
            Block::L => self.l.view(),
            Block::H => self.h.view(),
            Block::R => self.r.view(),
            Block::P => self.p.view(),
        }
    }

    /// Columns of the requested blocks, always in `[S | L | H | R | P]` order.
    pub fn matrix(&self, blocks: &[Block]) -> Array2<f64> {
        let views: Vec<_> = Block::ALL
            .iter()
            .filter(|b| blocks.contains(b))
            .map(|&b| self.block(b))
            .collect();
        if views.is_empty() {
            return Array2::zeros((self.len(), 0));
        }
        concatenate(Axis(1), &views).expect("blocks are row-aligned")
    }

    pub fn column_names(&self, blocks: &[Block]) -> Vec<String> {
        let mut names = Vec::new();
        for b in Block::ALL.iter().filter(|b| blocks.contains(b)) {
            match b {
                Block::S => names.extend(self.s_columns.iter().cloned()),
                Block::L => names.extend((0..self.l.ncols()).map(|k| format!("l_{k}"))),
                Block::H => names.extend((0..self.h.ncols()).map(|k| format!("h_{k}"))),
                Block::R => names.push("r".to_string()),
                Block::P => names.extend(self.p_columns.iter().cloned()),
            }
        }
        names
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureBundle {
        FeatureBundle {
            listing_ids: rows.iter().map(|&i| self.listing_ids[i].clone()).collect(),
            s: self.s.select(Axis(0), rows),
            l: self.l.select(Axis(0), rows),
            h: self.h.select(Axis(0), rows),
            r: self.r.select(Axis(0), rows),
            p: self.p.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            s_columns: self.s_columns.clone(),
            p_columns: self.p_columns.clone(),
        }
    }

    /// Fused matrix as TSV: `listing_id`, the `M` columns, then `y`.
    pub fn write_tsv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let names = self.column_names(&Block::ALL);
        let m = self.matrix(&Block::ALL);
        writeln!(out, "listing_id\t{}\ty", names.join("\t"))?;
        for (i, row) in m.rows().into_iter().enumerate() {
            write!(out, "{}", self.listing_ids[i])?;
            for v in row {
                write!(out, "\t{v}")?;
            }
            writeln!(out, "\t{}", self.y[i])?;
        }
        Ok(())
    }
}
