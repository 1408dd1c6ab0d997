//! Listing–POI proximity graphs and per-category SDNE listing embeddings.

mod geo;
mod graph;
mod sdne;

pub use geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM, KM_PER_DEGREE};
pub use graph::{build_spatial_graph, edge_weight, Edge, SpatialGraph, DEFAULT_RADIUS_KM, MIN_EDGE_WEIGHT};
pub use sdne::{sdne_loss_and_grad, train_sdne, SdneConfig, SdneLoss, SdneModel, SdneReport};

use std::io::{BufRead, Write};

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{ListingTable, PoiCategory, PoiTable};
use crate::nn::NnError;
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("SDNE loss became non-finite at epoch {epoch} (loss {loss})")]
    NonFinite { epoch: usize, loss: f64 },
    #[error("invalid SDNE configuration: {0}")]
    InvalidConfig(String),
    #[error("POI table has no records")]
    NoPois,
    #[error("malformed spatial feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Concatenated per-category listing embeddings in [`PoiCategory::ALL`]
/// order, row-aligned with `listing_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFeatures {
    pub listing_ids: Vec<String>,
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
}

impl SpatialFeatures {
    pub fn write_tsv<W: Write>(&self, out: W) -> std::io::Result<()> {
        crate::tsv::write_matrix(out, &self.listing_ids, &self.column_names, &self.values)
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<SpatialFeatures, SpatialError> {
        let (listing_ids, column_names, values) = crate::tsv::read_matrix(input).map_err(SpatialError::Format)?;
        Ok(SpatialFeatures {
            listing_ids,
            values,
            column_names,
        })
    }
}

/// Outcome of one category's graph and embedding.
#[derive(Debug, Clone)]
pub struct CategoryEmbedding {
    pub category: PoiCategory,
    pub graph: SpatialGraph,
    /// `None` when the category had no POIs or no in-radius edge; its block
    /// is then all zeros.
    pub report: Option<SdneReport>,
}

pub fn build_graphs(listings: &ListingTable, pois: &PoiTable, radius_km: f64) -> Vec<SpatialGraph> {
    let located: Vec<(String, GeoPoint)> = listings
        .records
        .iter()
        .map(|r| (r.listing_id.clone(), r.location()))
        .collect();
    PoiCategory::ALL
        .par_iter()
        .map(|&c| build_spatial_graph(&located, &pois.of_category(c), c, radius_km))
        .collect()
}

/// Builds one graph per category, trains one SDNE per non-empty graph and
/// concatenates the embeddings. Each category trains with a seed derived from
/// `config.seed` and the category name.
pub fn embed_spatial(
    listings: &ListingTable,
    pois: &PoiTable,
    config: &SdneConfig,
    radius_km: f64,
) -> Result<(SpatialFeatures, Vec<CategoryEmbedding>), SpatialError> {
    config.validate()?;
    if pois.is_empty() {
        return Err(SpatialError::NoPois);
    }
    let graphs = build_graphs(listings, pois, radius_km);
    let dim = config.embed_dim;
    let blocks: Vec<(Array2<f64>, CategoryEmbedding)> = graphs
        .into_par_iter()
        .map(|graph| {
            let adjacency = graph.adjacency();
            let cfg = SdneConfig {
                seed: derive_seed(config.seed, &graph.category.slug()),
                ..config.clone()
            };
            let (block, report) = match train_sdne(&adjacency, &cfg) {
                Ok((model, report)) => (model.embed(adjacency.view())?, Some(report)),
                Err(SpatialError::EmptyGraph) => (Array2::zeros((graph.n_listings(), dim)), None),
                Err(e) => return Err(e),
            };
            Ok((
                block,
                CategoryEmbedding {
                    category: graph.category,
                    graph,
                    report,
                },
            ))
        })
        .collect::<Result<_, SpatialError>>()?;

    let n = listings.len();
    let mut values = Array2::zeros((n, dim * blocks.len()));
    let mut column_names = Vec::with_capacity(dim * blocks.len());
    let mut details = Vec::with_capacity(blocks.len());
    for (k, (block, detail)) in blocks.into_iter().enumerate() {
        values
            .slice_mut(ndarray::s![.., k * dim..(k + 1) * dim])
            .assign(&block);
        let slug = detail.category.slug();
        column_names.extend((0..dim).map(|j| format!("p_{slug}_{j}")));
        details.push(detail);
    }
    Ok((
        SpatialFeatures {
            listing_ids: listings.ids(),
            values,
            column_names,
        },
        details,
    ))
}
