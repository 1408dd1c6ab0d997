use std::io::Write;

use ndarray::Array2;

use super::geo::{haversine_km, GeoPoint, KM_PER_DEGREE};
use crate::corpus::{PoiCategory, PoiRecord};

/// Smallest weight an in-radius edge can carry.
pub const MIN_EDGE_WEIGHT: f64 = 1e-6;

pub const DEFAULT_RADIUS_KM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Row index into `listing_ids`.
    pub listing: usize,
    /// Column index into `poi_ids`.
    pub poi: usize,
    pub distance_km: f64,
    pub weight: f64,
}

/// Bipartite listing–POI proximity graph for one POI category. POI columns
/// are ordered by `poi_id`; edges are sorted by (listing, poi).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    pub category: PoiCategory,
    pub radius_km: f64,
    pub listing_ids: Vec<String>,
    pub poi_ids: Vec<String>,
    pub edges: Vec<Edge>,
}

/// `1 − d/r`, floored at [`MIN_EDGE_WEIGHT`]; `None` beyond the radius.
pub fn edge_weight(distance_km: f64, radius_km: f64) -> Option<f64> {
    (distance_km <= radius_km).then(|| (1.0 - distance_km / radius_km).clamp(MIN_EDGE_WEIGHT, 1.0))
}

/// Connects each listing to every POI of `category` within `radius_km`.
/// POIs of other categories in `pois` are ignored.
pub fn build_spatial_graph(
    listings: &[(String, GeoPoint)],
    pois: &[&PoiRecord],
    category: PoiCategory,
    radius_km: f64,
) -> SpatialGraph {
    let mut pois: Vec<&PoiRecord> = pois.iter().copied().filter(|p| p.category == category).collect();
    pois.sort_by(|a, b| a.poi_id.cmp(&b.poi_id));
    // Latitude-sorted view for a band prefilter: any point farther than
    // radius/KM_PER_DEGREE degrees of latitude is beyond the radius.
    let mut by_lat: Vec<usize> = (0..pois.len()).collect();
    by_lat.sort_by(|&a, &b| pois[a].latitude.total_cmp(&pois[b].latitude));
    let lats: Vec<f64> = by_lat.iter().map(|&i| pois[i].latitude).collect();
    let band = radius_km / KM_PER_DEGREE * (1.0 + 1e-9) + 1e-12;

    let mut edges = Vec::new();
    for (li, (_, loc)) in listings.iter().enumerate() {
        let lo = lats.partition_point(|&v| v < loc.latitude - band);
        let hi = lats.partition_point(|&v| v <= loc.latitude + band);
        let mut row: Vec<Edge> = by_lat[lo..hi]
            .iter()
            .filter_map(|&pi| {
                let p = pois[pi];
                let d = haversine_km(*loc, GeoPoint::new(p.latitude, p.longitude));
                edge_weight(d, radius_km).map(|weight| Edge {
                    listing: li,
                    poi: pi,
                    distance_km: d,
                    weight,
                })
            })
            .collect();
        row.sort_by_key(|e| e.poi);
        edges.extend(row);
    }
    SpatialGraph {
        category,
        radius_km,
        listing_ids: listings.iter().map(|(id, _)| id.clone()).collect(),
        poi_ids: pois.iter().map(|p| p.poi_id.clone()).collect(),
        edges,
    }
}

impl SpatialGraph {
    pub fn n_listings(&self) -> usize {
        self.listing_ids.len()
    }

    pub fn n_pois(&self) -> usize {
        self.poi_ids.len()
    }

    /// Dense `n_listings × n_pois` weight matrix.
    pub fn adjacency(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n_listings(), self.n_pois()));
        for e in &self.edges {
            a[[e.listing, e.poi]] = e.weight;
        }
        a
    }

    /// `true` for listings with no POI of this category in range.
    pub fn isolated(&self) -> Vec<bool> {
        let mut flags = vec![true; self.n_listings()];
        for e in &self.edges {
            flags[e.listing] = false;
        }
        flags
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_listings()];
        for e in &self.edges {
            deg[e.listing] += 1;
        }
        deg
    }

    /// Edge list as `listing_id\tpoi_id\tdistance_km\tweight`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "listing_id\tpoi_id\tdistance_km\tweight")?;
        for e in &self.edges {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                self.listing_ids[e.listing], self.poi_ids[e.poi], e.distance_km, e.weight
            )?;
        }
        Ok(())
    }
}
