use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ListingTable, PoiCategory, PoiTable, ReviewTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_listings: usize,
    pub n_reviews: usize,
    pub n_pois: usize,
    /// First and last review date; listing first-review dates when there are no reviews.
    pub time_span: Option<(NaiveDate, NaiveDate)>,
    pub per_category_poi_counts: BTreeMap<String, usize>,
}

pub fn dataset_stats(listings: &ListingTable, reviews: &ReviewTable, pois: &PoiTable) -> DatasetSummary {
    let mut per_category: BTreeMap<String, usize> =
        PoiCategory::ALL.iter().map(|c| (c.name().to_string(), 0)).collect();
    for p in &pois.records {
        *per_category.get_mut(p.category.name()).unwrap() += 1;
    }
    let span = |mut dates: Vec<NaiveDate>| {
        dates.sort();
        Some((*dates.first()?, *dates.last()?))
    };
    let time_span = if reviews.is_empty() {
        span(listings.records.iter().map(|r| r.first_review).collect())
    } else {
        span(reviews.records.iter().map(|r| r.date).collect())
    };
    DatasetSummary {
        n_listings: listings.len(),
        n_reviews: reviews.len(),
        n_pois: pois.len(),
        time_span,
        per_category_poi_counts: per_category,
    }
}
