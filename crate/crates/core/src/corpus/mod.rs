//! Listing, review and POI tables: CSV parsing with row-level validation,
//! the temporal train/test split and dataset statistics.

mod parse;
mod split;
mod summary;

pub use parse::{
    parse_listings, parse_pois, parse_reviews, read_listings, read_pois, read_reviews,
    write_listings, write_pois, write_reviews, LISTING_FIXED_COLUMNS,
};
pub use split::{temporal_split, DEFAULT_TRAIN_RATIO};
pub use summary::{dataset_stats, DatasetSummary};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: field `{field}` out of range")]
    RangeViolation { row: usize, field: String },
    #[error("row {row}: field `{field}` has unparsable value `{value}`")]
    BadValue {
        row: usize,
        field: String,
        value: String,
    },
    #[error("duplicate listing id `{0}`")]
    DuplicateId(String),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("row {row}: unknown POI category `{value}`")]
    UnknownCategory { row: usize, value: String },
    #[error("cannot split {0} records into non-empty train and test sets")]
    DegenerateSplit(usize),
}

/// A row that failed validation. `row` is 1-based and counts data rows only
/// (the header is not row 1).
#[derive(Debug)]
pub struct RowRejection {
    pub row: usize,
    pub error: CorpusError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListingRecord {
    pub listing_id: String,
    pub host_id: String,
    pub first_review: NaiveDate,
    pub latitude: f64,
    pub longitude: f64,
    pub price: f64,
    /// Values of the table's stat columns, in column order. `None` is missing.
    pub stats: Vec<Option<f64>>,
    pub description: String,
    pub host_about: String,
}

impl ListingRecord {
    pub fn location(&self) -> crate::spatial::GeoPoint {
        crate::spatial::GeoPoint::new(self.latitude, self.longitude)
    }
}

#[derive(Debug, Default)]
pub struct ListingTable {
    pub stat_columns: Vec<String>,
    pub records: Vec<ListingRecord>,
    pub rejected: Vec<RowRejection>,
}

impl ListingTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.listing_id.clone()).collect()
    }

    pub fn index_by_id(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.listing_id.as_str(), i))
            .collect()
    }

    /// Copy of the table without its rejection log.
    pub fn with_records(&self, records: Vec<ListingRecord>) -> ListingTable {
        ListingTable {
            stat_columns: self.stat_columns.clone(),
            records,
            rejected: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewDoc {
    pub review_id: String,
    pub listing_id: String,
    pub date: NaiveDate,
    pub text: String,
}

#[derive(Debug, Default)]
pub struct ReviewTable {
    pub records: Vec<ReviewDoc>,
    /// Reviews dropped because their text was empty after trimming.
    pub dropped_empty: usize,
    pub rejected: Vec<RowRejection>,
}

impl ReviewTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The closed set of POI categories, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PoiCategory {
    Education,
    Entertainment,
    Food,
    BeverageShopping,
    Tourist,
    Transportation,
    MedicalService,
    PublicService,
}

impl PoiCategory {
    pub const ALL: [PoiCategory; 8] = [
        PoiCategory::Education,
        PoiCategory::Entertainment,
        PoiCategory::Food,
        PoiCategory::BeverageShopping,
        PoiCategory::Tourist,
        PoiCategory::Transportation,
        PoiCategory::MedicalService,
        PoiCategory::PublicService,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PoiCategory::Education => "Education",
            PoiCategory::Entertainment => "Entertainment",
            PoiCategory::Food => "Food",
            PoiCategory::BeverageShopping => "Beverage Shopping",
            PoiCategory::Tourist => "Tourist",
            PoiCategory::Transportation => "Transportation",
            PoiCategory::MedicalService => "Medical Service",
            PoiCategory::PublicService => "Public Service",
        }
    }

    /// File-name friendly form, e.g. `beverage_shopping`.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase().replace(' ', "_")
    }

    pub fn index(self) -> usize {
        PoiCategory::ALL.iter().position(|&c| c == self).unwrap()
    }
}

impl fmt::Display for PoiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoiCategory {
    type Err = String;

    /// Case-insensitive; surrounding whitespace ignored; `_`/`-` and repeated
    /// spaces treated as a single space.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .replace(['_', '-'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        PoiCategory::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiRecord {
    pub poi_id: String,
    pub category: PoiCategory,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Default)]
pub struct PoiTable {
    pub records: Vec<PoiRecord>,
    pub rejected: Vec<RowRejection>,
}

impl PoiTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_category(&self, category: PoiCategory) -> Vec<&PoiRecord> {
        self.records.iter().filter(|p| p.category == category).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_normalization() {
        assert_eq!("Food".parse::<PoiCategory>(), Ok(PoiCategory::Food));
        assert_eq!(
            "  transportation ".parse::<PoiCategory>(),
            Ok(PoiCategory::Transportation)
        );
        assert_eq!(
            "beverage_shopping".parse::<PoiCategory>(),
            Ok(PoiCategory::BeverageShopping)
        );
        assert_eq!(
            "MEDICAL   service".parse::<PoiCategory>(),
            Ok(PoiCategory::MedicalService)
        );
        assert!("Nightlife".parse::<PoiCategory>().is_err());
    }

    #[test]
    fn category_order_is_fixed() {
        for (i, c) in PoiCategory::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.name().parse::<PoiCategory>(), Ok(*c));
        }
    }
}
