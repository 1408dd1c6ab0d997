use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::ListingTable;

/// Columns missing in more than this fraction of rows are dropped.
pub const MAX_MISSING_FRACTION: f64 = 0.3;

/// Dense statistical feature matrix, one row per listing.
#[derive(Debug, Clone, PartialEq)]
pub struct StatFeatureMatrix {
    pub listing_ids: Vec<String>,
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
}

impl StatFeatureMatrix {
    pub fn new(
        listing_ids: Vec<String>,
        values: Array2<f64>,
        column_names: Vec<String>,
    ) -> Result<Self, StatsError> {
        if values.nrows() != listing_ids.len() {
            return Err(StatsError::DimensionMismatch {
                expected: listing_ids.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != column_names.len() {
            return Err(StatsError::DimensionMismatch {
                expected: column_names.len(),
                got: values.ncols(),
            });
        }
        Ok(StatFeatureMatrix {
            listing_ids,
            values,
            column_names,
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<StatFeatureMatrix, StatsError> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| StatsError::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StatFeatureMatrix {
            listing_ids: self.listing_ids.clone(),
            values: self.values.select(ndarray::Axis(1), &idx),
            column_names: names.to_vec(),
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> StatFeatureMatrix {
        StatFeatureMatrix {
            listing_ids: rows.iter().map(|&r| self.listing_ids[r].clone()).collect(),
            values: self.values.select(ndarray::Axis(0), rows),
            column_names: self.column_names.clone(),
        }
    }

    pub fn write_tsv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        crate::tsv::write_matrix(out, &self.listing_ids, &self.column_names, &self.values)
    }

    pub fn read_tsv<R: std::io::BufRead>(input: R) -> Result<StatFeatureMatrix, StatsError> {
        let (ids, names, values) = crate::tsv::read_matrix(input).map_err(StatsError::Invalid)?;
        StatFeatureMatrix::new(ids, values, names)
    }
}

/// Drops sparse columns and fills the remaining gaps with training medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatImputer {
    pub columns: Vec<String>,
    pub medians: Vec<f64>,
    pub dropped: Vec<String>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}

impl StatImputer {
    /// Missing fractions are measured over the whole table; medians over
    /// `train_rows` only.
    pub fn fit(table: &ListingTable, train_rows: &[usize]) -> StatImputer {
        let n = table.len().max(1) as f64;
        let mut columns = Vec::new();
        let mut medians = Vec::new();
        let mut dropped = Vec::new();
        for (j, name) in table.stat_columns.iter().enumerate() {
            let missing = table.records.iter().filter(|r| r.stats[j].is_none()).count();
            let train_vals: Vec<f64> = train_rows
                .iter()
                .filter_map(|&i| table.records[i].stats[j])
                .collect();
            match median(train_vals) {
                Some(m) if missing as f64 / n <= MAX_MISSING_FRACTION => {
                    columns.push(name.clone());
                    medians.push(m);
                }
                _ => dropped.push(name.clone()),
            }
        }
        StatImputer {
            columns,
            medians,
            dropped,
        }
    }

    pub fn transform(&self, table: &ListingTable) -> Result<StatFeatureMatrix, StatsError> {
        let idx = self
            .columns
            .iter()
            .map(|c| {
                table
                    .stat_columns
                    .iter()
                    .position(|s| s == c)
                    .ok_or_else(|| StatsError::UnknownColumn(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let values = Array2::from_shape_fn((table.len(), idx.len()), |(i, k)| {
            table.records[i].stats[idx[k]].unwrap_or(self.medians[k])
        });
        StatFeatureMatrix::new(table.ids(), values, self.columns.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_listings;

    #[test]
    fn sparse_columns_dropped_and_gaps_filled_with_train_median() {
        let csv = "listing_id,host_id,first_review,latitude,longitude,price,description,host_about,a,b\n\
                   L1,h,2018-01-01,0,0,10,,,1,\n\
                   L2,h,2018-01-01,0,0,10,,,3,\n\
                   L3,h,2018-01-01,0,0,10,,,,5\n\
                   L4,h,2018-01-01,0,0,10,,,100,6\n";
        let table = read_listings(csv.as_bytes(), None).unwrap();
        // train rows L1..L3: median of a over {1, 3} = 2
        let imp = StatImputer::fit(&table, &[0, 1, 2]);
        assert_eq!(imp.columns, vec!["a"]);
        assert_eq!(imp.dropped, vec!["b"]);
        let m = imp.transform(&table).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![1.0, 3.0, 2.0, 100.0]);
    }
}
