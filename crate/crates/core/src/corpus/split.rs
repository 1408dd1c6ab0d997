use super::{CorpusError, ListingRecord, ListingTable};

pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

/// Orders records by `(first_review, listing_id)` and puts the earliest
/// `floor(ratio · n)` in the training set.
pub fn temporal_split(
    listings: &ListingTable,
    ratio: f64,
) -> Result<(ListingTable, ListingTable), CorpusError> {
    let n = listings.len();
    let n_train = (ratio * n as f64).floor() as usize;
    if n < 2 || !(ratio > 0.0 && ratio < 1.0) || n_train == 0 || n_train >= n {
        return Err(CorpusError::DegenerateSplit(n));
    }
    let mut sorted: Vec<ListingRecord> = listings.records.clone();
    sorted.sort_by(|a, b| {
        a.first_review
            .cmp(&b.first_review)
            .then_with(|| a.listing_id.cmp(&b.listing_id))
    });
    let test = sorted.split_off(n_train);
    Ok((listings.with_records(sorted), listings.with_records(test)))
}
