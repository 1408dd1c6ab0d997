use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::{
    CorpusError, ListingRecord, ListingTable, PoiCategory, PoiRecord, PoiTable, ReviewDoc,
    ReviewTable, RowRejection,
};

pub const LISTING_FIXED_COLUMNS: [&str; 8] = [
    "listing_id",
    "host_id",
    "first_review",
    "latitude",
    "longitude",
    "price",
    "description",
    "host_about",
];

const REVIEW_COLUMNS: [&str; 4] = ["review_id", "listing_id", "date", "text"];
const POI_COLUMNS: [&str; 4] = ["poi_id", "category", "latitude", "longitude"];
const DATE_FORMAT: &str = "%Y-%m-%d";

fn open(path: &Path) -> Result<File, CorpusError> {
    File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    ReaderBuilder::new().has_headers(true).flexible(false).from_reader(r)
}

fn column_index(headers: &StringRecord) -> HashMap<String, usize> {
    headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_string(), i))
        .collect()
}

fn require(index: &HashMap<String, usize>, name: &str) -> Result<usize, CorpusError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
}

fn parse_date(row: usize, field: &str, raw: &str) -> Result<NaiveDate, CorpusError> {
    NaiveDate::parse_from_str(raw.trim(), DATE_FORMAT).map_err(|_| CorpusError::BadValue {
        row,
        field: field.to_string(),
        value: raw.to_string(),
    })
}

fn parse_f64(row: usize, field: &str, raw: &str) -> Result<f64, CorpusError> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CorpusError::BadValue {
            row,
            field: field.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn strip_currency(raw: &str) -> String {
    raw.trim()
        .chars()
        .filter(|c| !matches!(c, '$' | '¥' | '€' | '£' | ',' | '%') && !c.is_whitespace())
        .collect()
}

fn parse_coordinate(row: usize, field: &str, raw: &str, bound: f64) -> Result<f64, CorpusError> {
    let v = parse_f64(row, field, raw)?;
    if v.abs() > bound {
        return Err(CorpusError::RangeViolation {
            row,
            field: field.to_string(),
        });
    }
    Ok(v)
}

/// Parses one statistical cell. Booleans `t`/`f` map to 1/0, currency
/// symbols and thousands separators are stripped, blanks are missing.
fn parse_stat(row: usize, field: &str, raw: &str) -> Result<Option<f64>, CorpusError> {
    let t = raw.trim();
    match t.to_ascii_lowercase().as_str() {
        "" | "na" | "n/a" | "nan" | "null" | "none" => return Ok(None),
        "t" | "true" => return Ok(Some(1.0)),
        "f" | "false" => return Ok(Some(0.0)),
        _ => {}
    }
    parse_f64(row, field, &strip_currency(t)).map(Some)
}

fn parse_listing_row(
    row: usize,
    rec: &StringRecord,
    fixed: &[usize; 8],
    stat_idx: &[usize],
    stat_names: &[String],
) -> Result<ListingRecord, CorpusError> {
    let get = |i: usize| rec.get(i).unwrap_or("");
    let listing_id = get(fixed[0]).trim().to_string();
    if listing_id.is_empty() {
        return Err(CorpusError::BadValue {
            row,
            field: "listing_id".into(),
            value: String::new(),
        });
    }
    let first_review = parse_date(row, "first_review", get(fixed[2]))?;
    let latitude = parse_coordinate(row, "latitude", get(fixed[3]), 90.0)?;
    let longitude = parse_coordinate(row, "longitude", get(fixed[4]), 180.0)?;
    let price = parse_f64(row, "price", &strip_currency(get(fixed[5])))?;
    if price <= 0.0 {
        return Err(CorpusError::RangeViolation {
            row,
            field: "price".into(),
        });
    }
    let stats = stat_idx
        .iter()
        .zip(stat_names)
        .map(|(&i, name)| parse_stat(row, name, get(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ListingRecord {
        listing_id,
        host_id: get(fixed[1]).trim().to_string(),
        first_review,
        latitude,
        longitude,
        price,
        stats,
        description: get(fixed[6]).to_string(),
        host_about: get(fixed[7]).to_string(),
    })
}

/// Reads a listings CSV. With `schema`, exactly those stat columns are read
/// (in schema order); otherwise every non-fixed column is a stat column.
pub fn read_listings<R: Read>(
    input: R,
    schema: Option<&[String]>,
) -> Result<ListingTable, CorpusError> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let index = column_index(&headers);
    let mut fixed = [0usize; 8];
    for (slot, name) in fixed.iter_mut().zip(LISTING_FIXED_COLUMNS) {
        *slot = require(&index, name)?;
    }
    let stat_columns: Vec<String> = match schema {
        Some(names) => names.to_vec(),
        None => headers
            .iter()
            .map(|h| h.trim().to_string())
            .filter(|h| !LISTING_FIXED_COLUMNS.contains(&h.as_str()))
            .collect(),
    };
    let stat_idx = stat_columns
        .iter()
        .map(|c| require(&index, c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = ListingTable {
        stat_columns,
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        match parse_listing_row(row, &rec, &fixed, &stat_idx, &table.stat_columns) {
            Ok(r) => {
                if seen.insert(r.listing_id.clone()) {
                    table.records.push(r);
                } else {
                    table.rejected.push(RowRejection {
                        row,
                        error: CorpusError::DuplicateId(r.listing_id),
                    });
                }
            }
            Err(error) => table.rejected.push(RowRejection { row, error }),
        }
    }
    Ok(table)
}

pub fn parse_listings(path: &Path, schema: Option<&[String]>) -> Result<ListingTable, CorpusError> {
    read_listings(open(path)?, schema)
}

pub fn read_reviews<R: Read>(input: R) -> Result<ReviewTable, CorpusError> {
    let mut rdr = reader(input);
    let index = column_index(rdr.headers()?);
    let cols = REVIEW_COLUMNS
        .iter()
        .map(|c| require(&index, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = ReviewTable::default();
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        rows += 1;
        let rec = rec?;
        let get = |k: usize| rec.get(cols[k]).unwrap_or("");
        let text = get(3);
        if text.trim().is_empty() {
            table.dropped_empty += 1;
            continue;
        }
        match parse_date(row, "date", get(2)) {
            Ok(date) => table.records.push(ReviewDoc {
                review_id: get(0).trim().to_string(),
                listing_id: get(1).trim().to_string(),
                date,
                text: text.to_string(),
            }),
            Err(error) => table.rejected.push(RowRejection { row, error }),
        }
    }
    if rows == 0 {
        return Err(CorpusError::EmptyTable);
    }
    Ok(table)
}

pub fn parse_reviews(path: &Path) -> Result<ReviewTable, CorpusError> {
    read_reviews(open(path)?)
}

pub fn read_pois<R: Read>(input: R) -> Result<PoiTable, CorpusError> {
    let mut rdr = reader(input);
    let index = column_index(rdr.headers()?);
    let cols = POI_COLUMNS
        .iter()
        .map(|c| require(&index, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = PoiTable::default();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let get = |k: usize| rec.get(cols[k]).unwrap_or("");
        let parsed = (|| {
            let category = get(1)
                .parse::<PoiCategory>()
                .map_err(|value| CorpusError::UnknownCategory { row, value })?;
            Ok(PoiRecord {
                poi_id: get(0).trim().to_string(),
                category,
                latitude: parse_coordinate(row, "latitude", get(2), 90.0)?,
                longitude: parse_coordinate(row, "longitude", get(3), 180.0)?,
            })
        })();
        match parsed {
            Ok(p) => table.records.push(p),
            Err(error) => table.rejected.push(RowRejection { row, error }),
        }
    }
    Ok(table)
}

pub fn parse_pois(path: &Path) -> Result<PoiTable, CorpusError> {
    read_pois(open(path)?)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().has_headers(false).from_writer(w)
}

pub fn write_listings<W: Write>(table: &ListingTable, out: W) -> Result<(), CorpusError> {
    let mut w = writer(out);
    let mut header: Vec<&str> = LISTING_FIXED_COLUMNS.to_vec();
    header.extend(table.stat_columns.iter().map(String::as_str));
    w.write_record(&header)?;
    for r in &table.records {
        let mut row = vec![
            r.listing_id.clone(),
            r.host_id.clone(),
            r.first_review.format(DATE_FORMAT).to_string(),
            r.latitude.to_string(),
            r.longitude.to_string(),
            r.price.to_string(),
            r.description.clone(),
            r.host_about.clone(),
        ];
        row.extend(r.stats.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: "<listings>".into(),
        source,
    })
}

pub fn write_reviews<W: Write>(table: &ReviewTable, out: W) -> Result<(), CorpusError> {
    let mut w = writer(out);
    w.write_record(REVIEW_COLUMNS)?;
    for r in &table.records {
        w.write_record([
            r.review_id.as_str(),
            r.listing_id.as_str(),
            &r.date.format(DATE_FORMAT).to_string(),
            r.text.as_str(),
        ])?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: "<reviews>".into(),
        source,
    })
}

pub fn write_pois<W: Write>(table: &PoiTable, out: W) -> Result<(), CorpusError> {
    let mut w = writer(out);
    w.write_record(POI_COLUMNS)?;
    for p in &table.records {
        w.write_record([
            p.poi_id.clone(),
            p.category.name().to_string(),
            p.latitude.to_string(),
            p.longitude.to_string(),
        ])?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: "<pois>".into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str =
        "listing_id,host_id,first_review,latitude,longitude,price,description,host_about,bedrooms,superhost,deposit\n";

    fn listings(body: &str) -> ListingTable {
        read_listings(format!("{HEADER}{body}").as_bytes(), None).unwrap()
    }

    #[test]
    fn accepts_in_range_row() {
        let t = listings("L1,H1,2018-03-01,39.91,116.40,450,\"cozy, quiet\",hello,2,t,\"$1,200.00\"\n");
        assert!(t.rejected.is_empty());
        let r = &t.records[0];
        assert_eq!(r.latitude, 39.91);
        assert_eq!(r.price, 450.0);
        assert_eq!(r.description, "cozy, quiet");
        assert_eq!(r.stats, vec![Some(2.0), Some(1.0), Some(1200.0)]);
        assert_eq!(t.stat_columns, vec!["bedrooms", "superhost", "deposit"]);
    }

    #[test]
    fn out_of_range_latitude_is_rejected() {
        let t = listings("L1,H1,2018-03-01,91.0,116.40,450,d,h,2,t,0\n");
        assert!(t.records.is_empty());
        assert!(matches!(
            &t.rejected[0],
            RowRejection { row: 1, error: CorpusError::RangeViolation { field, .. } } if field == "latitude"
        ));
    }

    #[test]
    fn nonpositive_price_is_rejected() {
        let t = listings("L1,H1,2018-03-01,39.0,116.40,0,d,h,2,t,0\n");
        assert!(matches!(
            &t.rejected[0].error,
            CorpusError::RangeViolation { field, .. } if field == "price"
        ));
    }

    #[test]
    fn duplicate_listing_id_is_rejected() {
        let t = listings(
            "L1,H1,2018-03-01,39.0,116.4,450,d,h,2,t,0\nL1,H2,2018-03-02,39.0,116.4,300,d,h,1,f,0\n",
        );
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.rejected.len(), 1);
        assert_eq!(t.rejected[0].row, 2);
        assert!(matches!(&t.rejected[0].error, CorpusError::DuplicateId(id) if id == "L1"));
    }

    #[test]
    fn unparsable_stat_rejects_row_but_blank_is_missing() {
        let t = listings(
            "L1,H1,2018-03-01,39.0,116.4,450,d,h,two,t,0\nL2,H1,2018-03-01,39.0,116.4,450,d,h,,t,NA\n",
        );
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].stats, vec![None, Some(1.0), None]);
        assert!(matches!(&t.rejected[0].error, CorpusError::BadValue { field, .. } if field == "bedrooms"));
    }

    #[test]
    fn missing_fixed_column_is_fatal() {
        let err = read_listings("listing_id,host_id\nL1,H1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "first_review"));
    }

    #[test]
    fn schema_selects_and_orders_stat_columns() {
        let schema = vec!["deposit".to_string(), "bedrooms".to_string()];
        let t = read_listings(
            format!("{HEADER}L1,H1,2018-03-01,39.0,116.4,450,d,h,2,t,7\n").as_bytes(),
            Some(&schema),
        )
        .unwrap();
        assert_eq!(t.records[0].stats, vec![Some(7.0), Some(2.0)]);
        let missing = vec!["rooms".to_string()];
        let err = read_listings(HEADER.as_bytes(), Some(&missing)).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "rooms"));
    }

    #[test]
    fn reviews_drop_blank_texts() {
        let t = read_reviews(
            "review_id,listing_id,date,text\nR1,L1,2019-01-01,great location\nR2,L1,2019-01-02,   \n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].text, "great location");
        assert_eq!(t.dropped_empty, 1);
    }

    #[test]
    fn header_only_reviews_are_an_empty_table() {
        let err = read_reviews("review_id,listing_id,date,text\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyTable));
    }

    #[test]
    fn pois_validate_category() {
        let t = read_pois(
            "poi_id,category,latitude,longitude\nP1,Food,39.9,116.4\nP2,Nightlife,39.9,116.4\nP3,  transportation ,39.9,116.4\n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[0].category, PoiCategory::Food);
        assert_eq!(t.records[1].category, PoiCategory::Transportation);
        assert!(matches!(
            &t.rejected[0],
            RowRejection { row: 2, error: CorpusError::UnknownCategory { value, .. } } if value == "Nightlife"
        ));
    }

    fn arb_record() -> impl Strategy<Value = ListingRecord> {
        (
            "[A-Za-z0-9]{1,8}",
            -90.0f64..=90.0,
            -180.0f64..=180.0,
            0.01f64..1e5,
            proptest::collection::vec(proptest::option::of(-1e6f64..1e6), 3),
            "[ -~]{0,20}",
            "[a-z ,\"\n]{0,20}",
            0i64..3000,
        )
            .prop_map(|(id, lat, lon, price, stats, desc, host, day)| ListingRecord {
                listing_id: id,
                host_id: "H".into(),
                first_review: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()
                    + chrono::Duration::days(day),
                latitude: lat,
                longitude: lon,
                price,
                stats,
                description: desc,
                host_about: host,
            })
    }

    proptest! {
        #[test]
        fn listings_round_trip(records in proptest::collection::vec(arb_record(), 1..12)) {
            let mut seen = HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.listing_id.clone())).collect();
            let table = ListingTable {
                stat_columns: vec!["a".into(), "b".into(), "c".into()],
                records,
                rejected: vec![],
            };
            let mut buf = Vec::new();
            write_listings(&table, &mut buf).unwrap();
            let back = read_listings(buf.as_slice(), None).unwrap();
            prop_assert!(back.rejected.is_empty());
            prop_assert_eq!(back.stat_columns, table.stat_columns);
            prop_assert_eq!(back.records, table.records);
        }
    }

    #[test]
    fn reviews_and_pois_round_trip() {
        let reviews = read_reviews(
            "review_id,listing_id,date,text\nR1,L1,2019-01-01,\"great, \"\"quiet\"\" place\"\n".as_bytes(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_reviews(&reviews, &mut buf).unwrap();
        assert_eq!(read_reviews(buf.as_slice()).unwrap().records, reviews.records);

        let pois = read_pois("poi_id,category,latitude,longitude\nP1,medical service,1.5,-2.25\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_pois(&pois, &mut buf).unwrap();
        assert_eq!(read_pois(buf.as_slice()).unwrap().records, pois.records);
    }
}
