use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use super::{TextError, Tokenizer, WordVectors};
use crate::corpus::ListingTable;

/// Mean input vector of the in-vocabulary tokens. Out-of-vocabulary tokens
/// are skipped; if none remain the result is the zero vector and the flag
/// is `true`.
pub fn embed_document<S: AsRef<str>>(tokens: &[S], wv: &WordVectors) -> (Array1<f64>, bool) {
    let mut sum = Array1::zeros(wv.dim());
    let mut count = 0usize;
    for t in tokens {
        if let Some(i) = wv.get(t.as_ref()) {
            sum += &wv.input.row(i);
            count += 1;
        }
    }
    if count == 0 {
        (sum, true)
    } else {
        (sum / count as f64, false)
    }
}

/// Listing-description (`L`) and host-introduction (`H`) vectors, row-aligned
/// with `listing_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatures {
    pub listing_ids: Vec<String>,
    pub description: Array2<f64>,
    pub host: Array2<f64>,
    pub description_empty: Vec<bool>,
    pub host_empty: Vec<bool>,
}

pub fn embed_listing_texts(
    listings: &ListingTable,
    wv: &WordVectors,
    tokenizer: &dyn Tokenizer,
) -> TextFeatures {
    let n = listings.len();
    let d = wv.dim();
    let mut out = TextFeatures {
        listing_ids: listings.ids(),
        description: Array2::zeros((n, d)),
        host: Array2::zeros((n, d)),
        description_empty: vec![false; n],
        host_empty: vec![false; n],
    };
    for (i, r) in listings.records.iter().enumerate() {
        let (l, l_empty) = embed_document(&tokenizer.tokenize(&r.description), wv);
        let (h, h_empty) = embed_document(&tokenizer.tokenize(&r.host_about), wv);
        out.description.row_mut(i).assign(&l);
        out.host.row_mut(i).assign(&h);
        out.description_empty[i] = l_empty;
        out.host_empty[i] = h_empty;
    }
    out
}

impl TextFeatures {
    pub fn dim(&self) -> usize {
        self.description.ncols()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim();
        let mut header = vec!["listing_id".to_string(), "description_empty".into(), "host_empty".into()];
        header.extend((0..d).map(|k| format!("l_{k}")));
        header.extend((0..d).map(|k| format!("h_{k}")));
        writeln!(out, "{}", header.join("\t"))?;
        for i in 0..self.listing_ids.len() {
            let mut row = vec![
                self.listing_ids[i].clone(),
                u8::from(self.description_empty[i]).to_string(),
                u8::from(self.host_empty[i]).to_string(),
            ];
            row.extend(self.description.row(i).iter().map(|v| v.to_string()));
            row.extend(self.host.row(i).iter().map(|v| v.to_string()));
            writeln!(out, "{}", row.join("\t"))?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<TextFeatures, TextError> {
        let fmt = |m: String| TextError::Format(m);
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| fmt("missing header".into()))?
            .map_err(|e| fmt(e.to_string()))?;
        let cols = header.split('\t').count();
        if cols < 3 || (cols - 3) % 2 != 0 {
            return Err(fmt(format!("unexpected column count {cols}")));
        }
        let d = (cols - 3) / 2;
        let (mut ids, mut l, mut h, mut le, mut he) = (vec![], vec![], vec![], vec![], vec![]);
        for line in lines {
            let line = line.map_err(|e| fmt(e.to_string()))?;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != cols {
                return Err(fmt(format!("row for `{}` has {} fields", f[0], f.len())));
            }
            ids.push(f[0].to_string());
            le.push(f[1] == "1");
            he.push(f[2] == "1");
            for (k, s) in f[3..].iter().enumerate() {
                let v: f64 = s.parse().map_err(|_| fmt(format!("bad value `{s}`")))?;
                if k < d {
                    l.push(v)
                } else {
                    h.push(v)
                }
            }
        }
        let n = ids.len();
        let shape = |v| Array2::from_shape_vec((n, d), v).map_err(|e| fmt(e.to_string()));
        Ok(TextFeatures {
            listing_ids: ids,
            description: shape(l)?,
            host: shape(h)?,
            description_empty: le,
            host_empty: he,
        })
    }
}
