//! `listing_id<TAB>col…` matrix files shared by several feature blocks.

use std::io::{BufRead, Write};

use ndarray::Array2;

pub(crate) fn write_matrix<W: Write>(
    mut out: W,
    ids: &[String],
    columns: &[String],
    values: &Array2<f64>,
) -> std::io::Result<()> {
    write!(out, "listing_id")?;
    for c in columns {
        write!(out, "\t{c}")?;
    }
    writeln!(out)?;
    for (id, row) in ids.iter().zip(values.rows()) {
        write!(out, "{id}")?;
        for v in row {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Row ids, column names and values.
pub(crate) type Matrix = (Vec<String>, Vec<String>, Array2<f64>);

/// Returns the parsed matrix or a message describing the defect.
pub(crate) fn read_matrix<R: BufRead>(input: R) -> Result<Matrix, String> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| "empty file".to_string())?
        .map_err(|e| e.to_string())?;
    let mut cols = header.split('\t');
    if cols.next() != Some("listing_id") {
        return Err("first column must be listing_id".into());
    }
    let columns: Vec<String> = cols.map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        ids.push(fields.next().unwrap_or_default().to_string());
        let before = flat.len();
        for f in fields {
            flat.push(f.parse::<f64>().map_err(|_| format!("line {}: bad value `{f}`", i + 2))?);
        }
        if flat.len() - before != columns.len() {
            return Err(format!("line {}: wrong field count", i + 2));
        }
    }
    let values = Array2::from_shape_vec((ids.len(), columns.len()), flat).map_err(|e| e.to_string())?;
    Ok((ids, columns, values))
}
