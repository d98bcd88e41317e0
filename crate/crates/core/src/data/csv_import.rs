use serde::{Deserialize, Serialize};

use super::{Dataset, Record};
use crate::error::{Error, Result};

/// How series are laid out in a CSV file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvLayout {
    /// Header row of series ids; one column per series. Ragged columns are
    /// trimmed at their last non-empty cell.
    Wide,
    /// No header; each row is `id,v1,v2,…`.
    Rows,
}

fn cell(s: &str, row: usize, col: usize) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Ok(f64::NAN);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Data(format!("csv row {row}, column {col}: bad value `{s}`"))),
    }
}

/// Converts CSV text to a dataset. Empty, `NA` and `NaN` cells are missing.
pub fn import_csv(text: &str, layout: CsvLayout) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(layout == CsvLayout::Wide)
        .flexible(true)
        .from_reader(text.as_bytes());
    let err = |e: csv::Error| Error::Data(format!("csv: {e}"));
    match layout {
        CsvLayout::Rows => {
            let mut records = Vec::new();
            for (r, row) in reader.records().enumerate() {
                let row = row.map_err(err)?;
                let mut it = row.iter();
                let Some(id) = it.next() else { continue };
                let values = it.enumerate().map(|(c, s)| cell(s, r + 1, c + 2)).collect::<Result<Vec<_>>>()?;
                if values.is_empty() {
                    return Err(Error::Data(format!("csv row {}: series `{id}` has no values", r + 1)));
                }
                records.push(Record { id: id.to_string(), values });
            }
            Ok(Dataset::new(records))
        }
        CsvLayout::Wide => {
            let ids: Vec<String> = reader.headers().map_err(err)?.iter().map(str::to_string).collect();
            let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
            let mut filled = vec![0usize; ids.len()];
            for (r, row) in reader.records().enumerate() {
                let row = row.map_err(err)?;
                for (c, col) in columns.iter_mut().enumerate() {
                    let raw = row.get(c).unwrap_or("");
                    col.push(cell(raw, r + 2, c + 1)?);
                    if !raw.trim().is_empty() {
                        filled[c] = col.len();
                    }
                }
            }
            let records = ids
                .into_iter()
                .zip(columns)
                .zip(filled)
                .filter(|(_, n)| *n > 0)
                .map(|((id, mut values), n)| {
                    values.truncate(n);
                    Record { id, values }
                })
                .collect();
            Ok(Dataset::new(records))
        }
    }
}
