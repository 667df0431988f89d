use std::io::{Read, Write};
use std::path::Path;

use crate::data::{DatasetSchema, LabelMapping, RawDataset};
use crate::error::DataError;

const MISSING_TOKENS: [&str; 4] = ["", "NA", "NaN", "missing"];

/// Loads a CSV with a header row. Column order is free; columns not named
/// by the schema are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<RawDataset, DataError> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &DatasetSchema) -> Result<RawDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let feature_cols = schema
        .features
        .iter()
        .map(|f| position(&f.name))
        .collect::<Result<Vec<_>, _>>()?;
    let label_col = position(&schema.label.column)?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_cols.len());
        for (p, &c) in feature_cols.iter().enumerate() {
            let field = record.get(c).unwrap_or("");
            let value = if MISSING_TOKENS.iter().any(|t| t.eq_ignore_ascii_case(field)) {
                None
            } else {
                let v: f64 = field.parse().map_err(|_| DataError::UnparsableValue {
                    row: i,
                    column: schema.features[p].name.clone(),
                    value: field.to_string(),
                })?;
                (!schema.missing_codes(p).contains(&v)).then_some(v)
            };
            row.push(value);
        }
        let raw_label = record.get(label_col).unwrap_or("");
        let label = schema
            .label
            .parse(raw_label)
            .ok_or_else(|| DataError::UnknownLabelValue {
                row: i,
                value: raw_label.to_string(),
            })?;
        rows.push(row);
        labels.push(label);
    }
    Ok(RawDataset {
        feature_names: schema.feature_names(),
        rows,
        labels,
    })
}

/// Writes the features followed by the label column. Missing values are
/// written as empty fields.
pub fn write_csv<W: Write>(data: &RawDataset, label: &LabelMapping, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = data.feature_names.clone();
    header.push(label.column.clone());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        record.clear();
        record.extend(row.iter().map(|v| v.map_or_else(String::new, |x| x.to_string())));
        record.push(label.render(y).to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
