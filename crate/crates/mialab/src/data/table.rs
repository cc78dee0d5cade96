//! Flat-file ingestion and export for feature tables.
//!
//! Format: one record per line, `id,label,f_0,...,f_{d-1}`, with an optional
//! header line starting with `id`. The feature dimension is inferred from
//! the first data row and enforced on every following row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{LabeledDataset, Record};
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Reads a labeled feature table from `path`.
pub fn load_table<S: Scalar>(path: &Path, class_count: Option<usize>) -> Result<LabeledDataset<S>> {
    let file = File::open(path)?;
    parse_table(BufReader::new(file), class_count)
}

/// Parses a labeled feature table from any reader. `class_count` defaults to
/// `max label + 1` when not given.
pub fn parse_table<S: Scalar, R: BufRead>(
    reader: R,
    class_count: Option<usize>,
) -> Result<LabeledDataset<S>> {
    let mut records: Vec<Record<S>> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut max_label = 0usize;

    for (line_no, line) in reader.lines().enumerate() {
        let row = line_no + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if row == 1 && fields.first() == Some(&"id") {
            continue; // header line
        }
        if fields.len() < 3 {
            return Err(Error::Parse(format!(
                "row {row}: expected `id,label,f_0,...` but found {} fields",
                fields.len()
            )));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: id `{}` is not an integer", fields[0])))?;
        let label: usize = fields[1].parse().map_err(|_| {
            Error::Parse(format!("row {row}: label `{}` is not a non-negative integer", fields[1]))
        })?;
        let features: Vec<S> = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map(cast::<S>)
                    .map_err(|_| Error::Parse(format!("row {row}: feature `{f}` is not a number")))
            })
            .collect::<Result<_>>()?;

        match dim {
            None => dim = Some(features.len()),
            Some(d) if d != features.len() => {
                return Err(Error::Parse(format!(
                    "row {row}: {} features but the table uses {d}",
                    features.len()
                )));
            }
            _ => {}
        }
        max_label = max_label.max(label);
        records.push(Record { id, features, label });
    }

    if records.is_empty() {
        return Err(Error::Parse("table holds no data rows".into()));
    }
    let classes = class_count.unwrap_or(max_label + 1);
    LabeledDataset::new(records, classes)
}

/// Writes a dataset in the same format, header included.
pub fn save_table<S: Scalar>(dataset: &LabeledDataset<S>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_table(dataset, BufWriter::new(file))
}

pub fn write_table<S: Scalar, W: Write>(dataset: &LabeledDataset<S>, mut out: W) -> Result<()> {
    let dim = dataset.feature_dim();
    write!(out, "id,label")?;
    for d in 0..dim {
        write!(out, ",f_{d}")?;
    }
    writeln!(out)?;
    for rec in dataset.iter() {
        write!(out, "{},{}", rec.id, rec.label)?;
        for x in &rec.features {
            write!(out, ",{}", x.to_f64().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parses_well_formed_table() {
        let text = "id,label,f_0,f_1\n0,0,1.5,2.5\n1,1,-0.5,0.25\n2,0,0,0\n";
        let data: LabeledDataset<f64> = parse_table(Cursor::new(text), None).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.class_count(), 2);
        assert_eq!(data.records()[1].features, vec![-0.5, 0.25]);
    }

    #[test]
    fn headerless_table_also_parses() {
        let text = "0,0,1.0\n1,1,2.0\n";
        let data: LabeledDataset<f64> = parse_table(Cursor::new(text), None).unwrap();
        assert_eq!(data.len(), 2);
    }

    #[test]
    fn ragged_row_names_the_row() {
        let text = "0,0,1.0,2.0\n1,1,3.0\n";
        let err = parse_table::<f64, _>(Cursor::new(text), None).unwrap_err();
        assert!(matches!(err, Error::Parse(ref m) if m.contains("row 2")));
    }

    #[test]
    fn non_integer_label_is_a_parse_error() {
        let text = "0,zero,1.0\n";
        assert!(matches!(
            parse_table::<f64, _>(Cursor::new(text), None),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn duplicate_id_is_an_integrity_error() {
        let text = "7,0,1.0\n7,1,2.0\n";
        assert!(matches!(
            parse_table::<f64, _>(Cursor::new(text), None),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn round_trip_preserves_records() {
        let text = "id,label,f_0,f_1\n0,0,1.5,2.5\n1,1,-0.5,0.25\n";
        let data: LabeledDataset<f64> = parse_table(Cursor::new(text), None).unwrap();
        let mut buf = Vec::new();
        write_table(&data, &mut buf).unwrap();
        let back: LabeledDataset<f64> = parse_table(Cursor::new(buf), None).unwrap();
        assert_eq!(data.records(), back.records());
    }
}
