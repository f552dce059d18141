//! Delimited text → [`RawTable`]. Files ending in `.gz` are decompressed on
//! the fly.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use goad_core::dataset::{ColumnKind, RawColumn, RawTable};

use crate::error::{GoadError, Result};
use crate::schema::SchemaFile;

pub fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| GoadError::io(path, e))?;
    let reader = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

pub fn load_table(path: &Path, schema: &SchemaFile) -> Result<RawTable> {
    let table = read_table(open_maybe_gz(path)?, schema, path)?;
    log::info!("{}: {} rows", path.display(), table.rows());
    Ok(table)
}

/// Parses from any reader; `path` is only used in error messages.
pub fn read_table(reader: impl Read, schema: &SchemaFile, path: &Path) -> Result<RawTable> {
    let table_schema = schema.table_schema()?;
    let specs = table_schema.columns();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut columns: Vec<RawColumn> = specs
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Continuous => RawColumn::Numeric(Vec::new()),
            ColumnKind::Categorical | ColumnKind::Label => RawColumn::Text(Vec::new()),
            ColumnKind::Ignore => RawColumn::Skipped,
        })
        .collect();

    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(GoadError::Csv {
                    path: path.to_owned(),
                    message: e.to_string(),
                })
            }
        }
        let row = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != specs.len() {
            return Err(GoadError::Parse {
                path: path.to_owned(),
                row,
                column: record.len().min(specs.len()) + 1,
                name: specs.get(record.len()).map_or("<end>", |c| c.name.as_str()).to_owned(),
                message: format!("expected {} fields, found {}", specs.len(), record.len()),
            });
        }
        for (j, (field, col)) in record.iter().zip(columns.iter_mut()).enumerate() {
            match col {
                RawColumn::Numeric(v) => {
                    let parsed = field.parse::<f64>().ok().filter(|x| x.is_finite());
                    v.push(parsed.ok_or_else(|| GoadError::Parse {
                        path: path.to_owned(),
                        row,
                        column: j + 1,
                        name: specs[j].name.clone(),
                        message: format!("`{field}` is not a finite number"),
                    })?);
                }
                RawColumn::Text(v) => v.push(field.to_owned()),
                RawColumn::Skipped => {}
            }
        }
    }
    Ok(RawTable::new(table_schema, columns)?)
}
