use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, MixedTable};
use crate::{Error, Result};

/// Per-column kind overrides, keyed by column name.
pub type Schema = HashMap<String, KindOverride>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindOverride {
    Numeric,
    Factor,
}

const MISSING_TOKEN: &str = "NA";

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == MISSING_TOKEN
}

/// Parse schema override lines of the form `column_name=numeric|factor`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut schema = Schema::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.rsplit_once('=').ok_or_else(|| Error::Parse {
            row: lineno + 1,
            message: format!("expected `name=numeric|factor`, got `{line}`"),
        })?;
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "numeric" => KindOverride::Numeric,
            "factor" => KindOverride::Factor,
            other => {
                return Err(Error::Parse {
                    row: lineno + 1,
                    message: format!("unknown column kind `{other}`"),
                })
            }
        };
        schema.insert(name.trim().to_owned(), kind);
    }
    Ok(schema)
}

pub fn read_csv(path: impl AsRef<Path>, schema: Option<&Schema>) -> Result<MixedTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(read_csv_from(file, schema)?.with_provenance(path.display().to_string()))
}

/// Read a comma-delimited table with a header row.
///
/// A column whose observed cells all parse as numbers becomes numeric,
/// otherwise it becomes a factor whose levels are the sorted distinct
/// strings. Empty cells and `NA` are missing, as is a literal `NaN` in a
/// numeric column. Row numbers in errors count data rows from 1.
pub fn read_csv_from<R: Read>(reader: R, schema: Option<&Schema>) -> Result<MixedTable> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyData);
    }
    let p = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); p];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != p {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {p} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_owned());
        }
    }

    let columns = header
        .into_iter()
        .zip(cells)
        .map(|(name, raw)| {
            let forced = schema.and_then(|s| s.get(&name)).copied();
            build_column(name, raw, forced)
        })
        .collect::<Result<Vec<_>>>()?;
    MixedTable::new(columns)
}

fn parse_number(s: &str) -> Option<f64> {
    // `inf` parses as a float but cannot be stored
    s.parse::<f64>().ok().filter(|v| !v.is_infinite())
}

fn build_column(name: String, raw: Vec<String>, forced: Option<KindOverride>) -> Result<Column> {
    let numeric_ok = || {
        raw.iter()
            .filter(|s| !is_missing_token(s))
            .all(|s| parse_number(s).is_some())
    };
    let as_numeric = match forced {
        Some(KindOverride::Numeric) => true,
        Some(KindOverride::Factor) => false,
        None => numeric_ok(),
    };
    if as_numeric {
        let values = raw
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if is_missing_token(s) {
                    Ok(None)
                } else {
                    parse_number(s).map(Some).ok_or_else(|| Error::Parse {
                        row: i + 1,
                        message: format!("column `{name}`: `{s}` is not numeric"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Column::numeric(name, values))
    } else {
        Ok(Column::factor_from_strings(
            name,
            raw.iter()
                .map(|s| (!is_missing_token(s)).then_some(s.as_str())),
        ))
    }
}

pub fn write_csv(table: &MixedTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(table, file).map_err(|e| match e {
        Error::Csv(err) if err.is_io_error() => match err.into_kind() {
            ::csv::ErrorKind::Io(io) => Error::io(path, io),
            kind => Error::Config(format!("{kind:?}")),
        },
        other => other,
    })
}

/// Write a table as CSV. Missing cells are written as `NA`; numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv_to<W: Write>(table: &MixedTable, writer: W) -> Result<()> {
    let mut wtr = ::csv::Writer::from_writer(writer);
    wtr.write_record(table.columns().iter().map(Column::name))?;
    let mut record: Vec<String> = Vec::with_capacity(table.n_cols());
    for i in 0..table.n_rows() {
        record.clear();
        for col in table.columns() {
            let field = match col.get(i) {
                None => MISSING_TOKEN.to_owned(),
                Some(v) if col.is_numeric() => format!("{v}"),
                Some(_) => col.level(i).expect("factor level").to_owned(),
            };
            record.push(field);
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
