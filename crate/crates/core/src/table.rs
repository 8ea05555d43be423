//! CSV / JSON emission of record tables.
//!
//! CSV files may start with a `# schema: <name>/v<k>` comment line; readers
//! skip `#` lines and reject a schema line that names a different schema.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const SCHEMA_PREFIX: &str = "# schema: ";

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("unknown output format {other:?}"))),
        }
    }
}

pub fn write_csv<T: Serialize, W: Write>(
    rows: &[T],
    mut out: W,
    schema: Option<&str>,
) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("refusing to emit an empty table"));
    }
    if let Some(schema) = schema {
        writeln!(out, "{SCHEMA_PREFIX}{schema}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn check_schema(text: &str, expected: Option<&str>) -> Result<()> {
    let Some(expected) = expected else {
        return Ok(());
    };
    if let Some(found) = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(SCHEMA_PREFIX))
    {
        if found.trim() != expected {
            return Err(Error::Schema(format!(
                "expected {expected}, found {}",
                found.trim()
            )));
        }
    }
    Ok(())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(
    mut input: R,
    schema: Option<&str>,
) -> Result<Vec<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    check_schema(&text, schema)?;
    let rows = csv_reader(&text)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_json<T: Serialize, W: Write>(rows: &[T], mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("refusing to emit an empty table"));
    }
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_table<T: Serialize, W: Write>(
    rows: &[T],
    out: W,
    format: Format,
    schema: Option<&str>,
) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, out, schema),
        Format::Json => write_json(rows, out),
    }
}

/// Numeric columns of an arbitrary CSV table, keyed by header name.
#[derive(Debug, Clone, Default)]
pub struct NumericColumns {
    headers: Vec<String>,
    columns: HashMap<String, Vec<f64>>,
}

impl NumericColumns {
    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut reader = csv_reader(&text);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let mut columns: HashMap<String, Vec<f64>> = HashMap::new();
        for record in reader.records() {
            let record = record?;
            for (name, field) in headers.iter().zip(record.iter()) {
                // non-numeric cells (e.g. an enum column) are recorded as NaN
                let value = field.trim().parse::<f64>().unwrap_or(f64::NAN);
                columns.entry(name.clone()).or_default().push(value);
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    }
}

/// Serde adapter storing `NaN` as an absent value (`null` / empty cell).
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
