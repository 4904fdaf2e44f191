//! Reading and writing distributions as JSON or two-column CSV.
//!
//! Numbers are printed in shortest round-trip form, so parsing an emitted
//! file reproduces every atom bit for bit.

use std::path::Path;

use serde::Deserialize;

use crate::dist::{Atom, Distribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` files are CSV; anything else is sniffed from its first
    /// non-blank character.
    pub fn detect(path: &Path, text: &str) -> Format {
        let by_ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("csv"))
            .unwrap_or(false);
        if by_ext || !text.trim_start().starts_with('{') {
            Format::Csv
        } else {
            Format::Json
        }
    }
}

pub fn parse_json(text: &str) -> Result<Distribution> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Deserialize)]
struct CsvRow {
    value: f64,
    prob: f64,
}

pub fn parse_csv(text: &str) -> Result<Distribution> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["value", "prob"] {
        return Err(Error::Parse(format!(
            "expected header `value,prob`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let atoms = reader
        .deserialize::<CsvRow>()
        .map(|r| {
            r.map(|r| Atom {
                value: r.value,
                prob: r.prob,
            })
            .map_err(|e| Error::Parse(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Distribution::from_atoms(atoms)
}

pub fn parse(text: &str, format: Format) -> Result<Distribution> {
    match format {
        Format::Json => parse_json(text),
        Format::Csv => parse_csv(text),
    }
}

pub fn to_json(d: &Distribution) -> String {
    serde_json::to_string(d).expect("distributions always serialize")
}

pub fn to_csv(d: &Distribution) -> String {
    let mut out = String::from("value,prob\n");
    for a in d.atoms() {
        out.push_str(&format!("{},{}\n", a.value, a.prob));
    }
    out
}

pub fn read_distribution(path: &Path) -> Result<Distribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse(&text, Format::detect(path, &text)).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_distribution(path: &Path, d: &Distribution, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => to_json(d),
        Format::Csv => to_csv(d),
    };
    std::fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
