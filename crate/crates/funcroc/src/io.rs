//! Curve files: a header `label,t1,...,tm` followed by one row per subject
//! whose first cell is `D` or `H`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use funcroc_core::{FunctionalSample, Grid, Group};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {reason}")]
    Header { line: u64, reason: String },
    #[error("line {line}: expected {expected} cells, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}: unknown label '{label}' (expected D or H)")]
    Label { line: u64, label: String },
    #[error("line {line}, column {column}: non-finite value '{text}'")]
    NonFinite { line: u64, column: usize, text: String },
    #[error("line {line}, column {column}: cannot parse '{text}' as a number")]
    Number { line: u64, column: usize, text: String },
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error("no curves labelled {0}")]
    EmptyGroup(char),
    #[error(transparent)]
    Core(#[from] funcroc_core::Error),
}

fn label_char(g: Group) -> char {
    match g {
        Group::Diseased => 'D',
        Group::Healthy => 'H',
    }
}

/// Reads a curve file from disk.
pub fn ingest_curves(path: impl AsRef<Path>) -> Result<(FunctionalSample, FunctionalSample), ParseError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_curves(file)
}

/// Parses a curve file from any reader.
pub fn read_curves(reader: impl Read) -> Result<(FunctionalSample, FunctionalSample), ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => {
            return Err(ParseError::Header {
                line: 1,
                reason: "file is empty".into(),
            })
        }
    };
    let line = header.position().map_or(1, |p| p.line());
    if header.get(0).map(|s| s.trim_start_matches('\u{feff}')) != Some("label") {
        return Err(ParseError::Header {
            line,
            reason: "first cell must be 'label'".into(),
        });
    }
    let mut points = Vec::with_capacity(header.len() - 1);
    for (column, cell) in header.iter().enumerate().skip(1) {
        let t = parse_cell(cell, line, column + 1).map_err(|e| match e {
            ParseError::Number { text, .. } | ParseError::NonFinite { text, .. } => ParseError::Header {
                line,
                reason: format!("abscissa '{text}' in column {} is not a finite number", column + 1),
            },
            other => other,
        })?;
        points.push(t);
    }
    let grid = Arc::new(Grid::new(points).map_err(|e| ParseError::Header {
        line,
        reason: e.to_string(),
    })?);
    let width = grid.len() + 1;

    let mut rows: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != width {
            return Err(ParseError::Ragged {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let slot = match record.get(0).unwrap_or("") {
            "D" | "d" => 0,
            "H" | "h" => 1,
            other => {
                return Err(ParseError::Label {
                    line,
                    label: other.to_string(),
                })
            }
        };
        for (column, cell) in record.iter().enumerate().skip(1) {
            rows[slot].push(parse_cell(cell, line, column + 1)?);
        }
    }

    let m = grid.len();
    let mut build = |slot: usize, group: Group| -> Result<FunctionalSample, ParseError> {
        let values = std::mem::take(&mut rows[slot]);
        if values.is_empty() {
            return Err(ParseError::EmptyGroup(label_char(group)));
        }
        let n = values.len() / m;
        let matrix = funcroc_core::DMatrix::from_row_slice(n, m, &values);
        Ok(FunctionalSample::new(grid.clone(), matrix, group)?)
    };
    let d = build(0, Group::Diseased)?;
    let h = build(1, Group::Healthy)?;
    Ok((d, h))
}

fn parse_cell(cell: &str, line: u64, column: usize) -> Result<f64, ParseError> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(ParseError::NonFinite {
            line,
            column,
            text: cell.to_string(),
        }),
        Err(_) => Err(ParseError::Number {
            line,
            column,
            text: cell.to_string(),
        }),
    }
}

fn csv_error(e: csv::Error) -> ParseError {
    let line = e.position().map_or(0, |p| p.line());
    ParseError::Csv {
        line,
        reason: e.to_string(),
    }
}

/// Writes both samples in the curve-file format, diseased rows first.
pub fn write_curves(
    mut out: impl Write,
    d: &FunctionalSample,
    h: &FunctionalSample,
) -> std::io::Result<()> {
    write!(out, "label")?;
    for t in d.grid().points() {
        write!(out, ",{t}")?;
    }
    writeln!(out)?;
    for s in [d, h] {
        let label = label_char(s.group());
        for row in s.values().row_iter() {
            write!(out, "{label}")?;
            for v in row.iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(FunctionalSample, FunctionalSample), ParseError> {
        read_curves(text.as_bytes())
    }

    #[test]
    fn toy_file() {
        let (d, h) = parse("label,0.0,0.5,1.0\nD,1,2,3\nH,0,0,0\nD,4,5,6\n").unwrap();
        assert_eq!((d.len(), h.len()), (2, 1));
        assert_eq!(d.values()[(1, 2)], 6.0);
        assert_eq!(d.grid().points(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn crlf_and_blank_lines() {
        let (d, h) = parse("label,0.25,0.75\r\nD,1,2\r\n\r\nH,3,4\r\n").unwrap();
        assert_eq!((d.len(), h.len()), (1, 1));
    }

    #[test]
    fn nan_cell_is_reported_with_position() {
        let e = parse("label,0.5,1\nD,1,2\nH,NaN,3\n").unwrap_err();
        assert!(matches!(e, ParseError::NonFinite { line: 3, column: 2, .. }), "{e}");
        let e = parse("label,0.5,1\nD,1,inf\nH,1,3\n").unwrap_err();
        assert!(matches!(e, ParseError::NonFinite { line: 2, column: 3, .. }), "{e}");
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(parse(""), Err(ParseError::Header { .. })));
        assert!(matches!(parse("id,0.5,1\nD,1,2\n"), Err(ParseError::Header { line: 1, .. })));
        assert!(matches!(parse("label,0.5,0.2\nD,1,2\n"), Err(ParseError::Header { .. })));
        assert!(matches!(parse("label,0.5,x\nD,1,2\n"), Err(ParseError::Header { .. })));
        assert!(matches!(
            parse("label,0.5,1\nD,1,2\nH,1\n"),
            Err(ParseError::Ragged { line: 3, expected: 3, found: 2 })
        ));
        assert!(matches!(parse("label,0.5,1\nX,1,2\n"), Err(ParseError::Label { line: 2, .. })));
        assert!(matches!(
            parse("label,0.5,1\nD,1,abc\nH,1,2\n"),
            Err(ParseError::Number { line: 2, column: 3, .. })
        ));
        assert!(matches!(parse("label,0.5,1\nD,1,2\n"), Err(ParseError::EmptyGroup('H'))));
    }

    #[test]
    fn write_then_read() {
        let (d, h) = parse("label,0.1,0.6,1\nD,1.5,-2,3e-3\nH,0,0.25,7\nH,1,1,1\n").unwrap();
        let mut buf = Vec::new();
        write_curves(&mut buf, &d, &h).unwrap();
        let (d2, h2) = read_curves(buf.as_slice()).unwrap();
        assert_eq!(d, d2);
        assert_eq!(h, h2);
    }
}
