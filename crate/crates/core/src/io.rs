//! CSV and JSON input/output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::distance::{ContourGrid, ContourPoint};
use crate::error::{Error, Result};
use crate::frechet::Alpha;
use crate::impute::DonorRecord;
use crate::simplex::{Composition, CompositionalTable};
use crate::simulation::TruthCell;
use crate::warning::Warning;

/// Layout of tabular files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    /// Cell contents read as missing, compared after trimming. The first is
    /// written for masked cells.
    pub na_tokens: Vec<String>,
    pub header: bool,
    /// Significant digits written per value.
    pub precision: usize,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            delimiter: b',',
            na_tokens: vec!["NA".into(), String::new(), "NaN".into()],
            header: true,
            precision: 10,
        }
    }
}

impl CsvSchema {
    fn validate(&self) -> Result<()> {
        if self.na_tokens.is_empty() {
            return Err(Error::InvalidConfig("at least one NA token is required".into()));
        }
        if self.precision == 0 || self.precision > 17 {
            return Err(Error::InvalidConfig(format!("precision {} outside 1..=17", self.precision)));
        }
        Ok(())
    }

    fn is_na(&self, field: &str) -> bool {
        self.na_tokens.iter().any(|t| t == field)
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a table from `path`. Rows are re-closed as by
/// [`CompositionalTable::from_rows`].
pub fn read_table(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(CompositionalTable, Vec<Warning>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    read_table_from(file, schema).map_err(|e| e.context(path.display().to_string()))
}

/// Reads a table from any reader. Line numbers in errors are 1-based and
/// count the header.
pub fn read_table_from<R: Read>(reader: R, schema: &CsvSchema) -> Result<(CompositionalTable, Vec<Warning>)> {
    schema.validate()?;
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names = if schema.header {
        let header = csv.headers().map_err(|source| Error::Csv {
            context: "header".into(),
            source,
        })?;
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(Error::EmptyInput("file is empty".into()));
        }
        Some(header.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let mut width = names.as_ref().map(Vec::len);
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|source| Error::Csv {
            context: "reading record".into(),
            source,
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        // A blank line is a single empty field.
        if record.len() == 1 && record[0].is_empty() && width != Some(1) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(expected);
        for (i, field) in record.iter().enumerate() {
            if schema.is_na(field) {
                row.push(None);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {}: '{field}' is not a number", i + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {}: '{field}' is not finite", i + 1),
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeCell { line, column: i + 1 });
            }
            row.push(Some(value));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no data rows".into()));
    }
    CompositionalTable::from_rows(rows, names)
}

/// `value` with `digits` significant digits, without exponent or trailing zeros.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0".into() } else { value.to_string() };
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{value:.decimals$}");
    // Rounding may carry into a new leading digit; the extra decimal is harmless.
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_error(path))
}

fn finish(path: &Path, mut writer: impl Write) -> Result<()> {
    writer.flush().map_err(io_error(path))
}

/// Writes `table` with masked cells as the first NA token.
pub fn write_table(path: impl AsRef<Path>, table: &CompositionalTable, schema: &CsvSchema) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_table_to(&mut out, table, schema).map_err(|e| e.context(path.display().to_string()))?;
    finish(path, out)
}

pub fn write_table_to<W: Write>(writer: W, table: &CompositionalTable, schema: &CsvSchema) -> Result<()> {
    schema.validate()?;
    let mut csv = csv::WriterBuilder::new().delimiter(schema.delimiter).from_writer(writer);
    let csv_error = |source| Error::Csv {
        context: "writing table".into(),
        source,
    };
    if schema.header {
        csv.write_record(table.column_names()).map_err(csv_error)?;
    }
    let na = schema.na_tokens[0].as_str();
    for r in 0..table.n_rows() {
        let fields = table.row(r).iter().zip(table.row_mask(r)).map(|(&v, &observed)| {
            if observed {
                format_significant(v, schema.precision)
            } else {
                na.to_string()
            }
        });
        csv.write_record(fields).map_err(csv_error)?;
    }
    csv.flush().map_err(|source| Error::Io {
        path: "<table>".into(),
        source,
    })
}

fn write_lines(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out = create(path)?;
    let io = io_error(path);
    let result = (|| {
        writeln!(out, "{header}")?;
        for line in lines {
            writeln!(out, "{line}")?;
        }
        out.flush()
    })();
    result.map_err(io)
}

/// Hidden cells as `row,column,value`; `row` is the 0-based data row and
/// `column` the column name.
pub fn write_truth(path: impl AsRef<Path>, truth: &[TruthCell], column_names: &[String], precision: usize) -> Result<()> {
    write_lines(
        path.as_ref(),
        "row,column,value",
        truth.iter().map(|t| {
            let name = column_names.get(t.column).cloned().unwrap_or_else(|| t.column.to_string());
            format!("{},{},{}", t.row, name, format_significant(t.value, precision))
        }),
    )
}

fn contour_line(p: &ContourPoint, precision: usize) -> String {
    format!(
        "{},{},{},{}",
        format_significant(p.a, precision),
        format_significant(p.b, precision),
        format_significant(p.c, precision),
        format_significant(p.distance, precision)
    )
}

/// Contour grid as `a,b,c,distance`, centre first.
pub fn write_contours(path: impl AsRef<Path>, grid: &ContourGrid, precision: usize) -> Result<()> {
    write_lines(
        path.as_ref(),
        "a,b,c,distance",
        std::iter::once(&grid.center)
            .chain(&grid.points)
            .map(|p| contour_line(p, precision)),
    )
}

/// One row per grid value: `alpha,<column names...>`.
pub fn write_trajectory(
    path: impl AsRef<Path>,
    grid: &[Alpha],
    means: &[Composition],
    column_names: &[String],
    precision: usize,
) -> Result<()> {
    if grid.len() != means.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: means.len(),
        });
    }
    let header = std::iter::once("alpha".to_string())
        .chain(column_names.iter().cloned())
        .collect::<Vec<_>>()
        .join(",");
    write_lines(
        path.as_ref(),
        &header,
        grid.iter().zip(means).map(|(a, m)| {
            std::iter::once(format_significant(a.value(), precision))
                .chain(m.iter().map(|&v| format_significant(v, precision)))
                .collect::<Vec<_>>()
                .join(",")
        }),
    )
}

/// Donor log as `row,k,alpha,donors,distances`; lists are `;`-separated and
/// `alpha` is empty for mean/median aggregation.
pub fn write_donor_log(path: impl AsRef<Path>, records: &[DonorRecord], precision: usize) -> Result<()> {
    let join = |items: Vec<String>| items.join(";");
    write_lines(
        path.as_ref(),
        "row,k,alpha,donors,distances",
        records.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.row,
                r.k,
                r.alpha.map(|a| a.to_string()).unwrap_or_default(),
                join(r.donors.iter().map(usize::to_string).collect()),
                join(r.distances.iter().map(|&d| format_significant(d, precision)).collect())
            )
        }),
    )
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_error(path))
}

/// One compact JSON object per warning.
pub fn warning_lines(warnings: &[Warning]) -> Result<Vec<String>> {
    warnings.iter().map(|w| serde_json::to_string(w).map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "x1,x2,x3,x4,x5\n\
        0.2,NA,0.3,0.1,NA\n\
        0.1,0.2,0.4,0.1,0.2\n\
        0.2,0.4,0.2,0.1,0.1\n\
        0.1,0.2,0.3,0.2,0.2\n";

    #[test]
    fn reads_worked_example() {
        let (t, warnings) = read_table_from(EXAMPLE.as_bytes(), &CsvSchema::default()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!((t.n_rows(), t.n_cols()), (4, 5));
        assert_eq!(t.row_mask(0), &[true, false, true, true, false]);
        assert!(t.is_complete_row(1));
        assert_eq!(t.column_names()[4], "x5");
    }

    #[test]
    fn crlf_and_trailing_blank_lines() {
        let crlf = EXAMPLE.replace('\n', "\r\n") + "\r\n";
        let a = read_table_from(EXAMPLE.as_bytes(), &CsvSchema::default()).unwrap().0;
        let b = read_table_from(crlf.as_bytes(), &CsvSchema::default()).unwrap().0;
        assert_eq!(a.column_names(), b.column_names());
        for r in 0..a.n_rows() {
            assert_eq!(a.row_mask(r), b.row_mask(r));
        }
        assert_eq!(a.get(2, 1), b.get(2, 1));
    }

    #[test]
    fn parse_errors() {
        let schema = CsvSchema::default();
        let err = read_table_from("".as_bytes(), &schema).unwrap_err();
        assert_eq!(err.kind(), "EmptyInput");
        let err = read_table_from("a,b\n".as_bytes(), &schema).unwrap_err();
        assert_eq!(err.kind(), "EmptyInput");
        let err = read_table_from("a,b\n0.5,0.5\n0.5\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = read_table_from("a,b\n0.5,x\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_table_from("a,b\n0.5,0.5\n1.5,-0.5\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::NegativeCell { line: 3, column: 2 }));
        let err = read_table_from("a,b\n0.5,inf\n".as_bytes(), &schema).unwrap_err();
        assert_eq!(err.kind(), "ParseError");
    }

    #[test]
    fn headerless_and_custom_tokens() {
        let schema = CsvSchema {
            delimiter: b';',
            na_tokens: vec!["?".into()],
            header: false,
            precision: 6,
        };
        let (t, _) = read_table_from("0.5;?\n0.25;0.75\n".as_bytes(), &schema).unwrap();
        assert_eq!(t.column_names(), &["x1".to_string(), "x2".to_string()]);
        assert!(!t.is_observed(0, 1));
        let mut out = Vec::new();
        write_table_to(&mut out, &t, &schema).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0.5;?\n0.25;0.75\n");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 10), "0");
        assert_eq!(format_significant(1.0, 10), "1");
        assert_eq!(format_significant(2.0 / 3.0, 10), "0.6666666667");
        assert_eq!(format_significant(0.26666666666666666, 4), "0.2667");
        assert_eq!(format_significant(1.5e-12, 3), "0.0000000000015");
        assert_eq!(format_significant(123456.789, 4), "123457");
        assert_eq!(format_significant(-0.25, 10), "-0.25");
    }

    #[test]
    fn writes_na_only_at_masked_cells() {
        let (t, _) = read_table_from(EXAMPLE.as_bytes(), &CsvSchema::default()).unwrap();
        let mut out = Vec::new();
        write_table_to(&mut out, &t, &CsvSchema::default()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, EXAMPLE);
    }

    #[test]
    fn file_round_trip_and_io_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let (t, _) = read_table_from(EXAMPLE.as_bytes(), &CsvSchema::default()).unwrap();
        write_table(&path, &t, &CsvSchema::default()).unwrap();
        let (back, _) = read_table(&path, &CsvSchema::default()).unwrap();
        for r in 0..t.n_rows() {
            assert_eq!(back.row_mask(r), t.row_mask(r));
            for c in 0..t.n_cols() {
                assert_eq!(back.get(r, c), t.get(r, c));
            }
        }
        let err = read_table(dir.path().join("missing.csv"), &CsvSchema::default()).unwrap_err();
        assert_eq!(err.kind(), "IoError");
        assert!(err.to_string().contains("missing.csv"));
    }
}
