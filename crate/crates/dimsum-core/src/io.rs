//! Matrix file formats: MatrixMarket coordinate and TSV triples.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseRowMatrix;
use crate::pipelines::SimilarityMatrix;
use crate::spectral::DenseSymmetric;

/// Supported sparse input/output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// `%%MatrixMarket matrix coordinate real general`, 1-based indices.
    MatrixMarket,
    /// `row<TAB>col<TAB>value` lines, 0-based indices, dimensions inferred.
    TsvTriples,
}

/// A parsed matrix plus the count of explicit zeros that were dropped.
#[derive(Debug)]
pub struct Loaded {
    pub matrix: SparseRowMatrix,
    pub dropped_zeros: usize,
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<Loaded> {
    let file = File::open(path)?;
    read_matrix(BufReader::new(file), format)
}

pub fn read_matrix(reader: impl BufRead, format: MatrixFormat) -> Result<Loaded> {
    match format {
        MatrixFormat::MatrixMarket => read_market(reader),
        MatrixFormat::TsvTriples => read_tsv(reader),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn read_market(reader: impl BufRead) -> Result<Loaded> {
    let mut lines = reader.lines().enumerate();

    let (line_no, header) = match lines.next() {
        Some((i, line)) => (i + 1, line?),
        None => return Err(parse_err(1, "empty file")),
    };
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "general"];
    if fields.len() != expected.len() || fields.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(parse_err(
            line_no,
            format!("expected header `%%MatrixMarket matrix coordinate real general`, got `{header}`"),
        ));
    }

    // Skip comments, read the dimensions line.
    let (mut n_rows, mut n_cols, mut declared_nnz) = (0usize, 0usize, 0usize);
    let mut dims_seen = false;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        if !dims_seen {
            n_rows = parse_field(&mut parts, line_no, "row count")?;
            n_cols = parse_field(&mut parts, line_no, "column count")?;
            declared_nnz = parse_field(&mut parts, line_no, "nonzero count")?;
            dims_seen = true;
            triples.reserve(declared_nnz);
            continue;
        }
        if seen == declared_nnz {
            return Err(parse_err(line_no, "more entries than declared"));
        }
        let row: i64 = parse_field(&mut parts, line_no, "row index")?;
        let col: i64 = parse_field(&mut parts, line_no, "column index")?;
        let value: f64 = parse_field(&mut parts, line_no, "value")?;
        if !value.is_finite() {
            return Err(parse_err(line_no, format!("non-finite value {value}")));
        }
        if row < 1 || row as usize > n_rows || col < 1 || col as usize > n_cols {
            return Err(Error::IndexOutOfBounds {
                row: row.max(1) as usize - 1,
                col: col.max(1) as usize - 1,
                n_rows,
                n_cols,
            });
        }
        triples.push((row as usize - 1, col as usize - 1, value));
        seen += 1;
    }
    if !dims_seen {
        return Err(parse_err(0, "missing dimensions line"));
    }
    if seen != declared_nnz {
        return Err(parse_err(
            0,
            format!("declared {declared_nnz} entries but found {seen}"),
        ));
    }
    let (matrix, dropped_zeros) = SparseRowMatrix::from_triples(n_rows, n_cols, triples)?;
    Ok(Loaded {
        matrix,
        dropped_zeros,
    })
}

fn read_tsv(reader: impl BufRead) -> Result<Loaded> {
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    let (mut max_row, mut max_col) = (0usize, 0usize);
    let mut any = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let row: usize = parse_field(&mut parts, line_no, "row index")?;
        let col: usize = parse_field(&mut parts, line_no, "column index")?;
        let value: f64 = parse_field(&mut parts, line_no, "value")?;
        if !value.is_finite() {
            return Err(parse_err(line_no, format!("non-finite value {value}")));
        }
        max_row = max_row.max(row);
        max_col = max_col.max(col);
        any = true;
        triples.push((row, col, value));
    }
    let (n_rows, n_cols) = if any { (max_row + 1, max_col + 1) } else { (0, 0) };
    let (matrix, dropped_zeros) = SparseRowMatrix::from_triples(n_rows, n_cols, triples)?;
    Ok(Loaded {
        matrix,
        dropped_zeros,
    })
}

fn parse_field<T: std::str::FromStr>(
    parts: &mut dyn Iterator<Item = &str>,
    line_no: usize,
    what: &str,
) -> Result<T> {
    let raw = parts
        .next()
        .ok_or_else(|| parse_err(line_no, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| parse_err(line_no, format!("cannot parse {what} from `{raw}`")))
}

pub fn write_matrix(
    matrix: &SparseRowMatrix,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    write_matrix_to(matrix, &mut writer, format)?;
    writer.flush()?;
    Ok(())
}

pub fn write_matrix_to(
    matrix: &SparseRowMatrix,
    writer: &mut impl Write,
    format: MatrixFormat,
) -> Result<()> {
    match format {
        MatrixFormat::MatrixMarket => {
            writeln!(writer, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(
                writer,
                "{} {} {}",
                matrix.n_rows(),
                matrix.n_cols(),
                matrix.nnz()
            )?;
            for (r, c, v) in matrix.iter_entries() {
                writeln!(writer, "{} {} {}", r + 1, c + 1, v)?;
            }
        }
        MatrixFormat::TsvTriples => {
            for (r, c, v) in matrix.iter_entries() {
                writeln!(writer, "{r}\t{c}\t{v}")?;
            }
        }
    }
    Ok(())
}

/// Write a similarity matrix in MatrixMarket symmetric coordinate form
/// (lower triangle, 1-based).
pub fn write_similarity_market(
    similarity: &SimilarityMatrix,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    let dense = similarity.as_dense();
    let entries: Vec<(usize, usize, f64)> =
        dense.iter_upper().filter(|&(_, _, v)| v != 0.0).collect();
    writeln!(writer, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(writer, "{} {} {}", dense.n(), dense.n(), entries.len())?;
    for (i, j, v) in entries {
        // Upper-triangle (i, j) emitted as lower-triangle (j, i).
        writeln!(writer, "{} {} {}", j + 1, i + 1, v)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a dense symmetric matrix as a full tab-separated grid.
pub fn write_dense_tsv(matrix: &DenseSymmetric, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for i in 0..matrix.n() {
        let row: Vec<String> = (0..matrix.n())
            .map(|j| format!("{}", matrix.get(i, j)))
            .collect();
        writeln!(writer, "{}", row.join("\t"))?;
    }
    writer.flush()?;
    Ok(())
}
