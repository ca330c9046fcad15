//! CSV surfaces: single-column field files and `i,j,w` adjacency lists.
//!
//! Numbers are written with round-trip formatting, so a write/read cycle is
//! lossless for the native float width.

use crate::error::{Error, Result};
use crate::lattice::WeightMatrix;
use crate::scalar::Scalar;
use std::io::{Read, Write};
use std::path::Path;

/// `(i, j, raw_weight)` edges paired with the inferred location count.
pub type EdgeList<T> = (Vec<(usize, usize, T)>, usize);

fn parse_scalar<T: Scalar>(s: &str, line: usize) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        msg: format!("'{s}' is not a number"),
    })
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("'{s}' is not an index"),
    })
}

/// Read a single-column field CSV; a leading `z` header is optional.
pub fn read_field<T: Scalar, R: Read>(reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let cell = record.get(0).unwrap_or("");
        if i == 0 && cell.trim().eq_ignore_ascii_case("z") {
            continue;
        }
        out.push(parse_scalar(cell, i + 1)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("field csv has no values"));
    }
    Ok(out)
}

pub fn read_field_path<T: Scalar>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_field(file)
}

pub fn write_field<T: Scalar, W: Write>(mut writer: W, values: &[T]) -> Result<()> {
    let mut emit = || -> std::io::Result<()> {
        writeln!(writer, "z")?;
        for v in values {
            writeln!(writer, "{v}")?;
        }
        Ok(())
    };
    emit().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_field_path<T: Scalar>(path: &Path, values: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_field(file, values)
}

/// Read an adjacency CSV with header `i,j,w`; n is inferred as max index + 1.
pub fn read_adjacency<T: Scalar, R: Read>(reader: R) -> Result<EdgeList<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut pairs = Vec::new();
    let mut n = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if record.len() < 3 {
            return Err(Error::Parse {
                line,
                msg: "expected i,j,w".into(),
            });
        }
        let i_idx = parse_index(&record[0], line)?;
        let j_idx = parse_index(&record[1], line)?;
        let w = parse_scalar(&record[2], line)?;
        n = n.max(i_idx + 1).max(j_idx + 1);
        pairs.push((i_idx, j_idx, w));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("adjacency csv has no edges"));
    }
    Ok((pairs, n))
}

pub fn read_adjacency_path<T: Scalar>(path: &Path) -> Result<EdgeList<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_adjacency(file)
}

/// Write the raw-weight edge list with header `i,j,w`.
pub fn write_adjacency<T: Scalar, W: Write>(mut writer: W, matrix: &WeightMatrix<T>) -> Result<()> {
    let mut emit = || -> std::io::Result<()> {
        writeln!(writer, "i,j,w")?;
        for (i, j, w) in matrix.to_adjacency() {
            writeln!(writer, "{i},{j},{w}")?;
        }
        Ok(())
    };
    emit().map_err(|e| Error::Io(e.to_string()))
}
