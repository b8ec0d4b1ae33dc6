//! On-disk formats for matrices, spectral bases and point maps.
//!
//! Matrices are stored either as CSV (one row per line) or in a binary
//! container: an 8-byte magic, the row and column counts as little-endian
//! `u64`, then the entries as little-endian `f64` in row-major order. A
//! spectral basis is three consecutive containers: eigenvalues (`1 × k`),
//! eigenfunctions (`n × k`) and lumped masses (`n × 1`). Point maps are text
//! files with one 0-based target index per line.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmap::PointMap;
use crate::spectral::SpectralBasis;

pub const MATRIX_MAGIC: &[u8; 8] = b"FMAPMAT\x01";

pub fn write_matrix_bin(out: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64(input: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Reads one container; `what` names the source in error messages.
pub fn read_matrix_bin(input: &mut impl Read, what: &str) -> Result<DMatrix<f64>> {
    let bad = |msg: String| Error::parse(what, msg);
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|e| bad(format!("missing header: {e}")))?;
    if &magic != MATRIX_MAGIC {
        return Err(bad("not a matrix container".into()));
    }
    let rows = read_u64(input).map_err(|e| bad(format!("missing row count: {e}")))?;
    let cols = read_u64(input).map_err(|e| bad(format!("missing column count: {e}")))?;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .filter(|&n| n <= isize::MAX as u64)
        .ok_or_else(|| bad(format!("implausible dimensions {rows} x {cols}")))?;
    let mut bytes = Vec::new();
    input
        .take(len)
        .read_to_end(&mut bytes)
        .map_err(|e| bad(e.to_string()))?;
    if bytes.len() as u64 != len {
        return Err(bad(format!("expected {len} data bytes, found {}", bytes.len())));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    Ok(DMatrix::from_row_iterator(rows as usize, cols as usize, values))
}

pub fn save_matrix_bin(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_matrix_bin(&mut buf, m).expect("writing to memory");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_matrix_bin(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    read_matrix_bin(&mut bytes.as_slice(), &path.display().to_string())
}

pub fn save_basis(path: impl AsRef<Path>, basis: &SpectralBasis) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_matrix_bin(&mut buf, &DMatrix::from_row_slice(1, basis.k(), basis.evals())).expect("writing to memory");
    write_matrix_bin(&mut buf, basis.phi()).expect("writing to memory");
    write_matrix_bin(&mut buf, &DMatrix::from_column_slice(basis.n(), 1, basis.mass())).expect("writing to memory");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<SpectralBasis> {
    let path = path.as_ref();
    let what = path.display().to_string();
    let bytes = read_file(path)?;
    let mut input = bytes.as_slice();
    let evals = read_matrix_bin(&mut input, &what)?;
    let phi = read_matrix_bin(&mut input, &what)?;
    let mass = read_matrix_bin(&mut input, &what)?;
    SpectralBasis::new(evals.as_slice().to_vec(), phi, mass.as_slice().to_vec())
}

/// CSV text of `m`; entries are printed with round-trip precision.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_csv(text: &str, what: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(what, format!("line {}: {e}", line_no + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    what,
                    format!("line {}: expected {} columns, found {}", line_no + 1, first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

pub fn save_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_matrix_csv(&text, &path.display().to_string())
}

pub fn pointmap_to_text(map: &PointMap) -> String {
    let mut s = String::with_capacity(map.len() * 6);
    for &t in map.as_slice() {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    s
}

/// Parses one index per line; `n_target` bounds the indices.
pub fn parse_pointmap(text: &str, n_target: usize, what: &str) -> Result<PointMap> {
    let targets = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(what, format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    PointMap::new(targets, n_target)
}

pub fn save_pointmap(path: impl AsRef<Path>, map: &PointMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pointmap_to_text(map)).map_err(|e| Error::io(path, e))
}

pub fn load_pointmap(path: impl AsRef<Path>, n_target: usize) -> Result<PointMap> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_pointmap(&text, n_target, &path.display().to_string())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}
