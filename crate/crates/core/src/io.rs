//! On-disk formats: CSV matrices (rows = variables) and the compact binary
//! column-major layout with a 16-byte header (magic "CSPC", version, p, n).

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::io::{Read, Write};
use std::path::Path;

pub const BINARY_MAGIC: &[u8; 4] = b"CSPC";
pub const BINARY_VERSION: u32 = 1;

/// Read a matrix from CSV; each line is one row (one variable).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_csv(&text)
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: ragged row (expected {} fields)",
                    ln + 1,
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV matrix".into()));
    }
    let (p, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(p, n, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write the binary format: 16-byte header (magic, version u32 LE, p u32,
/// n u32) followed by column-major f64 data.
pub fn write_matrix_binary(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(BINARY_MAGIC)?;
    f.write_all(&BINARY_VERSION.to_le_bytes())?;
    f.write_all(&(m.nrows() as u32).to_le_bytes())?;
    f.write_all(&(m.ncols() as u32).to_le_bytes())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            f.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_binary(path: &Path) -> Result<DMatrix<f64>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    if &header[0..4] != BINARY_MAGIC {
        return Err(Error::Parse("bad magic (expected CSPC)".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    let p = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    if p == 0 || n == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    let mut buf = vec![0u8; p * n * 8];
    f.read_exact(&mut buf)?;
    let mut m = DMatrix::<f64>::zeros(p, n);
    for j in 0..n {
        for i in 0..p {
            let off = (j * p + i) * 8;
            m[(i, j)] = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
        }
    }
    Ok(m)
}

/// Load a matrix deciding the format from the extension (`.bin` or `.cspc`
/// binary, anything else CSV).
pub fn read_matrix_auto(path: &Path) -> Result<DMatrix<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("cspc") => read_matrix_binary(path),
        _ => read_matrix_csv(path),
    }
}
