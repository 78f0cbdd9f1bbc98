//! Point-cloud file formats.
//!
//! CSV: a header row `x0,x1,...,x{d-1}`, then one point per row, LF line
//! endings. Coordinates are written with 17 significant digits so a
//! write/read cycle is exact.
//!
//! Binary: the magic bytes `RGPC`, a little-endian `u32` point count, a
//! little-endian `u32` ambient dimension, then `count * dim` little-endian
//! IEEE-754 `f64` values in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, PointCloud, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"RGPC";

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    let header: Vec<String> = (0..cloud.dim()).map(|i| format!("x{i}")).collect();
    out.write_all(header.join(",").as_bytes())?;
    out.write_all(b"\n")?;
    let mut line = String::new();
    for p in cloud.iter() {
        line.clear();
        for (i, c) in p.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*c));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<PointCloud> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("missing CSV header".into()))??;
    let header = header.trim_end_matches('\r');
    let dim = header.split(',').count();
    for (i, name) in header.split(',').enumerate() {
        if name.trim() != format!("x{i}") {
            return Err(Error::Format(format!(
                "CSV header column {i} is {name:?}, expected \"x{i}\""
            )));
        }
    }
    let mut coords = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let before = coords.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "row {}: cannot parse {field:?} as a float",
                    row + 1
                ))
            })?;
            coords.push(v);
        }
        if coords.len() - before != dim {
            return Err(Error::Format(format!(
                "row {} has {} fields, header has {dim}",
                row + 1,
                coords.len() - before
            )));
        }
    }
    PointCloud::new(dim, coords)
}

pub fn write_binary<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    let count = u32::try_from(cloud.len())
        .map_err(|_| Error::Format("too many points for the binary format".into()))?;
    let dim = u32::try_from(cloud.dim())
        .map_err(|_| Error::Format("dimension too large for the binary format".into()))?;
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&count.to_le_bytes())?;
    out.write_all(&dim.to_le_bytes())?;
    for c in cloud.coords() {
        out.write_all(&c.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<PointCloud> {
    let mut head = [0u8; 12];
    input
        .read_exact(&mut head)
        .map_err(|_| Error::Format("truncated binary header".into()))?;
    if &head[..4] != BINARY_MAGIC {
        return Err(Error::Format("bad magic bytes, expected RGPC".into()));
    }
    let count = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let total = count
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("point count overflows".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, header announces {count}x{dim} f64 values",
            bytes.len()
        )));
    }
    let coords = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    PointCloud::new(dim, coords)
}

/// Format chosen from the file extension: `.csv` or anything else (binary).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    Binary,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CloudFormat::Csv,
            _ => CloudFormat::Binary,
        }
    }
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = fs::File::create(path)?;
    let out = BufWriter::new(file);
    match CloudFormat::from_path(path) {
        CloudFormat::Csv => write_csv(cloud, out),
        CloudFormat::Binary => write_binary(cloud, out),
    }
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let file = fs::File::open(path)?;
    match CloudFormat::from_path(path) {
        CloudFormat::Csv => read_csv(file),
        CloudFormat::Binary => read_binary(BufReader::new(file)),
    }
}
