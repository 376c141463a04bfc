//! `EMB1` embedding tables.
//!
//! Layout, little-endian: magic `EMB1`, `u32` version (1), `u32` count,
//! `u32` dim, then `count * dim` `f32` values in row-major order.

use std::path::Path;

use crate::appearance::{normalize, Embedding};
use crate::error::{Error, Result};
use crate::tracklet::{TrackSet, Tracklet};

use super::mot::line_order;
use super::write_atomic;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const EMB_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: Vec<Embedding>,
}

/// Raw decoded table: `(count, dim, values)`.
pub fn decode_embeddings(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let format = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let truncated = |what: &str| {
        Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                format!("truncated {what}"),
            ),
        )
    };
    if bytes.len() < HEADER_LEN {
        return Err(truncated("header"));
    }
    if &bytes[0..4] != EMB_MAGIC {
        return Err(format(format!("bad magic {:?}", &bytes[0..4])));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let version = word(4);
    if version != EMB_VERSION {
        return Err(format(format!("unsupported version {version}")));
    }
    let count = word(8) as usize;
    let dim = word(12) as usize;
    let payload = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| format("table size overflows".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < payload {
        return Err(truncated("payload"));
    }
    if body.len() > payload {
        return Err(format(format!(
            "{} trailing bytes after payload",
            body.len() - payload
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Ok((count, dim, values))
}

fn read_raw(path: &Path, expected_count: usize) -> Result<(usize, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (count, dim, values) = decode_embeddings(&bytes, path)?;
    if count != expected_count {
        return Err(Error::Consistency(format!(
            "{}: {count} embedding rows but {expected_count} expected",
            path.display()
        )));
    }
    if count > 0 && dim == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "zero embedding dimension".into(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "{}: non-finite value in row {}",
            path.display(),
            i / dim.max(1)
        )));
    }
    Ok((dim, values))
}

/// Reads and L2-normalizes a detection embedding table.
pub fn read_embeddings(path: &Path, expected_count: usize) -> Result<EmbeddingTable> {
    let (dim, values) = read_raw(path, expected_count)?;
    let rows = values
        .chunks_exact(dim.max(1))
        .enumerate()
        .map(|(i, row)| {
            let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            normalize(&row).map_err(|e| Error::Data(format!("{}: row {i}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingTable { dim, rows })
}

/// Reads a track-history sidecar. All-zero rows mean "nothing banked".
pub fn read_track_embeddings(path: &Path, expected_count: usize) -> Result<Vec<Option<Embedding>>> {
    let (dim, values) = read_raw(path, expected_count)?;
    values
        .chunks_exact(dim.max(1))
        .take(expected_count)
        .enumerate()
        .map(|(i, row)| {
            if row.iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            normalize(&row)
                .map(Some)
                .map_err(|e| Error::Data(format!("{}: row {i}: {e}", path.display())))
        })
        .collect()
}

pub fn encode_embeddings(dim: usize, rows: &[&[f64]]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * dim * 4);
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&EMB_VERSION.to_le_bytes());
    let count =
        u32::try_from(rows.len()).map_err(|_| Error::Data("too many embedding rows".into()))?;
    let dim32 =
        u32::try_from(dim).map_err(|_| Error::Data("embedding dimension too large".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim32.to_le_bytes());
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        for &v in *row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_embeddings(path: &Path, dim: usize, rows: &[&[f64]]) -> Result<()> {
    write_atomic(path, &encode_embeddings(dim, rows)?)
}

/// Writes the embedding history of a track set, one row per line of
/// `write_tracks` output, zero-filled where no embedding was banked.
pub fn write_track_embeddings(ts: &TrackSet, path: &Path) -> Result<()> {
    let dim = ts.embedding_dim().unwrap_or(0);
    let slots: Vec<Vec<Option<usize>>> =
        ts.tracklets.iter().map(Tracklet::embedding_slots).collect();
    let zero = vec![0.0; dim];
    let rows: Vec<&[f64]> = line_order(ts)
        .into_iter()
        .map(|(ti, ri)| match slots[ti][ri] {
            Some(ei) => ts.tracklets[ti].embeddings[ei].1.as_slice(),
            None => zero.as_slice(),
        })
        .collect();
    write_embeddings(path, dim, &rows)
}
