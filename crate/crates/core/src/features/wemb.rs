//! `WEMB` embedding tables.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0   4  magic "WEMB"
//! 4   1  version = 1
//! 5   4  layer_id  u32
//! 9   4  rows      u32
//! 13  4  dim       u32
//! 17  .. rows*dim  f32, row-major
//! ```
//!
//! Row IDs live in a JSON-lines companion, `{"row": <n>, "id": "<id>"}` per
//! line. For `dir/layer_3.wemb` the companion is `dir/layer_3.jsonl` when it
//! exists, otherwise the shared `dir/manifest.jsonl`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use super::FeatureError;

pub const MAGIC: [u8; 4] = *b"WEMB";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 17;

/// Per-layer matrix of utterance vectors with the row-ID manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    layer_id: u32,
    dim: usize,
    data: Vec<f32>,
    manifest: Vec<String>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(
        layer_id: u32,
        dim: usize,
        data: Vec<f32>,
        manifest: Vec<String>,
    ) -> Result<Self, FeatureError> {
        if data.len() != manifest.len() * dim {
            return Err(FeatureError::ManifestMismatch {
                rows: data.len().checked_div(dim).unwrap_or(0),
                ids: manifest.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        let mut index = HashMap::with_capacity(manifest.len());
        for (i, id) in manifest.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(FeatureError::DuplicateId(id.clone()));
            }
        }
        Ok(EmbeddingTable {
            layer_id,
            dim,
            data,
            manifest,
            index,
        })
    }

    /// Narrows to f32, the on-disk precision.
    pub fn from_matrix(
        layer_id: u32,
        matrix: &DMatrix<f64>,
        manifest: Vec<String>,
    ) -> Result<Self, FeatureError> {
        let (rows, dim) = matrix.shape();
        let mut data = Vec::with_capacity(rows * dim);
        for i in 0..rows {
            data.extend(matrix.row(i).iter().map(|&v| v as f32));
        }
        Self::new(layer_id, dim, data, manifest)
    }

    pub fn layer_id(&self) -> u32 {
        self.layer_id
    }

    pub fn rows(&self) -> usize {
        self.manifest.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn manifest(&self) -> &[String] {
        &self.manifest
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Result<&[f32], FeatureError> {
        self.position(id)
            .map(|i| self.row(i))
            .ok_or_else(|| FeatureError::UnknownUtteranceId(id.to_owned()))
    }

    pub fn row_f64(&self, id: &str) -> Result<Vec<f64>, FeatureError> {
        Ok(self.row_by_id(id)?.iter().map(|&v| f64::from(v)).collect())
    }

    /// Rows for `ids`, in that order.
    pub fn select(&self, ids: &[String]) -> Result<DMatrix<f64>, FeatureError> {
        let mut m = DMatrix::zeros(ids.len(), self.dim);
        for (i, id) in ids.iter().enumerate() {
            for (j, &v) in self.row_by_id(id)?.iter().enumerate() {
                m[(i, j)] = f64::from(v);
            }
        }
        Ok(m)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.layer_id.to_le_bytes());
        out.extend_from_slice(&(self.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], manifest: Vec<String>) -> Result<Self, FeatureError> {
        let header = decode_header(bytes)?;
        let payload = header.rows * header.dim * 4;
        let body = &bytes[HEADER_LEN..];
        if body.len() != payload {
            return Err(FeatureError::Truncated {
                expected: HEADER_LEN + payload,
                got: bytes.len(),
            });
        }
        if manifest.len() != header.rows {
            return Err(FeatureError::ManifestMismatch {
                rows: header.rows,
                ids: manifest.len(),
            });
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(header.layer_id, header.dim, data, manifest)
    }

    pub fn manifest_jsonl(&self) -> String {
        manifest_to_jsonl(&self.manifest)
    }

    /// Reads a table, locating its manifest as described in the module docs.
    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let manifest_path = companion_manifest(path)?;
        Self::load_with_manifest(path, &manifest_path)
    }

    pub fn load_with_manifest(path: &Path, manifest_path: &Path) -> Result<Self, FeatureError> {
        let bytes = fs::read(path).map_err(|e| FeatureError::io(path, e))?;
        let text = fs::read_to_string(manifest_path).map_err(|e| FeatureError::io(manifest_path, e))?;
        Self::decode(&bytes, parse_manifest_jsonl(&text)?)
    }

    /// Writes `path` and its per-file companion manifest.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        fs::write(path, self.encode()).map_err(|e| FeatureError::io(path, e))?;
        let mpath = path.with_extension("jsonl");
        fs::write(&mpath, self.manifest_jsonl()).map_err(|e| FeatureError::io(&mpath, e))
    }

    /// Writes only the binary table; the manifest is expected to be shared.
    pub fn save_table_only(&self, path: &Path) -> Result<(), FeatureError> {
        fs::write(path, self.encode()).map_err(|e| FeatureError::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WembHeader {
    pub layer_id: u32,
    pub rows: usize,
    pub dim: usize,
}

pub fn decode_header(bytes: &[u8]) -> Result<WembHeader, FeatureError> {
    if bytes.len() < HEADER_LEN {
        return Err(FeatureError::Truncated {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(FeatureError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(FeatureError::UnsupportedVersion(bytes[4]));
    }
    let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    Ok(WembHeader {
        layer_id: u32_at(5),
        rows: u32_at(9) as usize,
        dim: u32_at(13) as usize,
    })
}

pub fn companion_manifest(path: &Path) -> Result<PathBuf, FeatureError> {
    let own = path.with_extension("jsonl");
    if own.is_file() {
        return Ok(own);
    }
    let shared = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("manifest.jsonl");
    if shared.is_file() {
        Ok(shared)
    } else {
        Err(FeatureError::MissingManifest(path.display().to_string()))
    }
}

#[derive(Deserialize)]
struct ManifestLine {
    row: usize,
    id: String,
}

pub fn manifest_to_jsonl(ids: &[String]) -> String {
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        let quoted = serde_json::to_string(id).expect("strings always serialize");
        out.push_str(&format!("{{\"row\": {i}, \"id\": {quoted}}}\n"));
    }
    out
}

pub fn parse_manifest_jsonl(text: &str) -> Result<Vec<String>, FeatureError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let entry: ManifestLine = serde_json::from_str(line).map_err(|e| FeatureError::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if entry.row != i {
                return Err(FeatureError::Format {
                    line: i + 1,
                    msg: format!("row {} out of order, expected {i}", entry.row),
                });
            }
            Ok(entry.id)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    #[test]
    fn header_bytes_are_exact() {
        let t = EmbeddingTable::new(3, 2, vec![1.0, -2.5, 0.0, 4.0], ids(2)).unwrap();
        let b = t.encode();
        assert_eq!(&b[..5], &[0x57, 0x45, 0x4D, 0x42, 0x01]);
        assert_eq!(&b[5..9], &[3, 0, 0, 0]);
        assert_eq!(&b[9..13], &[2, 0, 0, 0]);
        assert_eq!(&b[13..17], &[2, 0, 0, 0]);
        assert_eq!(&b[17..21], &1.0f32.to_le_bytes());
        assert_eq!(&b[21..25], &(-2.5f32).to_le_bytes());
        assert_eq!(b.len(), 17 + 16);
    }

    #[test]
    fn decode_errors() {
        let t = EmbeddingTable::new(0, 2, vec![1.0, 2.0], ids(1)).unwrap();
        let mut b = t.encode();
        assert!(matches!(
            EmbeddingTable::decode(&b[..10], ids(1)),
            Err(FeatureError::Truncated { .. })
        ));
        assert!(matches!(
            EmbeddingTable::decode(&b[..b.len() - 1], ids(1)),
            Err(FeatureError::Truncated { .. })
        ));
        assert!(matches!(
            EmbeddingTable::decode(&b, ids(2)),
            Err(FeatureError::ManifestMismatch { rows: 1, ids: 2 })
        ));
        b[4] = 2;
        assert!(matches!(
            EmbeddingTable::decode(&b, ids(1)),
            Err(FeatureError::UnsupportedVersion(2))
        ));
        b[0] = b'X';
        assert!(matches!(EmbeddingTable::decode(&b, ids(1)), Err(FeatureError::BadMagic)));

        let mut nan = t.encode();
        nan[21..25].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            EmbeddingTable::decode(&nan, ids(1)),
            Err(FeatureError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(matches!(
            EmbeddingTable::new(0, 1, vec![1.0, 2.0], vec!["a".into(), "a".into()]),
            Err(FeatureError::DuplicateId(_))
        ));
    }

    #[test]
    fn manifest_jsonl_format() {
        let text = manifest_to_jsonl(&["a".into(), "b \"q\"".into()]);
        assert_eq!(text, "{\"row\": 0, \"id\": \"a\"}\n{\"row\": 1, \"id\": \"b \\\"q\\\"\"}\n");
        assert_eq!(parse_manifest_jsonl(&text).unwrap(), vec!["a", "b \"q\""]);
        assert!(matches!(
            parse_manifest_jsonl("{\"row\": 1, \"id\": \"a\"}\n"),
            Err(FeatureError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn companion_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let t = EmbeddingTable::new(1, 1, vec![0.5, 1.5], ids(2)).unwrap();
        let p = dir.path().join("layer_1.wemb");
        t.save_table_only(&p).unwrap();
        assert!(matches!(EmbeddingTable::load(&p), Err(FeatureError::MissingManifest(_))));
        fs::write(dir.path().join("manifest.jsonl"), t.manifest_jsonl()).unwrap();
        assert_eq!(EmbeddingTable::load(&p).unwrap(), t);
        t.save(&p).unwrap();
        assert!(dir.path().join("layer_1.jsonl").is_file());
        assert_eq!(EmbeddingTable::load(&p).unwrap(), t);
    }
}
