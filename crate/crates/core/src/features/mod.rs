//! Utterance features: embedding tables, corpus manifests, and the
//! bag-of-words and word-count reference features.

mod corpus;
pub mod wemb;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use corpus::{
    bow_features, filter_corpus, has_non_latin, remove_non_latin, tokenize, word_count,
    word_count_feature, BowVocabulary, CorpusEntry, CorpusManifest, FilterSummary,
};
pub use wemb::EmbeddingTable;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("not a WEMB file (bad magic)")]
    BadMagic,
    #[error("unsupported WEMB version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated file: expected {expected} bytes, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("table has {rows} rows but manifest lists {ids} ids")]
    ManifestMismatch { rows: usize, ids: usize },
    #[error("no manifest found for {0}")]
    MissingManifest(String),
    #[error("unknown utterance id {0:?}")]
    UnknownUtteranceId(String),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("cannot pool an empty frame sequence")]
    EmptySequence,
    #[error("row counts differ: {0} vs {1}")]
    RowMismatch(usize, usize),
    #[error("{0}")]
    InvalidArgument(String),
}

impl FeatureError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FeatureError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Column-wise mean over the frames (rows) of a T x D matrix.
pub fn mean_pool(frames: &DMatrix<f64>) -> Result<DVector<f64>, FeatureError> {
    let t = frames.nrows();
    if t == 0 {
        return Err(FeatureError::EmptySequence);
    }
    Ok(DVector::from_iterator(
        frames.ncols(),
        frames.column_iter().map(|c| c.iter().sum::<f64>() / t as f64),
    ))
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, FeatureError> {
    if u.len() != v.len() {
        return Err(FeatureError::LengthMismatch(u.len(), v.len()));
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(FeatureError::ZeroVector);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine similarity of one utterance's embedding to each anchor's, in
/// anchor order.
pub fn anchor_cosine_vector(
    row: &str,
    table: &EmbeddingTable,
    anchors: &[String],
) -> Result<Vec<f64>, FeatureError> {
    let u = table.row_f64(row)?;
    anchors
        .iter()
        .map(|a| cosine_similarity(&u, &table.row_f64(a)?))
        .collect()
}

/// Cosine of every row of `rows` against every row of `anchors`.
pub fn cosine_matrix(rows: &DMatrix<f64>, anchors: &DMatrix<f64>) -> Result<DMatrix<f64>, FeatureError> {
    let rows_v: Vec<Vec<f64>> = rows.row_iter().map(|r| r.iter().copied().collect()).collect();
    let anchors_v: Vec<Vec<f64>> = anchors.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut out = DMatrix::zeros(rows_v.len(), anchors_v.len());
    for (i, r) in rows_v.iter().enumerate() {
        for (j, a) in anchors_v.iter().enumerate() {
            out[(i, j)] = cosine_similarity(r, a)?;
        }
    }
    Ok(out)
}

/// `[a | b]`.
pub fn concat_features(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, FeatureError> {
    if a.nrows() != b.nrows() {
        return Err(FeatureError::RowMismatch(a.nrows(), b.nrows()));
    }
    let (n, p, q) = (a.nrows(), a.ncols(), b.ncols());
    Ok(DMatrix::from_fn(n, p + q, |i, j| {
        if j < p {
            a[(i, j)]
        } else {
            b[(i, j - p)]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_pool_examples() {
        let one = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(mean_pool(&one).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        let two = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        assert_eq!(mean_pool(&two).unwrap().as_slice(), &[2.0, 2.0]);
        assert!(matches!(
            mean_pool(&DMatrix::zeros(0, 4)),
            Err(FeatureError::EmptySequence)
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let frames = DMatrix::from_fn(7, 5, |_, _| rng.random_range(-3.0..3.0));
        let pooled = mean_pool(&frames).unwrap();
        for j in 0..5 {
            let mut s = 0.0;
            for i in 0..7 {
                s += frames[(i, j)];
            }
            assert!((pooled[j] - s / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[3.0, -1.0], &[3.0, -1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - 32.0 / (14f64.sqrt() * 77f64.sqrt())).abs() < 1e-15);
        assert!((c - 0.974632).abs() < 1e-6);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(FeatureError::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(FeatureError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn anchor_cosine_examples() {
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let t = EmbeddingTable::new(
            0,
            2,
            vec![1.0, 0.0, 0.0, 2.0, 1.0, 1.0, -1.0, 0.5],
            ids.clone(),
        )
        .unwrap();
        assert_eq!(anchor_cosine_vector("a", &t, &ids[..1]).unwrap(), vec![1.0]);
        assert_eq!(anchor_cosine_vector("b", &t, &ids[..1]).unwrap(), vec![0.0]);
        let anchors = ids[1..].to_vec();
        let got = anchor_cosine_vector("a", &t, &anchors).unwrap();
        for (g, a) in got.iter().zip(&anchors) {
            let r = t.row_by_id(a).unwrap();
            let (x, y) = (f64::from(r[0]), f64::from(r[1]));
            let want = x / (x * x + y * y).sqrt();
            assert!((g - want).abs() < 1e-15);
        }
        assert!(matches!(
            anchor_cosine_vector("zz", &t, &anchors),
            Err(FeatureError::UnknownUtteranceId(_))
        ));
    }

    #[test]
    fn concat_examples() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let c = concat_features(&a, &b).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        let empty = DMatrix::<f64>::zeros(2, 0);
        assert_eq!(concat_features(&empty, &b).unwrap(), b);
        assert!(matches!(
            concat_features(&a, &DMatrix::zeros(3, 1)),
            Err(FeatureError::RowMismatch(2, 3))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(4, 3, |_, _| rng.random::<f64>());
        let b = DMatrix::from_fn(4, 2, |_, _| rng.random::<f64>());
        let c = concat_features(&a, &b).unwrap();
        let flat: Vec<f64> = c.transpose().iter().copied().collect();
        for i in 0..4 {
            for j in 0..5 {
                let want = if j < 3 { a[(i, j)] } else { b[(i, j - 3)] };
                assert_eq!(flat[i * 5 + j], want);
            }
        }
    }
}
