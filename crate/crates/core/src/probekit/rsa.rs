use std::collections::HashSet;

use nalgebra::DMatrix;

use super::metrics::pearson;
use super::probes::{AnchorSet, ProbeCorpus};
use super::ProbeError;
use crate::features::{cosine_matrix, EmbeddingTable};
use crate::treekernel::{gram_matrix, KernelParams};

fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Pearson correlation of the strict upper triangles of two square
/// similarity matrices.
pub fn rsa_from_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, ProbeError> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(ProbeError::Alignment(format!(
            "similarity matrices {:?} and {:?} are not matching squares",
            a.shape(),
            b.shape()
        )));
    }
    if a.nrows() < 3 {
        return Err(ProbeError::TooFewRows {
            needed: 3,
            got: a.nrows(),
        });
    }
    pearson(&upper_triangle(a), &upper_triangle(b)).ok_or(ProbeError::ZeroVariance)
}

/// Classic (non-trainable) RSA between the embedding cosine space and the
/// tree-kernel space, over every utterance outside the anchor set.
pub fn rsa_baseline(
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
    anchors: &AnchorSet,
    params: KernelParams,
) -> Result<f64, ProbeError> {
    let held: HashSet<&str> = anchors.ids.iter().map(String::as_str).collect();
    let rows: Vec<usize> = (0..corpus.len())
        .filter(|&i| !held.contains(corpus.ids[i].as_str()))
        .collect();
    if rows.len() < 3 {
        return Err(ProbeError::TooFewRows {
            needed: 3,
            got: rows.len(),
        });
    }
    let ids: Vec<String> = rows.iter().map(|&i| corpus.ids[i].clone()).collect();
    let emb = table.select(&ids)?;
    let cos = cosine_matrix(&emb, &emb)?;
    let trees: Vec<_> = rows.iter().map(|&i| corpus.trees[i].clone()).collect();
    let gram = gram_matrix(&trees, params)?;
    rsa_from_matrices(&cos, &gram)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_negated() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.5, 0.2, 1.0, 0.9, 0.5, 0.9, 1.0]);
        assert!((rsa_from_matrices(&m, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((rsa_from_matrices(&m, &(-&m)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let flat = DMatrix::from_element(3, 3, 0.5);
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.5, 0.2, 1.0, 0.9, 0.5, 0.9, 1.0]);
        assert!(matches!(rsa_from_matrices(&flat, &m), Err(ProbeError::ZeroVariance)));
        assert!(matches!(
            rsa_from_matrices(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)),
            Err(ProbeError::TooFewRows { .. })
        ));
    }
}
