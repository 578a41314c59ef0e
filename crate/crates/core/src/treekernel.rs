//! Convolution (subset-tree) kernel over delexicalized constituency trees.
//!
//! `K(t1, t2) = sum over node pairs (n1, n2) of delta(n1, n2)` where
//! `delta` is zero unless both nodes own the same production, and otherwise
//! `lambda * prod_k (1 + delta(child1_k, child2_k))`. Leaves own no
//! production, so a matched production over preterminal leaves scores exactly
//! `lambda`.
//!
//! Pairs are found by sorting each tree's internal nodes by production and
//! merge-joining the two lists, so only matching pairs are ever visited.

use std::cmp::Ordering;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::treebank::{ConstituencyTree, Production};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("tree {index} still carries terminals; delexicalize it first")]
    LexicalizedInput { index: usize },
    #[error("tree {index} has no productions, its self-kernel is zero")]
    DegenerateTree { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    lambda: f64,
}

impl KernelParams {
    pub fn new(lambda: f64) -> Result<Self, KernelError> {
        if lambda > 0.0 && lambda <= 1.0 {
            Ok(KernelParams { lambda })
        } else {
            Err(KernelError::InvalidLambda(lambda))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { lambda: 0.5 }
    }
}

const NO_GROUP: u32 = u32::MAX;

/// Array form of a tree: node 0 is the root, children stored by index.
#[derive(Debug, Clone)]
pub struct FlatTree {
    children: Vec<Vec<u32>>,
    productions: Vec<Option<Production>>,
    /// Internal nodes ordered by (production, node index).
    sorted: Vec<u32>,
}

impl FlatTree {
    pub fn new(tree: &ConstituencyTree) -> Self {
        let mut flat = FlatTree {
            children: Vec::new(),
            productions: Vec::new(),
            sorted: Vec::new(),
        };
        flat.push(tree);
        let mut sorted: Vec<u32> = (0..flat.len() as u32)
            .filter(|&i| flat.productions[i as usize].is_some())
            .collect();
        sorted.sort_by(|&a, &b| {
            flat.productions[a as usize]
                .cmp(&flat.productions[b as usize])
                .then(a.cmp(&b))
        });
        flat.sorted = sorted;
        flat
    }

    fn push(&mut self, node: &ConstituencyTree) -> u32 {
        let idx = self.children.len() as u32;
        self.children.push(Vec::new());
        self.productions.push(node.production());
        let kids: Vec<u32> = node.children.iter().map(|c| self.push(c)).collect();
        self.children[idx as usize] = kids;
        idx
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn internal_count(&self) -> usize {
        self.sorted.len()
    }

    fn production(&self, i: u32) -> Option<&Production> {
        self.productions[i as usize].as_ref()
    }
}

/// Node pairs with identical productions, plus the memoized delta values for
/// one tree pair. Group ids label each node's production so that child
/// matching during the recursion is an integer comparison.
#[derive(Debug)]
pub struct NodePairTable {
    pub matched_pairs: Vec<(u32, u32)>,
    group_a: Vec<u32>,
    group_b: Vec<u32>,
    width: usize,
    delta: Vec<f64>,
}

impl NodePairTable {
    pub fn build(a: &FlatTree, b: &FlatTree) -> Self {
        let mut group_a = vec![NO_GROUP; a.len()];
        let mut group_b = vec![NO_GROUP; b.len()];
        let mut matched_pairs = Vec::new();
        let (mut i, mut j) = (0, 0);
        let mut next_group = 0u32;
        while i < a.sorted.len() && j < b.sorted.len() {
            let pa = a.production(a.sorted[i]).expect("sorted holds internal nodes");
            let pb = b.production(b.sorted[j]).expect("sorted holds internal nodes");
            match pa.cmp(pb) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let i_end = i + a.sorted[i..]
                        .iter()
                        .take_while(|&&n| a.production(n) == Some(pa))
                        .count();
                    let j_end = j + b.sorted[j..]
                        .iter()
                        .take_while(|&&n| b.production(n) == Some(pb))
                        .count();
                    for &na in &a.sorted[i..i_end] {
                        group_a[na as usize] = next_group;
                        for &nb in &b.sorted[j..j_end] {
                            matched_pairs.push((na, nb));
                        }
                    }
                    for &nb in &b.sorted[j..j_end] {
                        group_b[nb as usize] = next_group;
                    }
                    next_group += 1;
                    i = i_end;
                    j = j_end;
                }
            }
        }
        let width = b.len();
        NodePairTable {
            matched_pairs,
            group_a,
            group_b,
            width,
            delta: vec![f64::NAN; a.len() * width],
        }
    }

    fn delta(&mut self, a: &FlatTree, b: &FlatTree, na: u32, nb: u32, lambda: f64) -> f64 {
        let g = self.group_a[na as usize];
        if g == NO_GROUP || g != self.group_b[nb as usize] {
            return 0.0;
        }
        let slot = na as usize * self.width + nb as usize;
        let cached = self.delta[slot];
        if !cached.is_nan() {
            return cached;
        }
        let mut value = lambda;
        for (&ca, &cb) in a.children[na as usize].iter().zip(&b.children[nb as usize]) {
            value *= 1.0 + self.delta(a, b, ca, cb, lambda);
        }
        self.delta[slot] = value;
        value
    }
}

/// Sum of deltas over matched pairs. The deltas are summed in ascending order
/// so the result does not depend on argument order.
pub fn raw_kernel_flat(a: &FlatTree, b: &FlatTree, params: KernelParams) -> f64 {
    let mut table = NodePairTable::build(a, b);
    let pairs = std::mem::take(&mut table.matched_pairs);
    let mut deltas: Vec<f64> = pairs
        .iter()
        .map(|&(na, nb)| table.delta(a, b, na, nb, params.lambda))
        .collect();
    deltas.sort_by(f64::total_cmp);
    deltas.iter().sum()
}

/// Reference evaluation: every node pair, direct production comparison, no
/// memo. Quadratic in node count times recursion cost; for checking only.
pub fn raw_kernel_all_pairs(a: &FlatTree, b: &FlatTree, params: KernelParams) -> f64 {
    fn delta(a: &FlatTree, b: &FlatTree, na: u32, nb: u32, lambda: f64) -> f64 {
        match (a.production(na), b.production(nb)) {
            (Some(pa), Some(pb)) if pa == pb => a.children[na as usize]
                .iter()
                .zip(&b.children[nb as usize])
                .fold(lambda, |acc, (&ca, &cb)| {
                    acc * (1.0 + delta(a, b, ca, cb, lambda))
                }),
            _ => 0.0,
        }
    }
    let mut total = 0.0;
    for na in 0..a.len() as u32 {
        for nb in 0..b.len() as u32 {
            total += delta(a, b, na, nb, params.lambda);
        }
    }
    total
}

fn check_delexicalized(tree: &ConstituencyTree, index: usize) -> Result<(), KernelError> {
    if tree.is_lexicalized() {
        Err(KernelError::LexicalizedInput { index })
    } else {
        Ok(())
    }
}

pub fn raw_kernel(
    t1: &ConstituencyTree,
    t2: &ConstituencyTree,
    params: KernelParams,
) -> Result<f64, KernelError> {
    check_delexicalized(t1, 0)?;
    check_delexicalized(t2, 1)?;
    Ok(raw_kernel_flat(&FlatTree::new(t1), &FlatTree::new(t2), params))
}

/// A flattened tree with its self-kernel cached, ready for repeated
/// normalized evaluation.
#[derive(Debug, Clone)]
pub struct PreparedTree {
    flat: FlatTree,
    self_kernel: f64,
}

impl PreparedTree {
    /// `index` is only used to label errors.
    pub fn new(
        tree: &ConstituencyTree,
        params: KernelParams,
        index: usize,
    ) -> Result<Self, KernelError> {
        check_delexicalized(tree, index)?;
        let flat = FlatTree::new(tree);
        if flat.internal_count() == 0 {
            return Err(KernelError::DegenerateTree { index });
        }
        let self_kernel = raw_kernel_flat(&flat, &flat, params);
        Ok(PreparedTree { flat, self_kernel })
    }

    pub fn self_kernel(&self) -> f64 {
        self.self_kernel
    }

    pub fn flat(&self) -> &FlatTree {
        &self.flat
    }

    pub fn normalized(&self, other: &PreparedTree, params: KernelParams) -> f64 {
        let k = raw_kernel_flat(&self.flat, &other.flat, params);
        k / (self.self_kernel * other.self_kernel).sqrt()
    }
}

pub fn prepare_all(
    trees: &[ConstituencyTree],
    params: KernelParams,
) -> Result<Vec<PreparedTree>, KernelError> {
    trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| PreparedTree::new(t, params, i))
        .collect()
}

pub fn normalized_kernel(
    t1: &ConstituencyTree,
    t2: &ConstituencyTree,
    params: KernelParams,
) -> Result<f64, KernelError> {
    let a = PreparedTree::new(t1, params, 0)?;
    let b = PreparedTree::new(t2, params, 1)?;
    Ok(a.normalized(&b, params))
}

/// Normalized Gram matrix with unit diagonal. Cells are computed
/// independently, so the result is identical for any thread count.
pub fn gram_matrix(
    trees: &[ConstituencyTree],
    params: KernelParams,
) -> Result<DMatrix<f64>, KernelError> {
    let prepared = prepare_all(trees, params)?;
    Ok(gram_matrix_prepared(&prepared, params))
}

pub fn gram_matrix_prepared(prepared: &[PreparedTree], params: KernelParams) -> DMatrix<f64> {
    let n = prepared.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| prepared[i].normalized(&prepared[j], params))
                .collect()
        })
        .collect();
    let mut g = DMatrix::identity(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Normalized kernel of `tree` against each anchor, in anchor order.
pub fn anchor_kernel_vector(
    tree: &ConstituencyTree,
    anchors: &[ConstituencyTree],
    params: KernelParams,
) -> Result<Vec<f64>, KernelError> {
    let t = PreparedTree::new(tree, params, 0)?;
    let anchors = anchors
        .iter()
        .enumerate()
        .map(|(i, a)| PreparedTree::new(a, params, i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(anchor_kernel_vector_prepared(&t, &anchors, params))
}

pub fn anchor_kernel_vector_prepared(
    tree: &PreparedTree,
    anchors: &[PreparedTree],
    params: KernelParams,
) -> Vec<f64> {
    anchors.iter().map(|a| tree.normalized(a, params)).collect()
}

/// Gram matrix as CSV: a header row of IDs, then one row of values per ID.
pub fn write_gram_csv<W: Write>(out: &mut W, ids: &[String], gram: &DMatrix<f64>) -> io::Result<()> {
    writeln!(out, "{}", ids.join(","))?;
    for i in 0..gram.nrows() {
        let row: Vec<String> = (0..gram.ncols()).map(|j| gram[(i, j)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
