//! Reference implementations shared by the integration and acceptance tests.
//! None of them reuse the library's algorithms.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syntaxprobe::synth::{random_tree, LabelAlphabet, SynthSpec};
use syntaxprobe::treebank::{delexicalize, ConstituencyTree};

/// Every subset-tree fragment rooted at an internal node, keyed by its
/// bracketing, with its multiplicity. The value carries the fragment size
/// (internal nodes it expands).
pub fn fragment_counts(tree: &ConstituencyTree) -> HashMap<String, (usize, u64)> {
    fn rooted(node: &ConstituencyTree) -> Vec<(String, usize)> {
        // Each child contributes either its bare label or, if internal, any
        // fragment rooted at it.
        let mut partial: Vec<(Vec<String>, usize)> = vec![(Vec::new(), 1)];
        for child in &node.children {
            let mut options = vec![(child.label.clone(), 0)];
            if !child.is_leaf() {
                options.extend(rooted(child));
            }
            partial = partial
                .iter()
                .flat_map(|(parts, size)| {
                    options.iter().map(move |(s, k)| {
                        let mut p = parts.clone();
                        p.push(s.clone());
                        (p, size + k)
                    })
                })
                .collect();
        }
        partial
            .into_iter()
            .map(|(parts, size)| (format!("({} {})", node.label, parts.join(" ")), size))
            .collect()
    }

    let mut counts = HashMap::new();
    let mut stack = vec![tree];
    while let Some(node) = stack.pop() {
        if node.is_leaf() {
            continue;
        }
        for (frag, size) in rooted(node) {
            counts.entry(frag).or_insert((size, 0)).1 += 1;
        }
        stack.extend(node.children.iter());
    }
    counts
}

/// K(a, b) = Σ_f λ^|f| · count_a(f) · count_b(f).
pub fn kernel_by_fragments(
    a: &HashMap<String, (usize, u64)>,
    b: &HashMap<String, (usize, u64)>,
    lambda: f64,
) -> f64 {
    a.iter()
        .filter_map(|(f, &(size, ca))| b.get(f).map(|&(_, cb)| lambda.powi(size as i32) * (ca * cb) as f64))
        .sum()
}

/// Delexicalized random trees over a small alphabet so that productions
/// recur often, with 1..=max_internal internal nodes.
pub fn small_trees(n: usize, max_internal: usize, seed: u64) -> Vec<ConstituencyTree> {
    let spec = SynthSpec {
        max_depth: 4,
        label_alphabet: LabelAlphabet {
            nonterminals: vec!["S".into(), "NP".into()],
            preterminals: vec!["D".into(), "N".into()],
        },
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = delexicalize(&random_tree(&spec, &mut rng));
        if t.internal_node_count() <= max_internal {
            out.push(t);
        }
    }
    out
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| m[(i, j)]).collect();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular");
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| a[i][n + j])
}

/// Ridge with centering through the explicit normal-equations inverse.
/// Returns (p x q weights, q intercepts).
pub fn ridge_oracle(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> (DMatrix<f64>, Vec<f64>) {
    let (n, p) = x.shape();
    let q = y.ncols();
    let xm: Vec<f64> = (0..p).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    let ym: Vec<f64> = (0..q).map(|j| (0..n).map(|i| y[(i, j)]).sum::<f64>() / n as f64).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - xm[j]);
    let yc = DMatrix::from_fn(n, q, |i, j| y[(i, j)] - ym[j]);
    let mut gram = xc.transpose() * &xc;
    for i in 0..p {
        gram[(i, i)] += alpha;
    }
    let w = gauss_jordan_inverse(&gram) * xc.transpose() * yc;
    let b = (0..q)
        .map(|j| ym[j] - (0..p).map(|i| xm[i] * w[(i, j)]).sum::<f64>())
        .collect();
    (w, b)
}

pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Synthetic corpus, one embedding layer and the aligned probe inputs.
pub struct SynthInputs {
    pub corpus: syntaxprobe::synth::SynthCorpus,
    pub table: syntaxprobe::EmbeddingTable,
    pub probe: syntaxprobe::probekit::ProbeCorpus,
}

pub fn synth_inputs(spec: &SynthSpec) -> SynthInputs {
    use syntaxprobe::features::BowVocabulary;
    let corpus = syntaxprobe::synth::generate_corpus(spec).unwrap();
    let table = syntaxprobe::synth::synth_embeddings(&corpus, spec, 0).unwrap();
    let vocab = BowVocabulary::build([&corpus.manifest], 1);
    let probe = syntaxprobe::probekit::ProbeCorpus::new(&corpus.manifest, &corpus.trees, &vocab, false).unwrap();
    SynthInputs { corpus, table, probe }
}
