//! Synthetic corpora with known syntactic signal.
//!
//! Trees come from a small random grammar. Embeddings are generated from the
//! trees under a chosen signal model, so a probe's expected behavior is known
//! in advance. Every utterance draws from its own ChaCha stream, so corpus
//! generation is order-independent and can run in parallel.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{bow_features, BowVocabulary, CorpusEntry, CorpusManifest, EmbeddingTable, FeatureError};
use crate::seed::derive_seed;
use crate::treebank::{delexicalize, tree_depth, ConstituencyTree};
use crate::treekernel::{anchor_kernel_vector_prepared, prepare_all, KernelError, KernelParams, PreparedTree};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Signal {
    /// i.i.d. standard normal entries.
    None,
    /// Coordinate 0 carries tree depth.
    DepthLinear,
    /// Random linear image of the tree's kernel vector against synthetic anchors.
    KernelLinear,
    /// Random linear image of the bag-of-words counts.
    BowLinear,
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signal::None => "NONE",
            Signal::DepthLinear => "DEPTH_LINEAR",
            Signal::KernelLinear => "KERNEL_LINEAR",
            Signal::BowLinear => "BOW_LINEAR",
        })
    }
}

impl FromStr for Signal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "NONE" => Ok(Signal::None),
            "DEPTH_LINEAR" => Ok(Signal::DepthLinear),
            "KERNEL_LINEAR" => Ok(Signal::KernelLinear),
            "BOW_LINEAR" => Ok(Signal::BowLinear),
            _ => Err(format!("unknown signal {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAlphabet {
    pub nonterminals: Vec<String>,
    pub preterminals: Vec<String>,
}

impl Default for LabelAlphabet {
    fn default() -> Self {
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        LabelAlphabet {
            nonterminals: owned(&["S", "NP", "VP", "PP"]),
            preterminals: owned(&["DT", "NN", "VB", "IN"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_utterances: usize,
    pub max_depth: usize,
    pub label_alphabet: LabelAlphabet,
    pub signal: Signal,
    pub noise_sigma: f64,
    pub dim: usize,
    pub seed: u64,
    /// Distinct words per preterminal tag.
    pub words_per_tag: usize,
    /// Size of the private anchor set behind `KernelLinear`.
    pub synthetic_anchors: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_utterances: 500,
            max_depth: 5,
            label_alphabet: LabelAlphabet::default(),
            signal: Signal::None,
            noise_sigma: 0.0,
            dim: 16,
            seed: 0,
            words_per_tag: 8,
            synthetic_anchors: 64,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_owned()));
        if self.n_utterances < 1 {
            return bad("n_utterances must be at least 1");
        }
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be a finite non-negative number");
        }
        if self.label_alphabet.nonterminals.is_empty() || self.label_alphabet.preterminals.is_empty() {
            return bad("label alphabet needs at least one nonterminal and one preterminal");
        }
        if self.max_depth < 2 {
            return bad("max_depth must be at least 2");
        }
        if self.words_per_tag < 1 {
            return bad("words_per_tag must be at least 1");
        }
        if self.signal == Signal::KernelLinear && self.synthetic_anchors < 1 {
            return bad("KERNEL_LINEAR needs at least one synthetic anchor");
        }
        Ok(())
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [String]) -> &'a str {
    &items[rng.random_range(0..items.len())]
}

fn preterminal<R: Rng>(spec: &SynthSpec, rng: &mut R) -> ConstituencyTree {
    let tag = pick(rng, &spec.label_alphabet.preterminals);
    let word = format!("{}{}", tag.to_lowercase(), rng.random_range(0..spec.words_per_tag));
    ConstituencyTree::leaf(tag, Some(&word))
}

fn nonterminal<R: Rng>(spec: &SynthSpec, rng: &mut R, level: usize) -> ConstituencyTree {
    let label = pick(rng, &spec.label_alphabet.nonterminals).to_owned();
    let n_children = rng.random_range(1..=3);
    let children = (0..n_children)
        .map(|_| {
            if level + 1 < spec.max_depth && rng.random_bool(0.5) {
                nonterminal(spec, rng, level + 1)
            } else {
                preterminal(spec, rng)
            }
        })
        .collect();
    ConstituencyTree::node(label, children)
}

/// One lexicalized tree. The root is always a nonterminal with 1 to 3
/// children; each child below the depth limit is a nonterminal with
/// probability 1/2, otherwise a preterminal with a word.
pub fn random_tree<R: Rng>(spec: &SynthSpec, rng: &mut R) -> ConstituencyTree {
    nonterminal(spec, rng, 1)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn trees_from_stream(spec: &SynthSpec, seed: u64, n: usize) -> Vec<ConstituencyTree> {
    (0..n)
        .into_par_iter()
        .map(|i| random_tree(spec, &mut stream_rng(seed, i as u64)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub manifest: CorpusManifest,
    /// Lexicalized; the transcript of entry `i` is the yield of tree `i`.
    pub trees: Vec<ConstituencyTree>,
}

impl SynthCorpus {
    pub fn ids(&self) -> Vec<String> {
        self.manifest.ids()
    }
}

pub fn utterance_id(i: usize) -> String {
    format!("synth-{i:06}")
}

pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let trees = trees_from_stream(spec, derive_seed(spec.seed, "synth/trees"), spec.n_utterances);
    let entries = trees
        .iter()
        .enumerate()
        .map(|(i, t)| CorpusEntry::new(utterance_id(i), t.terminals().join(" ")))
        .collect();
    Ok(SynthCorpus {
        manifest: CorpusManifest::new(entries)?,
        trees,
    })
}

/// One minimal tree `(NT P1 .. Pk)` for every nonterminal and every
/// sequence of 1 to 3 preterminals. The deepest nonterminal of any generated
/// tree has only preterminal children, so every tree matches at least one of
/// these.
pub fn covering_trees(alphabet: &LabelAlphabet) -> Vec<ConstituencyTree> {
    let pts = &alphabet.preterminals;
    let mut seqs: Vec<Vec<&str>> = Vec::new();
    let mut frontier: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..3 {
        frontier = frontier
            .iter()
            .flat_map(|s| {
                pts.iter().map(move |p| {
                    let mut next = s.clone();
                    next.push(p.as_str());
                    next
                })
            })
            .collect();
        seqs.extend(frontier.iter().cloned());
    }
    alphabet
        .nonterminals
        .iter()
        .flat_map(|nt| {
            seqs.iter().map(move |seq| {
                ConstituencyTree::node(
                    nt.clone(),
                    seq.iter().map(|p| ConstituencyTree::leaf(*p, None)).collect(),
                )
            })
        })
        .collect()
}

/// Private anchors behind `KernelLinear`: the covering trees followed by
/// `synthetic_anchors` random trees from their own stream. None of them is a
/// corpus row.
pub fn synthetic_anchor_trees(spec: &SynthSpec) -> Vec<ConstituencyTree> {
    let mut anchors = covering_trees(&spec.label_alphabet);
    anchors.extend(
        trees_from_stream(spec, derive_seed(spec.seed, "synth/anchors"), spec.synthetic_anchors)
            .iter()
            .map(delexicalize),
    );
    anchors
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// n x dim signal matrix before noise.
fn signal_matrix(
    corpus: &SynthCorpus,
    spec: &SynthSpec,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>, SynthError> {
    let n = corpus.trees.len();
    let dim = spec.dim;
    Ok(match spec.signal {
        Signal::None => DMatrix::zeros(n, dim),
        Signal::DepthLinear => {
            let mut m = DMatrix::zeros(n, dim);
            for (i, t) in corpus.trees.iter().enumerate() {
                m[(i, 0)] = tree_depth(t) as f64;
            }
            m
        }
        Signal::KernelLinear => {
            let params = KernelParams::default();
            let anchors: Vec<PreparedTree> = prepare_all(&synthetic_anchor_trees(spec), params)?;
            let trees: Vec<ConstituencyTree> = corpus.trees.iter().map(delexicalize).collect();
            let prepared = prepare_all(&trees, params)?;
            let k: Vec<Vec<f64>> = prepared
                .par_iter()
                .map(|t| anchor_kernel_vector_prepared(t, &anchors, params))
                .collect();
            let kv = DMatrix::from_fn(n, anchors.len(), |i, j| k[i][j]);
            kv * gaussian(rng, anchors.len(), dim, 1.0 / (dim as f64).sqrt())
        }
        Signal::BowLinear => {
            let vocab = BowVocabulary::build([&corpus.manifest], 1);
            let bow = bow_features(&corpus.manifest, &vocab, false);
            let proj = gaussian(rng, vocab.size(), dim, 1.0);
            bow * proj
        }
    })
}

/// Embedding table for one synthetic layer. Layers differ only in their
/// random draws.
pub fn synth_embeddings(
    corpus: &SynthCorpus,
    spec: &SynthSpec,
    layer_id: u32,
) -> Result<EmbeddingTable, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("synth/layer/{layer_id}")));
    let signal = signal_matrix(corpus, spec, &mut rng)?;
    let n = signal.nrows();
    let data = match spec.signal {
        Signal::None => gaussian(&mut rng, n, spec.dim, 1.0),
        _ => signal + gaussian(&mut rng, n, spec.dim, spec.noise_sigma),
    };
    Ok(EmbeddingTable::from_matrix(layer_id, &data, corpus.ids())?)
}
