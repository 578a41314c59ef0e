use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cv::{fit_predict, select_alpha, take_rows, train_test_split};
use super::metrics::r2_score;
use super::{FeatureSet, ProbeConfig, ProbeError, ProbeKind, ProbeResult};
use crate::features::{
    bow_features, concat_features, cosine_matrix, word_count_feature, BowVocabulary,
    CorpusManifest, EmbeddingTable,
};
use crate::seed::derive_seed;
use crate::treebank::{delexicalize, tree_depth, ConstituencyTree};
use crate::treekernel::{anchor_kernel_vector_prepared, prepare_all, KernelParams, PreparedTree};

/// Row-aligned probe inputs that do not depend on the model layer.
#[derive(Debug, Clone)]
pub struct ProbeCorpus {
    pub ids: Vec<String>,
    /// Delexicalized.
    pub trees: Vec<ConstituencyTree>,
    pub depths: Vec<usize>,
    /// n x 1.
    pub word_count: DMatrix<f64>,
    /// n x |vocab|.
    pub bow: DMatrix<f64>,
}

impl ProbeCorpus {
    /// `trees[i]` must be the parse of `manifest` entry `i`.
    pub fn new(
        manifest: &CorpusManifest,
        trees: &[ConstituencyTree],
        vocab: &BowVocabulary,
        bow_binary: bool,
    ) -> Result<Self, ProbeError> {
        if manifest.len() != trees.len() {
            return Err(ProbeError::Alignment(format!(
                "corpus has {} utterances but {} trees",
                manifest.len(),
                trees.len()
            )));
        }
        Ok(ProbeCorpus {
            ids: manifest.ids(),
            trees: trees.iter().map(delexicalize).collect(),
            depths: trees.iter().map(tree_depth).collect(),
            word_count: word_count_feature(manifest),
            bow: bow_features(manifest, vocab, bow_binary),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn depth_targets(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(self.len(), 1, self.depths.iter().map(|&d| d as f64))
    }
}

/// Held-out utterances that define the coordinates of both similarity
/// spaces, in sampling order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    pub ids: Vec<String>,
    /// Row positions in the corpus the anchors were drawn from.
    pub rows: Vec<usize>,
    pub seed: u64,
}

impl AnchorSet {
    /// Uniform sample without replacement.
    pub fn sample(ids: &[String], size: usize, seed: u64) -> Result<Self, ProbeError> {
        if size > ids.len() {
            return Err(ProbeError::TooFewRows {
                needed: size,
                got: ids.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = index::sample(&mut rng, ids.len(), size).into_vec();
        Ok(AnchorSet {
            ids: rows.iter().map(|&r| ids[r].clone()).collect(),
            rows,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn embedding_rows(table: &EmbeddingTable, ids: &[String]) -> Result<DMatrix<f64>, ProbeError> {
    Ok(table.select(ids)?)
}

fn assemble_depth_features(
    fs: FeatureSet,
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
) -> Result<DMatrix<f64>, ProbeError> {
    let emb = || embedding_rows(table, &corpus.ids);
    Ok(match fs {
        FeatureSet::Emb => emb()?,
        FeatureSet::EmbWc => concat_features(&emb()?, &corpus.word_count)?,
        FeatureSet::EmbBow => concat_features(&emb()?, &corpus.bow)?,
        FeatureSet::Wc => corpus.word_count.clone(),
        FeatureSet::Bow => corpus.bow.clone(),
    })
}

/// Split, cross-validate, refit, test. `x` and `y` hold one row per entry of
/// `ids`; `held_out` lists IDs (anchors) that must not reach either split.
#[allow(clippy::too_many_arguments)]
fn run_protocol(
    kind: ProbeKind,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    ids: &[String],
    held_out: &[String],
    layer_id: u32,
    config: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    let n = x.nrows();
    let (train, test) = train_test_split(n, config.train_fraction, derive_seed(config.seed, "split"));
    if train.len() < config.folds || test.len() < 2 {
        return Err(ProbeError::TooFewRows {
            needed: config.folds + 2,
            got: n,
        });
    }

    let train_ids: HashSet<&str> = train.iter().map(|&i| ids[i].as_str()).collect();
    let test_ids: HashSet<&str> = test.iter().map(|&i| ids[i].as_str()).collect();
    let anchor_ids: HashSet<&str> = held_out.iter().map(String::as_str).collect();
    if !train_ids.is_disjoint(&test_ids)
        || !train_ids.is_disjoint(&anchor_ids)
        || !test_ids.is_disjoint(&anchor_ids)
    {
        return Err(ProbeError::SplitOverlap);
    }

    let x_train = take_rows(x, &train);
    let y_train = take_rows(y, &train);
    let selection = select_alpha(&x_train, &y_train, config)?;
    let pred = fit_predict(
        &x_train,
        &y_train,
        &take_rows(x, &test),
        selection.alpha,
        config.standardize,
    )?;
    let score = r2_score(&take_rows(y, &test), &pred);
    if score.zero_variance_columns > 0 {
        log::warn!(
            "{kind} layer {layer_id} {}: {} constant target column(s) in the test split",
            config.feature_set,
            score.zero_variance_columns
        );
    }

    Ok(ProbeResult {
        probe: kind,
        layer_id,
        feature_set: config.feature_set,
        chosen_alpha: selection.alpha,
        cv_score: selection.cv_score,
        test_r2: score.value,
        n_train: train.len(),
        n_test: test.len(),
        n_anchors: held_out.len(),
        seed: config.seed,
        standardize: config.standardize,
        config_fingerprint: config.fingerprint(kind),
    })
}

/// Predicts maximum tree depth from the configured feature set.
pub fn probe_treedepth(
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
    config: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    config.validate()?;
    let x = assemble_depth_features(config.feature_set, table, corpus)?;
    let y = corpus.depth_targets();
    run_protocol(
        ProbeKind::TreeDepth,
        &x,
        &y,
        &corpus.ids,
        &[],
        table.layer_id(),
        config,
    )
}

/// Anchors and tree-kernel targets, shared by every layer and feature set.
#[derive(Debug, Clone)]
pub struct TreeKernelSetup {
    pub anchors: AnchorSet,
    /// Corpus rows outside the anchor set, ascending.
    pub population: Vec<usize>,
    /// population x anchors normalized tree kernels.
    pub targets: DMatrix<f64>,
}

impl TreeKernelSetup {
    pub fn new(corpus: &ProbeCorpus, config: &ProbeConfig, anchor_seed: u64) -> Result<Self, ProbeError> {
        config.validate()?;
        let params = KernelParams::new(config.lambda)?;
        let needed = config.n_anchors + config.folds + 2;
        if corpus.len() < needed {
            return Err(ProbeError::TooFewRows {
                needed,
                got: corpus.len(),
            });
        }
        let prepared = prepare_all(&corpus.trees, params)?;
        let anchors = AnchorSet::sample(&corpus.ids, config.n_anchors, anchor_seed)?;
        let anchor_rows: HashSet<usize> = anchors.rows.iter().copied().collect();
        let population: Vec<usize> = (0..corpus.len()).filter(|i| !anchor_rows.contains(i)).collect();
        let anchor_trees: Vec<PreparedTree> = anchors.rows.iter().map(|&r| prepared[r].clone()).collect();

        let rows: Vec<Vec<f64>> = population
            .par_iter()
            .map(|&r| anchor_kernel_vector_prepared(&prepared[r], &anchor_trees, params))
            .collect();
        let targets = DMatrix::from_fn(population.len(), anchors.len(), |i, j| rows[i][j]);
        Ok(TreeKernelSetup {
            anchors,
            population,
            targets,
        })
    }

    pub fn population_ids(&self, corpus: &ProbeCorpus) -> Vec<String> {
        self.population.iter().map(|&r| corpus.ids[r].clone()).collect()
    }
}

/// Cosine-to-anchor vectors of the representation selected by
/// `feature_set`: the embeddings (EMB) or the bag-of-words counts (BOW).
fn similarity_features(
    fs: FeatureSet,
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
    setup: &TreeKernelSetup,
) -> Result<DMatrix<f64>, ProbeError> {
    let (rows, anchors) = match fs {
        FeatureSet::Emb => (
            embedding_rows(table, &setup.population_ids(corpus))?,
            embedding_rows(table, &setup.anchors.ids)?,
        ),
        FeatureSet::Bow => (
            take_rows(&corpus.bow, &setup.population),
            take_rows(&corpus.bow, &setup.anchors.rows),
        ),
        other => return Err(ProbeError::UnsupportedFeatureSet(other, ProbeKind::TreeKernel)),
    };
    Ok(cosine_matrix(&rows, &anchors)?)
}

pub fn probe_treekernel_with(
    setup: &TreeKernelSetup,
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
    config: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    config.validate()?;
    let x = similarity_features(config.feature_set, table, corpus, setup)?;
    run_protocol(
        ProbeKind::TreeKernel,
        &x,
        &setup.targets,
        &setup.population_ids(corpus),
        &setup.anchors.ids,
        table.layer_id(),
        config,
    )
}

/// Maps cosine-to-anchor vectors onto tree-kernel-to-anchor vectors.
pub fn probe_treekernel(
    table: &EmbeddingTable,
    corpus: &ProbeCorpus,
    config: &ProbeConfig,
    anchor_seed: u64,
) -> Result<ProbeResult, ProbeError> {
    let setup = TreeKernelSetup::new(corpus, config, anchor_seed)?;
    probe_treekernel_with(&setup, table, corpus, config)
}
