//! Ridge probes over utterance representations.
//!
//! Both probes share one protocol: a seeded train/test split, alpha chosen by
//! k-fold cross-validation on the training rows only, a refit on all training
//! rows, and a single held-out R².

mod cv;
mod metrics;
mod probes;
mod ridge;
mod rsa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::FeatureError;
use crate::treekernel::KernelError;

pub use cv::{fit_predict, fold_partition, select_alpha, train_test_split, AlphaSelection};
pub use metrics::{pearson, r2_score, R2Score};
pub use probes::{
    probe_treedepth, probe_treekernel, probe_treekernel_with, AnchorSet, ProbeCorpus,
    TreeKernelSetup,
};
pub use ridge::{ridge_fit, RidgeModel};
pub use rsa::{rsa_baseline, rsa_from_matrices};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("ridge system is singular")]
    SingularSystem,
    #[error("non-finite value in regression input")]
    NaNInput,
    #[error("feature set {0} is not defined for the {1} probe")]
    UnsupportedFeatureSet(FeatureSet, ProbeKind),
    #[error("train, test and anchor sets overlap")]
    SplitOverlap,
    #[error("similarity vector has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "EMB")]
    Emb,
    #[serde(rename = "EMB+WC")]
    EmbWc,
    #[serde(rename = "EMB+BOW")]
    EmbBow,
    #[serde(rename = "WC")]
    Wc,
    #[serde(rename = "BOW")]
    Bow,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::Emb,
        FeatureSet::EmbWc,
        FeatureSet::EmbBow,
        FeatureSet::Wc,
        FeatureSet::Bow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Emb => "EMB",
            FeatureSet::EmbWc => "EMB+WC",
            FeatureSet::EmbBow => "EMB+BOW",
            FeatureSet::Wc => "WC",
            FeatureSet::Bow => "BOW",
        }
    }

    pub fn uses_embeddings(self) -> bool {
        matches!(self, FeatureSet::Emb | FeatureSet::EmbWc | FeatureSet::EmbBow)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::ALL
            .into_iter()
            .find(|fs| fs.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown feature set {s:?} (expected EMB, EMB+WC, EMB+BOW, WC or BOW)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    TreeDepth,
    TreeKernel,
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeKind::TreeDepth => "treedepth",
            ProbeKind::TreeKernel => "treekernel",
        })
    }
}

pub const DEFAULT_ALPHA_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub alpha_grid: Vec<f64>,
    pub folds: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub feature_set: FeatureSet,
    /// Anchor sentences for the tree-kernel probe.
    pub n_anchors: usize,
    /// Tree-kernel decay.
    pub lambda: f64,
    /// Scale X columns to unit variance in addition to centering.
    pub standardize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            folds: 10,
            train_fraction: 0.75,
            seed: 0,
            feature_set: FeatureSet::Emb,
            n_anchors: 200,
            lambda: 0.5,
            standardize: false,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: String| Err(ProbeError::InvalidConfig(m));
        if self.alpha_grid.is_empty() {
            return bad("alpha grid is empty".into());
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return bad(format!("alpha values must be positive, got {a}"));
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of the config and the probe kind.
    pub fn fingerprint(&self, kind: ProbeKind) -> String {
        let json = serde_json::to_string(&(kind, self)).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub probe: ProbeKind,
    pub layer_id: u32,
    pub feature_set: FeatureSet,
    pub chosen_alpha: f64,
    /// Mean validation R² of the chosen alpha.
    pub cv_score: f64,
    pub test_r2: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_anchors: usize,
    pub seed: u64,
    pub standardize: bool,
    pub config_fingerprint: String,
}
