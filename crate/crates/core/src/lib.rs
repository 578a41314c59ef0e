//! Toolkit for measuring how much constituency structure is linearly
//! recoverable from dense utterance representations.
//!
//! Two probes are provided. The tree-depth probe regresses the maximum depth
//! of each utterance's parse tree on its embedding. The tree-kernel probe
//! regresses each utterance's tree-kernel similarities to a set of anchor
//! sentences on its cosine similarities to the same anchors in embedding
//! space. Both use closed-form ridge regression with cross-validated
//! regularization and report held-out R².

pub mod cli;
pub mod features;
pub mod probekit;
pub mod seed;
pub mod synth;
pub mod treebank;
pub mod treekernel;

pub use features::{CorpusManifest, EmbeddingTable};
pub use probekit::{FeatureSet, ProbeConfig, ProbeResult};
pub use treebank::{parse_ptb, ConstituencyTree};
pub use treekernel::KernelParams;
