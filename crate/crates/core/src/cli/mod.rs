//! Command-line front end.
//!
//! Every subcommand writes its outputs plus a `run.json` into `--out`.
//! `syntaxprobe --replay <run.json>` reruns a recorded invocation after
//! checking that its inputs are unchanged.

mod commands;
mod error;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::probekit::{FeatureSet, DEFAULT_ALPHA_GRID};
use crate::synth::Signal;

pub use error::CliError;
pub use output::{
    discover_layer_files, results_csv, sha256_hex, InputHash, RunRecord, RUN_RECORD,
};

#[derive(Debug, Parser)]
#[command(name = "syntaxprobe", version, about = "Probe utterance embeddings for constituency structure")]
#[command(subcommand_required = false, arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Rerun the invocation recorded in a run.json.
    #[arg(long, value_name = "RUN_JSON")]
    pub replay: Option<PathBuf>,

    /// Output directory for --replay (defaults to the recorded one).
    #[arg(long = "replay-out", value_name = "DIR", requires = "replay")]
    pub replay_out: Option<PathBuf>,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[arg(long = "log-level", global = true, default_value = "warn")]
    pub log_level: String,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Drop overlong (and optionally non-Latin) utterances from a corpus TSV.
    Filter(FilterArgs),
    /// Normalized tree-kernel Gram matrix of a tree file.
    Gram(GramArgs),
    /// Run a probe over every layer_<k>.wemb in a directory.
    Probe(ProbeArgs),
    /// Write a synthetic corpus, its trees and embeddings.
    Synth(SynthArgs),
    /// Merge per-layer result files into results.jsonl and results.csv.
    Report(ReportArgs),
}

impl Command {
    pub fn out_dir(&self) -> &PathBuf {
        match self {
            Command::Filter(a) => &a.out,
            Command::Gram(a) => &a.out,
            Command::Probe(a) => &a.out,
            Command::Synth(a) => &a.out,
            Command::Report(a) => &a.out,
        }
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        match self {
            Command::Filter(a) => a.out = dir,
            Command::Gram(a) => a.out = dir,
            Command::Probe(a) => a.out = dir,
            Command::Synth(a) => a.out = dir,
            Command::Report(a) => a.out = dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    /// Corpus TSV (`id<TAB>transcript`).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long = "max-words", default_value_t = 52)]
    pub max_words: usize,
    #[arg(long = "drop-non-latin")]
    pub drop_non_latin: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GramArgs {
    /// One bracketed tree per line; terminals are stripped.
    #[arg(long)]
    pub trees: PathBuf,
    /// Corpus TSV supplying row IDs; tree indices are used otherwise.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    Depth,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub kind: ProbeTarget,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Trees aligned line by line with the corpus.
    #[arg(long)]
    pub trees: PathBuf,
    /// Directory of layer_<k>.wemb files.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,

    /// Comma-separated; defaults to all five for depth and EMB,BOW for kernel.
    #[arg(long = "feature-set", value_delimiter = ',')]
    pub feature_set: Vec<FeatureSet>,
    #[arg(long = "alpha-grid", value_delimiter = ',', default_values_t = DEFAULT_ALPHA_GRID)]
    pub alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long = "train-fraction", default_value_t = 0.75)]
    pub train_fraction: f64,
    #[arg(long, env = "SYNTAXPROBE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "n-anchors", default_value_t = 200)]
    pub n_anchors: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long)]
    pub standardize: bool,

    /// Token list, one per line; built from the corpus when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long = "bow-min-count", default_value_t = 1)]
    pub bow_min_count: usize,
    #[arg(long = "bow-binary")]
    pub bow_binary: bool,
    /// Also write rsa.jsonl (kernel probe only).
    #[arg(long)]
    pub rsa: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long = "n-utterances", default_value_t = 500)]
    pub n_utterances: usize,
    #[arg(long = "max-depth", default_value_t = 5)]
    pub max_depth: usize,
    #[arg(long, value_delimiter = ',', default_values_t = ["S", "NP", "VP", "PP"].map(String::from))]
    pub nonterminals: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = ["DT", "NN", "VB", "IN"].map(String::from))]
    pub preterminals: Vec<String>,
    #[arg(long, default_value_t = Signal::None)]
    pub signal: Signal,
    #[arg(long = "noise-sigma", default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, env = "SYNTAXPROBE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of layer_<k>.wemb files to write.
    #[arg(long, default_value_t = 3)]
    pub layers: u32,
    #[arg(long = "words-per-tag", default_value_t = 8)]
    pub words_per_tag: usize,
    #[arg(long = "synthetic-anchors", default_value_t = 64)]
    pub synthetic_anchors: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Directory holding layer_<k>.jsonl files from `probe`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, record) = match (cli.command, cli.replay) {
        (Some(c), None) => (c, None),
        (None, Some(path)) => {
            let record = RunRecord::read(&path)?;
            record.verify_inputs()?;
            let mut c = record.invocation.clone();
            if let Some(dir) = cli.replay_out {
                c.set_out_dir(dir);
            }
            (c, Some(record))
        }
        _ => return Err(CliError::Usage("give a subcommand or --replay".into())),
    };
    if let Some(r) = &record {
        log::info!("replaying {} {}", r.tool, r.version);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    pool.install(|| commands::dispatch(&command))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .parse_default_env()
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn probe_flags_mirror_config() {
        let cli = Cli::try_parse_from([
            "syntaxprobe", "probe", "--kind", "depth", "--corpus", "c", "--trees", "t",
            "--embeddings", "e", "--out", "o", "--alpha-grid", "0.1,1", "--feature-set", "EMB,WC",
            "--train-fraction", "0.5", "--n-anchors", "7", "--standardize", "--seed", "9",
        ])
        .unwrap();
        let Some(Command::Probe(p)) = cli.command else { panic!() };
        assert_eq!(p.alpha_grid, vec![0.1, 1.0]);
        assert_eq!(p.feature_set, vec![FeatureSet::Emb, FeatureSet::Wc]);
        assert_eq!((p.train_fraction, p.n_anchors, p.standardize, p.seed), (0.5, 7, true, 9));
        assert_eq!(p.folds, 10);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["syntaxprobe", "probe", "--kind", "sideways"]), 1);
        assert_eq!(run(["syntaxprobe", "--replay", "x", "filter"]), 1);
    }

    #[test]
    fn command_serializes_with_tag() {
        let c = Command::Report(ReportArgs {
            results: "r".into(),
            out: "o".into(),
        });
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.starts_with("{\"command\":\"report\""));
        assert_eq!(serde_json::from_str::<Command>(&json).unwrap(), c);
    }
}
