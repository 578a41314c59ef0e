use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::error::CliError;
use super::output::{
    create_dir, discover_layer_files, parse_results_jsonl, read_to_string, results_jsonl,
    write_file, write_merged, InputHash, RunRecord,
};
use super::{Command, FilterArgs, GramArgs, ProbeArgs, ProbeTarget, ReportArgs, SynthArgs};
use crate::features::wemb::{companion_manifest, manifest_to_jsonl};
use crate::features::{filter_corpus, remove_non_latin, BowVocabulary, CorpusManifest, EmbeddingTable};
use crate::probekit::{
    probe_treedepth, probe_treekernel_with, rsa_baseline, FeatureSet, ProbeConfig, ProbeCorpus,
    ProbeResult, TreeKernelSetup,
};
use crate::seed::derive_seed;
use crate::synth::{generate_corpus, synth_embeddings, LabelAlphabet, SynthSpec};
use crate::treebank::{delexicalize, read_tree_corpus, write_tree_corpus};
use crate::treekernel::{gram_matrix, write_gram_csv, KernelParams};

pub(super) fn dispatch(command: &Command) -> Result<(), CliError> {
    let out = command.out_dir();
    let inputs = match command {
        Command::Filter(a) => filter(a)?,
        Command::Gram(a) => gram(a)?,
        Command::Probe(a) => probe(a)?,
        Command::Synth(a) => synth(a)?,
        Command::Report(a) => report(a)?,
    };
    RunRecord::new(command.clone(), inputs).write(out)
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", path.display())))
    }
}

fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such directory", path.display())))
    }
}

fn read_corpus(path: &Path) -> Result<CorpusManifest, CliError> {
    CorpusManifest::read_tsv(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes") + "\n"
}

#[derive(Serialize)]
struct FilterReport {
    input: usize,
    non_latin_dropped: Option<usize>,
    too_long_dropped: usize,
    kept: usize,
    max_words: usize,
}

fn filter(a: &FilterArgs) -> Result<Vec<InputHash>, CliError> {
    require_file(&a.corpus)?;
    let corpus = read_corpus(&a.corpus)?;
    create_dir(&a.out)?;

    let input = corpus.len();
    let (latin, non_latin_dropped) = if a.drop_non_latin {
        let (m, s) = remove_non_latin(&corpus);
        println!("non-Latin filter: {} -> {} utterances", s.input, s.kept);
        (m, Some(s.dropped))
    } else {
        (corpus, None)
    };
    let (kept, summary) = filter_corpus(&latin, a.max_words)?;
    println!(
        "length filter (max {} words): {} -> {} utterances ({} dropped)",
        a.max_words, summary.input, summary.kept, summary.dropped
    );

    write_file(&a.out.join("corpus.tsv"), kept.to_tsv())?;
    let report = FilterReport {
        input,
        non_latin_dropped,
        too_long_dropped: summary.dropped,
        kept: summary.kept,
        max_words: a.max_words,
    };
    write_file(&a.out.join("filter_summary.json"), json_line(&report))?;
    Ok(vec![InputHash::of(&a.corpus)?])
}

fn gram(a: &GramArgs) -> Result<Vec<InputHash>, CliError> {
    require_file(&a.trees)?;
    let params = KernelParams::new(a.lambda)?;
    let trees: Vec<_> = read_tree_corpus(&a.trees)
        .map_err(|e| CliError::from(e).context(a.trees.display()))?
        .iter()
        .map(delexicalize)
        .collect();
    let mut inputs = vec![InputHash::of(&a.trees)?];
    let ids = match &a.corpus {
        Some(path) => {
            require_file(path)?;
            let ids = read_corpus(path)?.ids();
            if ids.len() != trees.len() {
                return Err(CliError::Data(format!(
                    "{} lists {} utterances but {} has {} trees",
                    path.display(),
                    ids.len(),
                    a.trees.display(),
                    trees.len()
                )));
            }
            inputs.push(InputHash::of(path)?);
            ids
        }
        None => (0..trees.len()).map(|i| i.to_string()).collect(),
    };
    let gram = gram_matrix(&trees, params)?;
    create_dir(&a.out)?;

    let mut csv = Vec::new();
    write_gram_csv(&mut csv, &ids, &gram).expect("writing to a Vec cannot fail");
    write_file(&a.out.join("gram.csv"), csv)?;
    EmbeddingTable::from_matrix(0, &gram, ids)?.save(&a.out.join("gram.wemb"))?;
    println!("{} x {} Gram matrix written to {}", gram.nrows(), gram.ncols(), a.out.display());
    Ok(inputs)
}

fn probe_config(a: &ProbeArgs, feature_set: FeatureSet) -> ProbeConfig {
    ProbeConfig {
        alpha_grid: a.alpha_grid.clone(),
        folds: a.folds,
        train_fraction: a.train_fraction,
        seed: a.seed,
        feature_set,
        n_anchors: a.n_anchors,
        lambda: a.lambda,
        standardize: a.standardize,
    }
}

fn feature_sets(a: &ProbeArgs) -> Vec<FeatureSet> {
    if !a.feature_set.is_empty() {
        return a.feature_set.clone();
    }
    match a.kind {
        ProbeTarget::Depth => FeatureSet::ALL.to_vec(),
        ProbeTarget::Kernel => vec![FeatureSet::Emb, FeatureSet::Bow],
    }
}

/// Layer tables in file order; header layer ids must increase strictly.
type Layers = Vec<(PathBuf, EmbeddingTable)>;

fn load_layers(dir: &Path) -> Result<(Layers, Vec<InputHash>), CliError> {
    let files = discover_layer_files(dir, "wemb")?;
    let mut layers: Vec<(PathBuf, EmbeddingTable)> = Vec::with_capacity(files.len());
    let mut inputs = Vec::new();
    for (k, path) in files {
        let table = EmbeddingTable::load(&path).map_err(|e| CliError::from(e).context(path.display()))?;
        if table.layer_id() != k {
            log::warn!("{} declares layer {}", path.display(), table.layer_id());
        }
        if let Some((prev_path, prev)) = layers.last() {
            if table.layer_id() <= prev.layer_id() {
                return Err(CliError::Data(format!(
                    "layer ids must increase: {} has {} after {} with {}",
                    path.display(),
                    table.layer_id(),
                    prev_path.display(),
                    prev.layer_id()
                )));
            }
        }
        inputs.push(InputHash::of(&path)?);
        let manifest = companion_manifest(&path)?;
        if !inputs.iter().any(|h| h.path == manifest) {
            inputs.push(InputHash::of(&manifest)?);
        }
        layers.push((path, table));
    }
    Ok((layers, inputs))
}

#[derive(Serialize)]
struct RsaLine {
    layer_id: u32,
    rsa: f64,
}

fn probe(a: &ProbeArgs) -> Result<Vec<InputHash>, CliError> {
    require_file(&a.corpus)?;
    require_file(&a.trees)?;
    require_dir(&a.embeddings)?;
    if let Some(v) = &a.vocab {
        require_file(v)?;
    }
    let sets = feature_sets(a);
    for &fs in &sets {
        probe_config(a, fs).validate()?;
    }
    if a.rsa && a.kind != ProbeTarget::Kernel {
        return Err(CliError::Usage("--rsa applies to --kind kernel only".into()));
    }

    let manifest = read_corpus(&a.corpus)?;
    let trees = read_tree_corpus(&a.trees).map_err(|e| CliError::from(e).context(a.trees.display()))?;
    let vocab = match &a.vocab {
        Some(path) => BowVocabulary::read(path)?,
        None => BowVocabulary::build([&manifest], a.bow_min_count),
    };
    let corpus = ProbeCorpus::new(&manifest, &trees, &vocab, a.bow_binary)
        .map_err(|e| CliError::from(e).context(a.trees.display()))?;
    let (layers, layer_inputs) = load_layers(&a.embeddings)?;

    let mut inputs = vec![InputHash::of(&a.corpus)?, InputHash::of(&a.trees)?];
    if let Some(v) = &a.vocab {
        inputs.push(InputHash::of(v)?);
    }
    inputs.extend(layer_inputs);

    let setup = match a.kind {
        ProbeTarget::Kernel => Some(TreeKernelSetup::new(
            &corpus,
            &probe_config(a, FeatureSet::Emb),
            derive_seed(a.seed, "anchors"),
        )?),
        ProbeTarget::Depth => None,
    };
    create_dir(&a.out)?;

    let run_layer = |(path, table): &(PathBuf, EmbeddingTable)| -> Result<(Vec<ProbeResult>, Option<f64>), CliError> {
        let mut results = Vec::with_capacity(sets.len());
        for &fs in &sets {
            let config = probe_config(a, fs);
            let r = match &setup {
                Some(s) => probe_treekernel_with(s, table, &corpus, &config),
                None => probe_treedepth(table, &corpus, &config),
            }
            .map_err(|e| CliError::from(e).context(format!("{} {fs}", path.display())))?;
            log::info!("layer {} {fs}: test R2 {:.4}", r.layer_id, r.test_r2);
            results.push(r);
        }
        let rsa = match (&setup, a.rsa) {
            (Some(s), true) => Some(
                rsa_baseline(table, &corpus, &s.anchors, KernelParams::new(a.lambda)?)
                    .map_err(|e| CliError::from(e).context(path.display()))?,
            ),
            _ => None,
        };
        write_file(
            &a.out.join(format!("layer_{}.jsonl", table.layer_id())),
            results_jsonl(&results),
        )?;
        Ok((results, rsa))
    };
    let per_layer: Vec<_> = layers.par_iter().map(run_layer).collect();

    let mut all = Vec::new();
    let mut rsa_lines = String::new();
    for ((_, table), outcome) in layers.iter().zip(per_layer) {
        let (results, rsa) = outcome?;
        all.extend(results);
        if let Some(rsa) = rsa {
            rsa_lines.push_str(&json_line(&RsaLine {
                layer_id: table.layer_id(),
                rsa,
            }));
        }
    }
    write_merged(&a.out, &all)?;
    if a.rsa {
        write_file(&a.out.join("rsa.jsonl"), rsa_lines)?;
    }
    println!("{} results over {} layers written to {}", all.len(), layers.len(), a.out.display());
    Ok(inputs)
}

fn synth_spec(a: &SynthArgs) -> SynthSpec {
    SynthSpec {
        n_utterances: a.n_utterances,
        max_depth: a.max_depth,
        label_alphabet: LabelAlphabet {
            nonterminals: a.nonterminals.clone(),
            preterminals: a.preterminals.clone(),
        },
        signal: a.signal,
        noise_sigma: a.noise_sigma,
        dim: a.dim,
        seed: a.seed,
        words_per_tag: a.words_per_tag,
        synthetic_anchors: a.synthetic_anchors,
    }
}

fn synth(a: &SynthArgs) -> Result<Vec<InputHash>, CliError> {
    if a.layers == 0 {
        return Err(CliError::Usage("--layers must be at least 1".into()));
    }
    let spec = synth_spec(a);
    let corpus = generate_corpus(&spec)?;
    let emb_dir = a.out.join("embeddings");
    create_dir(&emb_dir)?;
    write_file(&a.out.join("corpus.tsv"), corpus.manifest.to_tsv())?;
    write_file(&a.out.join("trees.txt"), write_tree_corpus(&corpus.trees))?;
    write_file(&emb_dir.join("manifest.jsonl"), manifest_to_jsonl(&corpus.ids()))?;
    let tables: Vec<EmbeddingTable> = (0..a.layers)
        .into_par_iter()
        .map(|k| synth_embeddings(&corpus, &spec, k))
        .collect::<Result<_, _>>()?;
    for t in &tables {
        t.save_table_only(&emb_dir.join(format!("layer_{}.wemb", t.layer_id())))?;
    }
    println!(
        "{} utterances, {} layers of width {} ({} signal) written to {}",
        a.n_utterances,
        a.layers,
        a.dim,
        a.signal,
        a.out.display()
    );
    Ok(Vec::new())
}

fn report(a: &ReportArgs) -> Result<Vec<InputHash>, CliError> {
    require_dir(&a.results)?;
    let files = discover_layer_files(&a.results, "jsonl")?;
    let mut all = Vec::new();
    let mut inputs = Vec::new();
    for (_, path) in &files {
        all.extend(parse_results_jsonl(&read_to_string(path)?, path)?);
        inputs.push(InputHash::of(path)?);
    }
    create_dir(&a.out)?;
    write_merged(&a.out, &all)?;
    println!("{} results from {} files merged into {}", all.len(), files.len(), a.out.display());
    Ok(inputs)
}
