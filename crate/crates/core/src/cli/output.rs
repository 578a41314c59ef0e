use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::error::CliError;
use super::Command;
use crate::probekit::ProbeResult;

pub const RUN_RECORD: &str = "run.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputHash {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(InputHash {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Everything needed to rerun a command: the resolved arguments and the
/// hashes of every file it read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub invocation: Command,
    pub inputs: Vec<InputHash>,
}

impl RunRecord {
    pub fn new(invocation: Command, inputs: Vec<InputHash>) -> Self {
        RunRecord {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            invocation,
            inputs,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_string_pretty(self).expect("run record serializes");
        json.push('\n');
        write_file(&out_dir.join(RUN_RECORD), json)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Usage(format!("{}: not a run record: {e}", path.display())))
    }

    /// Fails when an input no longer has the recorded hash.
    pub fn verify_inputs(&self) -> Result<(), CliError> {
        for input in &self.inputs {
            let now = InputHash::of(&input.path)?;
            if now.sha256 != input.sha256 {
                return Err(CliError::Data(format!(
                    "{}: contents changed since the recorded run",
                    input.path.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn results_jsonl(results: &[ProbeResult]) -> String {
    results
        .iter()
        .map(|r| serde_json::to_string(r).expect("results serialize") + "\n")
        .collect()
}

pub fn parse_results_jsonl(text: &str, origin: &Path) -> Result<Vec<ProbeResult>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Data(format!("{}: line {}: {e}", origin.display(), i + 1)))
        })
        .collect()
}

/// Plot-ready table: one row per layer, one column per feature set in
/// alphabetical order, cells hold test R². Columns are prefixed with the
/// probe kind when results of both probes are mixed.
pub fn results_csv(results: &[ProbeResult]) -> String {
    let kinds: BTreeSet<_> = results.iter().map(|r| r.probe).collect();
    let column = |r: &ProbeResult| {
        if kinds.len() > 1 {
            format!("{}:{}", r.probe, r.feature_set)
        } else {
            r.feature_set.to_string()
        }
    };
    let columns: BTreeSet<String> = results.iter().map(column).collect();
    let mut cells: BTreeMap<u32, BTreeMap<String, f64>> = BTreeMap::new();
    for r in results {
        cells.entry(r.layer_id).or_default().insert(column(r), r.test_r2);
    }

    let mut out = String::from("layer");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (layer, row) in &cells {
        out.push_str(&layer.to_string());
        for c in &columns {
            out.push(',');
            if let Some(v) = row.get(c) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `results.jsonl` and `results.csv`, ordered by layer then feature set.
pub fn write_merged(out_dir: &Path, results: &[ProbeResult]) -> Result<(), CliError> {
    let mut sorted = results.to_vec();
    sorted.sort_by_key(|r| (r.layer_id, r.probe, r.feature_set));
    write_file(&out_dir.join("results.jsonl"), results_jsonl(&sorted))?;
    write_file(&out_dir.join("results.csv"), results_csv(&sorted))
}

/// `layer_<k>.<ext>` files in `dir`, sorted by k.
pub fn discover_layer_files(dir: &Path, ext: &str) -> Result<Vec<(u32, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let k = name
            .strip_prefix("layer_")
            .and_then(|rest| rest.strip_suffix(ext))
            .and_then(|rest| rest.strip_suffix('.'))
            .and_then(|k| k.parse::<u32>().ok());
        if let Some(k) = k {
            found.push((k, path));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no layer_<k>.{ext} files found",
            dir.display()
        )));
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probekit::{FeatureSet, ProbeKind};

    fn result(layer: u32, fs: FeatureSet, r2: f64) -> ProbeResult {
        ProbeResult {
            probe: ProbeKind::TreeDepth,
            layer_id: layer,
            feature_set: fs,
            chosen_alpha: 1.0,
            cv_score: 0.0,
            test_r2: r2,
            n_train: 3,
            n_test: 1,
            n_anchors: 0,
            seed: 0,
            standardize: false,
            config_fingerprint: String::new(),
        }
    }

    #[test]
    fn csv_layout() {
        let rs = [
            result(1, FeatureSet::Wc, 0.25),
            result(0, FeatureSet::Emb, 0.5),
            result(0, FeatureSet::Wc, 0.25),
        ];
        assert_eq!(results_csv(&rs), "layer,EMB,WC\n0,0.5,0.25\n1,,0.25\n");
    }

    #[test]
    fn jsonl_round_trip() {
        let rs = vec![result(0, FeatureSet::EmbBow, 0.125)];
        let text = results_jsonl(&rs);
        assert_eq!(parse_results_jsonl(&text, Path::new("x")).unwrap(), rs);
        assert!(text.contains("\"EMB+BOW\""));
    }

    #[test]
    fn layer_discovery() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["layer_10.wemb", "layer_2.wemb", "layer_x.wemb", "layer_3.jsonl", "manifest.jsonl"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let found = discover_layer_files(dir.path(), "wemb").unwrap();
        assert_eq!(found.iter().map(|(k, _)| *k).collect::<Vec<_>>(), vec![2, 10]);
        assert!(discover_layer_files(dir.path(), "csv").is_err());
    }
}
