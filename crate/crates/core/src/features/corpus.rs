use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use unicode_script::{Script, UnicodeScript};

use super::FeatureError;

/// Lowercased whitespace tokens. Punctuation stays attached.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(str::to_lowercase)
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub transcript: String,
    pub word_count: usize,
}

impl CorpusEntry {
    pub fn new(id: impl Into<String>, transcript: impl Into<String>) -> Self {
        let transcript = transcript.into();
        CorpusEntry {
            id: id.into(),
            word_count: word_count(&transcript),
            transcript,
        }
    }
}

/// Ordered utterance list read from `id<TAB>transcript` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    entries: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterSummary {
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
}

impl CorpusManifest {
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Self, FeatureError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(FeatureError::DuplicateId(e.id.clone()));
            }
        }
        Ok(CorpusManifest { entries })
    }

    pub fn parse_tsv(text: &str) -> Result<Self, FeatureError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let (id, transcript) = line.split_once('\t').ok_or_else(|| FeatureError::Format {
                line: line_no,
                msg: "expected id<TAB>transcript".into(),
            })?;
            if id.is_empty() {
                return Err(FeatureError::Format {
                    line: line_no,
                    msg: "empty utterance id".into(),
                });
            }
            entries.push(CorpusEntry::new(id, transcript));
        }
        Self::new(entries)
    }

    pub fn read_tsv(path: &Path) -> Result<Self, FeatureError> {
        let text = fs::read_to_string(path).map_err(|e| FeatureError::io(path, e))?;
        Self::parse_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.id);
            out.push('\t');
            out.push_str(&e.transcript);
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    fn retain(&self, keep: impl Fn(&CorpusEntry) -> bool) -> (CorpusManifest, FilterSummary) {
        let entries: Vec<CorpusEntry> = self.entries.iter().filter(|e| keep(e)).cloned().collect();
        let summary = FilterSummary {
            input: self.entries.len(),
            kept: entries.len(),
            dropped: self.entries.len() - entries.len(),
        };
        (CorpusManifest { entries }, summary)
    }
}

/// Keeps utterances of at most `max_words` words, in order.
pub fn filter_corpus(
    manifest: &CorpusManifest,
    max_words: usize,
) -> Result<(CorpusManifest, FilterSummary), FeatureError> {
    if max_words == 0 {
        return Err(FeatureError::InvalidArgument("max_words must be at least 1".into()));
    }
    Ok(manifest.retain(|e| e.word_count <= max_words))
}

/// True when some alphabetic character belongs to a script other than Latin.
/// Script-neutral characters (Common, Inherited) never count.
pub fn has_non_latin(text: &str) -> bool {
    text.chars().any(|c| {
        c.is_alphabetic() && !matches!(c.script(), Script::Latin | Script::Common | Script::Inherited)
    })
}

pub fn remove_non_latin(manifest: &CorpusManifest) -> (CorpusManifest, FilterSummary) {
    manifest.retain(|e| !has_non_latin(&e.transcript))
}

/// Token to column index. Indices are dense and follow sorted token order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BowVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl BowVocabulary {
    /// Vocabulary over every token seen at least `min_count` times.
    pub fn build<'a>(
        manifests: impl IntoIterator<Item = &'a CorpusManifest>,
        min_count: usize,
    ) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for m in manifests {
            for e in m.entries() {
                for tok in tokenize(&e.transcript) {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        Self::from_tokens(
            counts
                .into_iter()
                .filter(|&(_, c)| c >= min_count.max(1))
                .map(|(t, _)| t),
        )
        .expect("BTreeMap keys are unique")
    }

    /// Column order follows the iteration order of `tokens`.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Result<Self, FeatureError> {
        let mut vocab = BowVocabulary::default();
        for tok in tokens {
            let tok = tok.to_lowercase();
            if vocab.index.contains_key(&tok) {
                return Err(FeatureError::DuplicateId(tok));
            }
            vocab.index.insert(tok.clone(), vocab.tokens.len());
            vocab.tokens.push(tok);
        }
        Ok(vocab)
    }

    /// One token per line.
    pub fn read(path: &Path) -> Result<Self, FeatureError> {
        let text = fs::read_to_string(path).map_err(|e| FeatureError::io(path, e))?;
        Self::from_tokens(text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().to_owned()))
    }

    pub fn to_lines(&self) -> String {
        self.tokens.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Count matrix, one row per transcript. Out-of-vocabulary tokens are
/// skipped. With `binary`, counts are clipped to 1.
pub fn bow_features(manifest: &CorpusManifest, vocab: &BowVocabulary, binary: bool) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(manifest.len(), vocab.size());
    for (i, e) in manifest.entries().iter().enumerate() {
        for tok in tokenize(&e.transcript) {
            if let Some(j) = vocab.get(&tok) {
                m[(i, j)] = if binary { 1.0 } else { m[(i, j)] + 1.0 };
            }
        }
    }
    m
}

pub fn word_count_feature(manifest: &CorpusManifest) -> DMatrix<f64> {
    DMatrix::from_iterator(
        manifest.len(),
        1,
        manifest.entries().iter().map(|e| e.word_count as f64),
    )
}
