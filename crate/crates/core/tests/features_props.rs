use proptest::prelude::*;
use syntaxprobe::features::wemb::{decode_header, manifest_to_jsonl, parse_manifest_jsonl};
use syntaxprobe::features::{
    bow_features, cosine_similarity, filter_corpus, remove_non_latin, word_count, BowVocabulary,
    CorpusEntry, CorpusManifest, EmbeddingTable, FeatureError,
};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("utt-{i}")).collect()
}

fn transcript() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["the", "Dog", "ran", "A", "café", "x"]), 0..12)
        .prop_map(|w| w.join(" "))
}

fn manifest() -> impl Strategy<Value = CorpusManifest> {
    prop::collection::vec(transcript(), 1..20).prop_map(|ts| {
        CorpusManifest::new(
            ts.into_iter()
                .enumerate()
                .map(|(i, t)| CorpusEntry::new(format!("u{i}"), t))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn wemb_round_trip_is_bit_exact(
        layer in any::<u32>(),
        (rows, dim) in (1usize..8, 1usize..8),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..rows * dim)
            .map(|_| f32::from_bits(rng.random::<u32>()))
            .map(|v| if v.is_finite() { v } else { 0.5 })
            .collect();
        let table = EmbeddingTable::new(layer, dim, data.clone(), ids(rows)).unwrap();
        let bytes = table.encode();
        prop_assert_eq!(bytes.len(), 17 + 4 * rows * dim);
        prop_assert_eq!(&bytes[..5], b"WEMB\x01");
        prop_assert_eq!(&bytes[5..9], &layer.to_le_bytes());
        let h = decode_header(&bytes).unwrap();
        prop_assert_eq!((h.layer_id, h.rows, h.dim), (layer, rows, dim));
        let back = EmbeddingTable::decode(&bytes, ids(rows)).unwrap();
        prop_assert_eq!(back.encode(), bytes);
        for (i, chunk) in data.chunks(dim).enumerate() {
            prop_assert_eq!(back.row(i).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            chunk.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn manifest_jsonl_round_trip(names in prop::collection::vec("[a-zA-Z0-9_\"\\\\ é-]{1,12}", 0..10)) {
        prop_assert_eq!(parse_manifest_jsonl(&manifest_to_jsonl(&names)).unwrap(), names);
    }

    #[test]
    fn cosine_ignores_positive_scale(
        u in prop::collection::vec(-10.0f64..10.0, 1..16),
        scale in 1e-3f64..1e3,
    ) {
        prop_assume!(u.iter().any(|v| v.abs() > 1e-6));
        let v: Vec<f64> = u.iter().rev().cloned().collect();
        let scaled: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let a = cosine_similarity(&u, &v).unwrap();
        let b = cosine_similarity(&scaled, &v).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert!((cosine_similarity(&u, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bow_rows_sum_to_word_count(m in manifest()) {
        let vocab = BowVocabulary::build([&m], 1);
        let bow = bow_features(&m, &vocab, false);
        for (i, e) in m.entries().iter().enumerate() {
            prop_assert_eq!(bow.row(i).sum(), word_count(&e.transcript) as f64);
        }
        let binary = bow_features(&m, &vocab, true);
        prop_assert!(binary.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn filtering_is_idempotent(m in manifest(), max_words in 1usize..12) {
        let (once, s1) = filter_corpus(&m, max_words).unwrap();
        let (twice, s2) = filter_corpus(&once, max_words).unwrap();
        prop_assert_eq!(once.to_tsv(), twice.to_tsv());
        prop_assert_eq!(s2.dropped, 0);
        prop_assert_eq!(s1.kept + s1.dropped, m.len());
        prop_assert!(once.entries().iter().all(|e| word_count(&e.transcript) <= max_words));
    }
}

#[test]
fn tsv_filter_example() {
    let m = CorpusManifest::parse_tsv("a\tone two\nb\tone two three\nc\tone\n").unwrap();
    let (kept, s) = filter_corpus(&m, 2).unwrap();
    assert_eq!(kept.ids(), vec!["a", "c"]);
    assert_eq!((s.input, s.kept, s.dropped), (3, 2, 1));
}

#[test]
fn non_latin_filter() {
    let m = CorpusManifest::parse_tsv("a\tnaïve café\nb\tслово\nc\t42 ok!\nd\tmixed 漢字\n").unwrap();
    let (kept, s) = remove_non_latin(&m);
    assert_eq!(kept.ids(), vec!["a", "c"]);
    assert_eq!(s.dropped, 2);
}

#[test]
fn decode_rejects_damage() {
    let table = EmbeddingTable::new(0, 2, vec![1.0, 2.0, 3.0, 4.0], ids(2)).unwrap();
    let bytes = table.encode();
    assert!(matches!(EmbeddingTable::decode(&bytes[..20], ids(2)), Err(FeatureError::Truncated { .. })));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(EmbeddingTable::decode(&bad, ids(2)), Err(FeatureError::BadMagic)));
    let mut v2 = bytes.clone();
    v2[4] = 2;
    assert!(matches!(EmbeddingTable::decode(&v2, ids(2)), Err(FeatureError::UnsupportedVersion(2))));
    assert!(matches!(EmbeddingTable::decode(&bytes, ids(3)), Err(FeatureError::ManifestMismatch { .. })));
    let mut nan = bytes;
    nan[17..21].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(EmbeddingTable::decode(&nan, ids(2)), Err(FeatureError::NonFinite { row: 0, col: 0 })));
}

#[test]
fn shared_manifest_is_found() {
    let dir = tempfile::tempdir().unwrap();
    let table = EmbeddingTable::new(4, 1, vec![1.0, 2.0], ids(2)).unwrap();
    table.save_table_only(&dir.path().join("layer_4.wemb")).unwrap();
    assert!(matches!(
        EmbeddingTable::load(&dir.path().join("layer_4.wemb")),
        Err(FeatureError::MissingManifest(_))
    ));
    std::fs::write(dir.path().join("manifest.jsonl"), manifest_to_jsonl(&ids(2))).unwrap();
    let back = EmbeddingTable::load(&dir.path().join("layer_4.wemb")).unwrap();
    assert_eq!(back.manifest(), ids(2).as_slice());
    assert_eq!(back.layer_id(), 4);
}
