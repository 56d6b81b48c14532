//! Bundled miniature corpora: statistics against hand counts and against a
//! recount straight from the XML text.

use ian_core::checkpoint::{self, Checkpoint};
use ian_core::data::{fixture_xml, load_corpus, Category, DatasetStats, Source, Split};
use ian_core::embeddings::EmbeddingTable;
use ian_core::eval::evaluate;
use ian_core::model::{ModelConfig, ModelVariant};
use ian_core::numerics::Rng;
use ian_core::training::{train_from_scratch, TrainConfig};

/// (category, split, pos/neu/neg, length bins 1..5 and >5), counted by hand.
const HAND_COUNTS: [(Category, Split, [usize; 3], [usize; 6]); 4] = [
    (Category::Restaurants, Split::Train, [9, 3, 4], [9, 5, 1, 0, 0, 1]),
    (Category::Restaurants, Split::Test, [3, 1, 2], [6, 0, 0, 0, 0, 0]),
    (Category::Laptops, Split::Train, [7, 2, 5], [4, 5, 2, 1, 1, 1]),
    (Category::Laptops, Split::Test, [2, 1, 1], [3, 1, 0, 0, 0, 0]),
];

fn stats(category: Category, split: Split) -> DatasetStats {
    let corpus = load_corpus(&Source::Fixture, category, true).unwrap();
    match split {
        Split::Train => corpus.train.stats(),
        Split::Test => corpus.test.stats(),
    }
}

#[test]
fn fixture_statistics_match_hand_counts() {
    for (category, split, polarity, lengths) in HAND_COUNTS {
        let s = stats(category, split);
        assert_eq!(s.polarity, polarity, "{category} {split}");
        assert_eq!(s.lengths, lengths, "{category} {split}");
    }
}

#[test]
fn polarity_counts_match_a_text_recount() {
    for (category, split, _, _) in HAND_COUNTS {
        let xml = fixture_xml(category, split);
        let count =
            |label: &str| xml.lines().filter(|l| l.contains("<aspectTerm ") && l.contains(&format!("polarity=\"{label}\""))).count();
        let s = stats(category, split);
        assert_eq!(s.polarity, [count("positive"), count("neutral"), count("negative")]);
    }
}

#[test]
fn conflict_and_misaligned_terms_are_reported() {
    let corpus = load_corpus(&Source::Fixture, Category::Restaurants, true).unwrap();
    let r = &corpus.train.build_report;
    assert_eq!(r.conflict, 1);
    assert_eq!(r.instances, 16);
    assert!(r.dropped.is_empty());
    assert_eq!(corpus.train.parse_report.realigned, 1);
    assert_eq!(corpus.train.parse_report.without_terms, 1);
}

#[test]
fn non_transductive_vocab_maps_test_only_words_to_pad() {
    let full = load_corpus(&Source::Fixture, Category::Laptops, true).unwrap();
    let train_only = load_corpus(&Source::Fixture, Category::Laptops, false).unwrap();
    assert!(train_only.vocab.len() < full.vocab.len());
    assert!(train_only.vocab.get("trackpad").is_none());
    assert!(full.vocab.get("trackpad").is_some());
    let has_pad = train_only.test.instances.iter().any(|i| i.context.contains(&0));
    assert!(has_pad);
}

#[test]
fn checkpoint_round_trip_reproduces_evaluation() {
    let corpus = load_corpus(&Source::Fixture, Category::Restaurants, true).unwrap();
    let config = TrainConfig {
        model: ModelConfig { variant: ModelVariant::Ian, hidden_dim: 6, ..ModelConfig::default() },
        epochs: 3,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let table = EmbeddingTable::random(corpus.vocab.len(), 5, 0.1, &mut Rng::new(4));
    let out = train_from_scratch(table, &corpus.train.instances, &corpus.test.instances, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    checkpoint::save(&path, &Checkpoint::new(out.params.clone(), corpus.vocab.clone())).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert_eq!(back.params, out.params);
    let a = evaluate(&out.params, &corpus.test.instances).unwrap();
    let b = evaluate(&back.params, &corpus.test.instances).unwrap();
    assert_eq!(a, b);
    assert_eq!(Some(&a), out.final_test.as_ref());
}
