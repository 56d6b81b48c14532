mod common;

use std::time::Instant;

use common::synthetic::{separable_set, VOCAB};
use ian_core::embeddings::EmbeddingTable;
use ian_core::model::{ModelConfig, ModelVariant};
use ian_core::numerics::Rng;
use ian_core::training::{train, train_from_scratch, TrainConfig};

const LR: f64 = 0.05;

fn config(variant: ModelVariant, hidden: usize, epochs: usize) -> TrainConfig {
    TrainConfig {
        model: ModelConfig { variant, hidden_dim: hidden, ..ModelConfig::default() },
        learning_rate: LR,
        batch_size: 4,
        epochs,
        ..TrainConfig::default()
    }
}

fn table(dim: usize, seed: u64) -> EmbeddingTable {
    EmbeddingTable::random(VOCAB, dim, 0.1, &mut Rng::new(seed))
}

#[test]
fn separable_set_is_fit_within_200_epochs() {
    let data = separable_set(20, 11);
    let started = Instant::now();
    let out = train_from_scratch(table(16, 1), &data, &[], &config(ModelVariant::Ian, 16, 200)).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let first = out.history.epochs.iter().find(|r| r.train_acc == 1.0).map(|r| r.epoch);
    eprintln!("first perfect epoch {first:?}, {elapsed:.2}s");
    assert!(first.is_some(), "never reached 100%: last {:?}", out.history.epochs.last());
    assert!(elapsed < 30.0);
}

#[test]
fn single_instance_loss_goes_to_zero() {
    let data = separable_set(1, 3);
    let c = TrainConfig { dropout: 0.0, l2: 0.0, ..config(ModelVariant::Ian, 8, 150) };
    let out = train_from_scratch(table(8, 2), &data, &[], &c).unwrap();
    let losses: Vec<f64> = out.history.epochs.iter().map(|r| r.loss).collect();
    // momentum may overshoot early on
    let warmup = 20;
    for w in losses[warmup..].windows(2) {
        assert!(w[1] <= w[0], "loss rose after warmup: {losses:?}");
    }
    // x = tanh(.) keeps every logit in [-1, 1], so the cross-entropy of three
    // classes cannot drop below ln(1 + 2e^-2)
    let floor = (1.0 + 2.0 * (-2.0f64).exp()).ln();
    let last = *losses.last().unwrap();
    assert!(losses.iter().all(|&l| l >= floor));
    assert!(last < floor + 0.01, "final loss {last}, floor {floor}");
}

#[test]
fn same_seed_gives_bit_identical_history_and_parameters() {
    let data = separable_set(20, 4);
    let test = separable_set(6, 5);
    let c = config(ModelVariant::Ian, 6, 8);
    let a = train_from_scratch(table(5, 9), &data, &test, &c).unwrap();
    let b = train_from_scratch(table(5, 9), &data, &test, &c).unwrap();
    let bits = |o: &ian_core::training::TrainOutcome| -> Vec<(u64, u64, Option<u64>)> {
        o.history.epochs.iter().map(|r| (r.loss.to_bits(), r.train_acc.to_bits(), r.test_acc.map(f64::to_bits))).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.history.to_tsv(), b.history.to_tsv());
    assert_eq!(a.params, b.params);

    let other = TrainConfig { seed: 2, ..c };
    let d = train_from_scratch(table(5, 9), &data, &test, &other).unwrap();
    assert_ne!(bits(&a), bits(&d));
}

#[test]
fn worker_count_does_not_change_results() {
    let data = separable_set(20, 6);
    let c = config(ModelVariant::Ian, 5, 4);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train_from_scratch(table(4, 1), &data, &[], &c).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.params, four.params);
    assert_eq!(one.history.to_tsv(), four.history.to_tsv());
}

#[test]
fn frozen_embeddings_are_bit_unchanged() {
    let data = separable_set(20, 7);
    let c = TrainConfig { freeze_embeddings: true, ..config(ModelVariant::Ian, 4, 3) };
    let emb = table(4, 3);
    let out = train_from_scratch(emb.clone(), &data, &[], &c).unwrap();
    assert_eq!(out.params.embeddings.matrix, emb.matrix);
    assert_ne!(out.params.w_l, ian_core::model::IanParams::init(&c.model, emb, &mut Rng::new(c.seed)).unwrap().w_l);
}

#[test]
fn every_variant_trains_on_the_separable_set() {
    let data = separable_set(20, 8);
    for v in ModelVariant::ALL {
        let out = train_from_scratch(table(8, 4), &data, &data, &TrainConfig { dropout: 0.0, ..config(v, 8, 30) }).unwrap();
        let acc = out.final_train.as_ref().unwrap().accuracy;
        if v == ModelVariant::Majority {
            assert!(out.history.epochs.is_empty());
            assert!((acc - 7.0 / 20.0).abs() < 1e-12);
        } else {
            let e = &out.history.epochs;
            assert_eq!(e.len(), 30);
            assert!(e[29].loss < e[0].loss, "{v}: {} -> {}", e[0].loss, e[29].loss);
        }
    }
}

#[test]
fn continued_training_from_given_parameters() {
    let data = separable_set(20, 9);
    let c = config(ModelVariant::Ian, 4, 2);
    let first = train_from_scratch(table(4, 1), &data, &[], &c).unwrap();
    let zero_lr = TrainConfig { learning_rate: 0.0, momentum: 0.0, ..c };
    let again = train(first.params.clone(), &data, &[], &zero_lr).unwrap();
    assert_eq!(again.params, first.params);
}
