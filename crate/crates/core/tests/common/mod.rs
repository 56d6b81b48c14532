#![allow(dead_code)]

pub mod oracle;
pub mod synthetic;

use ian_core::embeddings::EmbeddingTable;
use ian_core::model::{IanParams, Instance, ModelConfig, ModelVariant};
use ian_core::numerics::{Rng, SlotKind};

/// Random model with nonzero biases.
pub fn random_model(variant: ModelVariant, vocab: usize, embed: usize, hidden: usize, seed: u64) -> IanParams {
    let mut rng = Rng::new(seed);
    let table = EmbeddingTable::random(vocab, embed, 0.8, &mut rng);
    let config = ModelConfig { variant, hidden_dim: hidden, tie_attention: false, tie_lstm: false, init_range: 0.8 };
    let mut p = IanParams::init(&config, table, &mut rng).unwrap();
    for (_, s) in p.named_slots_mut() {
        if s.kind == SlotKind::Bias {
            for x in s.data.iter_mut() {
                *x = rng.uniform(-0.5, 0.5);
            }
        }
    }
    p
}

/// Context of `n` non-PAD tokens with the target copied from a random run.
pub fn random_instance(vocab: usize, n: usize, m: usize, rng: &mut Rng) -> Instance {
    let context: Vec<usize> = (0..n).map(|_| 1 + rng.below(vocab - 1)).collect();
    let start = rng.below(n - m + 1);
    Instance {
        id: "rand".into(),
        target: context[start..start + m].to_vec(),
        context,
        span: Some((start, start + m)),
        label: Some(rng.below(3)),
    }
}
