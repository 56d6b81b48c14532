use ian_core::model::Instance;
use ian_core::numerics::Rng;

pub const SENTIMENT_TOKENS: [usize; 3] = [1, 2, 3];
pub const FILLERS: usize = 10;
pub const VOCAB: usize = 4 + FILLERS;

/// Label `k` is carried by the presence of token `SENTIMENT_TOKENS[k]`
/// somewhere in an otherwise random context; the target is a filler word.
pub fn separable_set(n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let label = i % 3;
            let len = 4 + rng.below(3);
            let mut context: Vec<usize> = (0..len).map(|_| 4 + rng.below(FILLERS)).collect();
            let pos = rng.below(len);
            context[pos] = SENTIMENT_TOKENS[label];
            let t = (pos + 1 + rng.below(len - 1)) % len;
            Instance { id: format!("syn{i}"), target: vec![context[t]], context, span: Some((t, t + 1)), label: Some(label) }
        })
        .collect()
}
