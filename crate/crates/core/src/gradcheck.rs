//! Central-difference verification of [`backward_full`].
//!
//! Every coordinate of every parameter group (the embedding rows an
//! instance reads, both LSTMs, both attention layers and the classifier) is
//! perturbed by `±eps`; the resulting slope of the instance objective is
//! compared to the analytic gradient with
//! `|a − n| / max(1e-8, |a| + |n|)`.

use std::collections::BTreeMap;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{forward, ForwardTrace, IanParams, Instance, ModelConfig, ModelVariant};
use crate::numerics::{Rng, Vector};
use crate::training::{backward_full, instance_loss, GradSet};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Absolute discrepancy explained by rounding in `(J(θ+ε) − J(θ−ε)) / 2ε`
/// at `eps = 1e-5` for objectives of order one.
pub const FD_RESOLUTION: f64 = 1e-10;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (1e-8f64).max(analytic.abs() + numeric.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub slot: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

impl Coordinate {
    /// True when the gradient is so small that the central difference cannot
    /// resolve it, so a large relative error says nothing about the backward
    /// pass.
    pub fn below_resolution(&self) -> bool {
        (self.analytic - self.numeric).abs() <= FD_RESOLUTION && self.analytic.abs() + self.numeric.abs() < 1e-6
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupReport {
    pub group: String,
    pub checked: usize,
    pub worst: Option<Coordinate>,
    /// Coordinates above the tolerance.
    pub failures: Vec<Coordinate>,
}

impl GroupReport {
    pub fn worst_rel_error(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |c| c.rel_error)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub type GradFn<'a> = dyn Fn(&IanParams, &ForwardTrace, usize, f64) -> Result<GradSet> + 'a;

/// Compares `grad_fn` against central differences of the instance loss.
///
/// `mask` is the dropout mask held fixed during the check.
pub fn check_gradients(
    p: &IanParams,
    inst: &Instance,
    mask: Option<&Vector>,
    l2: f64,
    eps: f64,
    tolerance: f64,
    grad_fn: &GradFn<'_>,
) -> Result<Vec<GroupReport>> {
    let gold = inst.label.ok_or_else(|| Error::Invalid(format!("instance {} has no label", inst.id)))?;
    if p.variant == ModelVariant::Majority {
        return Ok(Vec::new());
    }
    let trace = forward(p, inst, mask)?;
    let grads = grad_fn(p, &trace, gold, l2)?;
    let objective = |q: &IanParams| -> Result<f64> { instance_loss(q, &forward(q, inst, mask)?, gold, l2) };

    let mut groups: BTreeMap<&'static str, GroupReport> = BTreeMap::new();
    let mut record = |group: &'static str, coord: Coordinate| {
        let rep =
            groups.entry(group).or_insert_with(|| GroupReport { group: group.to_string(), checked: 0, worst: None, failures: Vec::new() });
        rep.checked += 1;
        if rep.worst.as_ref().is_none_or(|w| coord.rel_error > w.rel_error) {
            rep.worst = Some(coord.clone());
        }
        if coord.rel_error > tolerance || !coord.rel_error.is_finite() {
            rep.failures.push(coord);
        }
    };

    let analytic: Vec<(&'static str, &'static str, Vec<f64>)> =
        grads.dense.named_slots().into_iter().map(|(g, s)| (g, s.name, s.data.to_vec())).collect();
    if analytic.len() != p.named_slots().len() {
        return Err(Error::shape("gradient check", p.named_slots().len(), analytic.len()));
    }
    for (slot_idx, (group, name, values)) in analytic.iter().enumerate() {
        for (k, &a) in values.iter().enumerate() {
            let mut plus = p.clone();
            plus.named_slots_mut()[slot_idx].1.data[k] += eps;
            let mut minus = p.clone();
            minus.named_slots_mut()[slot_idx].1.data[k] -= eps;
            let numeric = (objective(&plus)? - objective(&minus)?) / (2.0 * eps);
            record(
                group,
                Coordinate { slot: format!("{group}.{name}"), index: k, analytic: a, numeric, rel_error: relative_error(a, numeric) },
            );
        }
    }

    if p.embeddings.trainable {
        let dim = p.embeddings.dim();
        for row in crate::training::used_rows(&trace) {
            let zero = Vector::zeros(dim);
            let a_row = grads.embeddings.get(&row).unwrap_or(&zero);
            for j in 0..dim {
                let mut plus = p.clone();
                let v = plus.embeddings.matrix.get(row, j);
                plus.embeddings.matrix.set(row, j, v + eps);
                let mut minus = p.clone();
                minus.embeddings.matrix.set(row, j, v - eps);
                let numeric = (objective(&plus)? - objective(&minus)?) / (2.0 * eps);
                record(
                    "embeddings",
                    Coordinate {
                        slot: format!("embeddings[{row}]"),
                        index: j,
                        analytic: a_row[j],
                        numeric,
                        rel_error: relative_error(a_row[j], numeric),
                    },
                );
            }
        }
    }

    Ok(groups.into_values().collect())
}

/// Shape and seed of a synthesized gradient-check problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub variant: ModelVariant,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub context_len: usize,
    pub target_len: usize,
    pub vocab_size: usize,
    pub seed: u64,
    pub init_range: f64,
    pub l2: f64,
    pub dropout: Option<f64>,
    pub tie_attention: bool,
    pub tie_lstm: bool,
    pub eps: f64,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            variant: ModelVariant::Ian,
            embed_dim: 3,
            hidden_dim: 3,
            context_len: 4,
            target_len: 2,
            vocab_size: 12,
            seed: 3,
            init_range: 1.0,
            l2: 0.0,
            dropout: None,
            tie_attention: false,
            tie_lstm: false,
            eps: DEFAULT_EPS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// A random model and a labeled instance whose target is a contiguous run
/// of the context.
pub fn synthesize(config: &GradCheckConfig) -> Result<(IanParams, Instance, Option<Vector>)> {
    if config.context_len == 0 || config.target_len == 0 || config.target_len > config.context_len {
        return Err(Error::Invalid(format!("need 0 < target_len <= context_len, got {} / {}", config.target_len, config.context_len)));
    }
    if config.vocab_size < 2 {
        return Err(Error::Invalid("vocab_size must be at least 2".into()));
    }
    let mut rng = Rng::new(config.seed);
    let table = EmbeddingTable::random(config.vocab_size, config.embed_dim, config.init_range, &mut rng);
    let model = ModelConfig {
        variant: config.variant,
        hidden_dim: config.hidden_dim,
        tie_attention: config.tie_attention,
        tie_lstm: config.tie_lstm,
        init_range: config.init_range,
    };
    let mut p = IanParams::init(&model, table, &mut rng)?;
    // nonzero biases so their gradients are exercised away from the origin
    for (_, s) in p.named_slots_mut() {
        if s.kind == crate::numerics::SlotKind::Bias {
            for x in s.data.iter_mut() {
                *x = rng.uniform(-config.init_range, config.init_range);
            }
        }
    }
    let context: Vec<usize> = (0..config.context_len).map(|_| 1 + rng.below(config.vocab_size - 1)).collect();
    let start = rng.below(config.context_len - config.target_len + 1);
    let end = start + config.target_len;
    let inst = Instance {
        id: format!("gradcheck-{}", config.seed),
        target: context[start..end].to_vec(),
        context,
        span: Some((start, end)),
        label: Some(rng.below(crate::NUM_CLASSES)),
    };
    let mask = match config.dropout {
        Some(rate) => Some(crate::training::make_dropout_mask(&mut rng, p.w_l.cols(), rate)?),
        None => None,
    };
    Ok((p, inst, mask))
}

/// Synthesizes a problem and checks [`backward_full`] on it.
pub fn run(config: &GradCheckConfig) -> Result<Vec<GroupReport>> {
    run_with(config, &backward_full)
}

pub fn run_with(config: &GradCheckConfig, grad_fn: &GradFn<'_>) -> Result<Vec<GroupReport>> {
    let (p, inst, mask) = synthesize(config)?;
    check_gradients(&p, &inst, mask.as_ref(), config.l2, config.eps, config.tolerance, grad_fn)
}
