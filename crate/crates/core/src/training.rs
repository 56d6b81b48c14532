//! Loss, full-model backpropagation, momentum updates and the training loop.
//!
//! The objective for one batch is the mean cross-entropy plus
//! `λ_r · Σθ²` over the regularized parameters: every weight matrix, and the
//! embedding rows used by the batch when embeddings are trainable. Biases
//! and the PAD row are never regularized.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::attention::{attend_backward_into, average_pool_backward, AttentionParams};
use crate::embeddings::{EmbeddingTable, PAD};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::lstm::{lstm_backward_into, LstmParams};
use crate::model::{forward, majority_label, BranchTrace, ForwardTrace, IanParams, Instance, ModelConfig, ModelVariant};
use crate::numerics::{Matrix, Rng, SlotKind, Vector};
use crate::NUM_CLASSES;

/// Probabilities below this are clamped before taking the log.
pub const MIN_PROB: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub learning_rate: f64,
    /// Fraction of the previous update added to the current one.
    pub momentum: f64,
    /// L2 coefficient `λ_r`.
    pub l2: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Rescale the batch gradient to at most this global norm.
    pub clip_norm: Option<f64>,
    pub freeze_embeddings: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            learning_rate: 0.01,
            momentum: 0.9,
            l2: 1e-5,
            dropout: 0.5,
            epochs: 25,
            batch_size: 32,
            seed: 1,
            clip_norm: None,
            freeze_embeddings: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::Invalid(format!("l2 must be >= 0, got {}", self.l2)));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be >= 1".into()));
        }
        if self.learning_rate < 0.0 || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Invalid(format!(
                "need learning_rate >= 0 and momentum in [0, 1), got {} / {}",
                self.learning_rate, self.momentum
            )));
        }
        if let Some(c) = self.clip_norm {
            if c <= 0.0 {
                return Err(Error::Invalid(format!("clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// ∂J/∂Θ. Dense parts mirror the parameters; embedding gradients are kept
/// per touched row.
#[derive(Clone, Debug, PartialEq)]
pub struct GradSet {
    /// Same layout as the parameters; its embedding table has no columns.
    pub dense: IanParams,
    pub embeddings: BTreeMap<usize, Vector>,
}

fn zero_params_like(p: &IanParams) -> IanParams {
    let mut z = p.clone();
    z.embeddings = EmbeddingTable::new(Matrix::zeros(0, 0), false);
    for (_, s) in z.named_slots_mut() {
        s.data.iter_mut().for_each(|x| *x = 0.0);
    }
    z
}

impl GradSet {
    pub fn zeros_like(p: &IanParams) -> Self {
        GradSet { dense: zero_params_like(p), embeddings: BTreeMap::new() }
    }

    fn embedding_row(&mut self, row: usize, dim: usize) -> &mut Vector {
        self.embeddings.entry(row).or_insert_with(|| Vector::zeros(dim))
    }

    pub fn add_assign(&mut self, other: &GradSet) -> Result<()> {
        let theirs = other.dense.named_slots();
        let mine = self.dense.named_slots_mut();
        if theirs.len() != mine.len() {
            return Err(Error::shape("GradSet::add_assign", mine.len(), theirs.len()));
        }
        for ((_, a), (_, b)) in mine.into_iter().zip(theirs) {
            for (x, y) in a.data.iter_mut().zip(b.data) {
                *x += y;
            }
        }
        for (&row, g) in &other.embeddings {
            let dim = g.len();
            self.embedding_row(row, dim).axpy(1.0, g)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for (_, slot) in self.dense.named_slots_mut() {
            slot.data.iter_mut().for_each(|x| *x *= s);
        }
        for g in self.embeddings.values_mut() {
            g.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        let dense: f64 = self.dense.named_slots().iter().map(|(_, s)| s.data.iter().map(|x| x * x).sum::<f64>()).sum();
        dense + self.embeddings.values().map(Vector::sq_norm).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.dense.named_slots().iter().all(|(_, s)| s.data.iter().all(|x| x.is_finite()))
            && self.embeddings.values().all(Vector::is_finite)
    }
}

/// Momentum state; same layout as the parameters, embeddings dense.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    pub dense: IanParams,
    pub embeddings: Matrix,
}

impl Velocity {
    pub fn zeros_like(p: &IanParams) -> Self {
        Velocity { dense: zero_params_like(p), embeddings: Matrix::zeros(p.embeddings.vocab_size(), p.embeddings.dim()) }
    }
}

/// Cross-entropy of `y` against `gold` plus `l2 · Σθ²` over `regularized`.
pub fn loss(y: &[f64], gold: usize, regularized: &[&[f64]], l2: f64) -> Result<f64> {
    if gold >= y.len() {
        return Err(Error::OutOfRange { what: "class", index: gold, size: y.len() });
    }
    let mut p = y[gold];
    if p < MIN_PROB {
        log::warn!("gold-class probability {p:e} clamped to {MIN_PROB:e}");
        p = MIN_PROB;
    }
    let penalty: f64 = regularized.iter().map(|s| s.iter().map(|x| x * x).sum::<f64>()).sum();
    Ok(-p.ln() + l2 * penalty)
}

/// Embedding rows read by a forward pass (PAD never appears).
pub fn used_rows(trace: &ForwardTrace) -> BTreeSet<usize> {
    trace.context.iter().chain(trace.target.iter()).flat_map(|b| b.tokens.iter().copied()).filter(|&t| t != PAD).collect()
}

/// Arrays entering the L2 term when `rows` are the embedding rows in play.
pub fn regularized_slices<'a>(p: &'a IanParams, rows: &BTreeSet<usize>) -> Vec<&'a [f64]> {
    let mut out: Vec<&[f64]> = p.named_slots().into_iter().filter(|(_, s)| s.kind == SlotKind::Weight).map(|(_, s)| s.data).collect();
    if p.embeddings.trainable {
        out.extend(rows.iter().filter(|&&r| r != PAD).map(|&r| p.embeddings.matrix.row(r)));
    }
    out
}

/// Objective of a single instance: the value whose gradient
/// [`backward_full`] computes.
pub fn instance_loss(p: &IanParams, trace: &ForwardTrace, gold: usize, l2: f64) -> Result<f64> {
    let rows = used_rows(trace);
    loss(&trace.y, gold, &regularized_slices(p, &rows), l2)
}

/// Adds `2·l2·θ` for every regularized parameter.
pub fn add_l2(p: &IanParams, grads: &mut GradSet, rows: &BTreeSet<usize>, l2: f64) -> Result<()> {
    if l2 == 0.0 {
        return Ok(());
    }
    for ((_, g), (_, s)) in grads.dense.named_slots_mut().into_iter().zip(p.named_slots()) {
        if s.kind == SlotKind::Weight {
            for (gx, x) in g.data.iter_mut().zip(s.data) {
                *gx += 2.0 * l2 * x;
            }
        }
    }
    if p.embeddings.trainable {
        let dim = p.embeddings.dim();
        for &r in rows.iter().filter(|&&r| r != PAD) {
            let theta = Vector::from_vec(p.embeddings.row(r)?.to_vec());
            grads.embedding_row(r, dim).axpy(2.0 * l2, &theta)?;
        }
    }
    Ok(())
}

fn tgt_lstm_grads(g: &mut IanParams) -> &mut LstmParams {
    match g.tgt_lstm {
        Some(ref mut l) => l,
        None => &mut g.ctx_lstm,
    }
}

fn ctx_attn_grads(g: &mut IanParams) -> Result<&mut AttentionParams> {
    g.ctx_attn.as_mut().ok_or_else(|| Error::Invalid("gradient mirror lacks context attention".into()))
}

fn tgt_attn_grads(g: &mut IanParams) -> Result<&mut AttentionParams> {
    match g.tgt_attn {
        Some(ref mut a) => Ok(a),
        None => ctx_attn_grads(g),
    }
}

fn accumulate_inputs(grads: &mut GradSet, table: &EmbeddingTable, tokens: &[usize], d_inputs: &[Vector]) -> Result<()> {
    if !table.trainable {
        return Ok(());
    }
    for (&t, d) in tokens.iter().zip(d_inputs) {
        if t != PAD {
            grads.embedding_row(t, table.dim()).axpy(1.0, d)?;
        }
    }
    Ok(())
}

fn branch<'a>(b: &'a Option<BranchTrace>, what: &'static str) -> Result<&'a BranchTrace> {
    b.as_ref().ok_or_else(|| Error::Invalid(format!("forward trace lacks the {what} branch")))
}

fn backprop_lstm(
    lstm: &LstmParams,
    grads_lstm: impl FnOnce(&mut GradSet) -> &mut LstmParams,
    grads: &mut GradSet,
    table: &EmbeddingTable,
    b: &BranchTrace,
    d_hiddens: &[Vector],
) -> Result<()> {
    let d_inputs = lstm_backward_into(lstm, &b.caches, d_hiddens, grads_lstm(grads))?;
    accumulate_inputs(grads, table, &b.tokens, &d_inputs)
}

/// ∂J/∂Θ for one instance, `J = -log y[gold] + l2·Σθ²`.
///
/// The dropout mask recorded in the trace is applied in the backward pass
/// exactly as in the forward pass.
pub fn backward_full(p: &IanParams, trace: &ForwardTrace, gold: usize, l2: f64) -> Result<GradSet> {
    if trace.variant != p.variant {
        return Err(Error::Invalid(format!("trace is from {} but parameters are {}", trace.variant, p.variant)));
    }
    if gold >= NUM_CLASSES {
        return Err(Error::OutOfRange { what: "class", index: gold, size: NUM_CLASSES });
    }
    let mut grads = GradSet::zeros_like(p);
    if p.variant == ModelVariant::Majority {
        return Ok(grads);
    }
    if trace.d_dropped.len() != p.w_l.cols() {
        return Err(Error::shape("backward_full features", p.w_l.cols(), trace.d_dropped.len()));
    }

    // softmax + cross-entropy, then tanh
    let mut dz = trace.y.clone();
    dz[gold] -= 1.0;
    for (g, x) in dz.iter_mut().zip(trace.x.iter()) {
        *g *= 1.0 - x * x;
    }
    grads.dense.w_l.add_outer(1.0, &dz, &trace.d_dropped)?;
    grads.dense.b_l.axpy(1.0, &dz)?;
    let mut dd = p.w_l.matvec_t(&dz)?;
    if let Some(mask) = &trace.dropout {
        dd = dd.mul(mask)?;
    }

    let h = p.hidden_dim();
    let table = &p.embeddings;
    let split = |v: &Vector| (Vector::from_vec(v[..h].to_vec()), Vector::from_vec(v[h..].to_vec()));

    match p.variant {
        ModelVariant::Majority => unreachable!(),
        ModelVariant::Ian | ModelVariant::NoInteraction | ModelVariant::Target2Content => {
            let ctx = branch(&trace.context, "context")?;
            let tgt = branch(&trace.target, "target")?;
            let (d_cr, d_tr) = split(&dd);
            let mut d_c_avg = Vector::zeros(h);
            let mut d_t_avg = Vector::zeros(h);

            let alpha = trace.alpha.as_ref().ok_or_else(|| Error::Invalid("trace lacks α".into()))?;
            let ctx_attn = p.ctx_attn.as_ref().ok_or_else(|| Error::Invalid("missing context attention".into()))?;
            let (mut d_hc, d_q) = attend_backward_into(ctx_attn, alpha, &d_cr, ctx_attn_grads(&mut grads.dense)?)?;
            if p.variant == ModelVariant::NoInteraction {
                d_c_avg.axpy(1.0, &d_q)?;
            } else {
                d_t_avg.axpy(1.0, &d_q)?;
            }

            let mut d_ht = vec![Vector::zeros(h); tgt.caches.len()];
            if p.variant == ModelVariant::Target2Content {
                d_t_avg.axpy(1.0, &d_tr)?;
            } else {
                let beta = trace.beta.as_ref().ok_or_else(|| Error::Invalid("trace lacks β".into()))?;
                let tgt_attn = p.tgt_attn.as_ref().unwrap_or(ctx_attn);
                let (dh, dq) = attend_backward_into(tgt_attn, beta, &d_tr, tgt_attn_grads(&mut grads.dense)?)?;
                d_ht = dh;
                if p.variant == ModelVariant::NoInteraction {
                    d_t_avg.axpy(1.0, &dq)?;
                } else {
                    d_c_avg.axpy(1.0, &dq)?;
                }
            }

            for (d, share) in d_hc.iter_mut().zip(average_pool_backward(&d_c_avg, ctx.caches.len())) {
                d.axpy(1.0, &share)?;
            }
            for (d, share) in d_ht.iter_mut().zip(average_pool_backward(&d_t_avg, tgt.caches.len())) {
                d.axpy(1.0, &share)?;
            }
            backprop_lstm(&p.ctx_lstm, |g| &mut g.dense.ctx_lstm, &mut grads, table, ctx, &d_hc)?;
            backprop_lstm(p.tgt_lstm(), |g| tgt_lstm_grads(&mut g.dense), &mut grads, table, tgt, &d_ht)?;
        }
        ModelVariant::NoTarget => {
            let ctx = branch(&trace.context, "context")?;
            let tgt = branch(&trace.target, "target")?;
            let alpha = trace.alpha.as_ref().ok_or_else(|| Error::Invalid("trace lacks α".into()))?;
            let ctx_attn = p.ctx_attn.as_ref().ok_or_else(|| Error::Invalid("missing context attention".into()))?;
            let (d_hc, d_q) = attend_backward_into(ctx_attn, alpha, &dd, ctx_attn_grads(&mut grads.dense)?)?;
            let d_emb = average_pool_backward(&d_q, tgt.tokens.len());
            accumulate_inputs(&mut grads, table, &tgt.tokens, &d_emb)?;
            backprop_lstm(&p.ctx_lstm, |g| &mut g.dense.ctx_lstm, &mut grads, table, ctx, &d_hc)?;
        }
        ModelVariant::LstmAvg => {
            let ctx = branch(&trace.context, "context")?;
            let d_hc = average_pool_backward(&dd, ctx.caches.len());
            backprop_lstm(&p.ctx_lstm, |g| &mut g.dense.ctx_lstm, &mut grads, table, ctx, &d_hc)?;
        }
        ModelVariant::TdLstm => {
            let left = branch(&trace.context, "left")?;
            let right = branch(&trace.target, "right")?;
            let (d_left, d_right) = split(&dd);
            let mut d_hl = vec![Vector::zeros(h); left.caches.len()];
            *d_hl.last_mut().expect("non-empty") = d_left;
            let mut d_hr = vec![Vector::zeros(h); right.caches.len()];
            *d_hr.last_mut().expect("non-empty") = d_right;
            backprop_lstm(&p.ctx_lstm, |g| &mut g.dense.ctx_lstm, &mut grads, table, left, &d_hl)?;
            backprop_lstm(p.tgt_lstm(), |g| tgt_lstm_grads(&mut g.dense), &mut grads, table, right, &d_hr)?;
        }
    }

    add_l2(p, &mut grads, &used_rows(trace), l2)?;
    Ok(grads)
}

/// Classical momentum: `v ← μ·v + lr·g`, `θ ← θ − v`.
pub fn momentum_step(p: &mut IanParams, grads: &GradSet, vel: &mut Velocity, lr: f64, mu: f64) -> Result<()> {
    {
        let gs = grads.dense.named_slots();
        let vs = vel.dense.named_slots_mut();
        let ps = p.named_slots_mut();
        if gs.len() != ps.len() || vs.len() != ps.len() {
            return Err(Error::shape("momentum_step", ps.len(), format!("{} grads / {} velocities", gs.len(), vs.len())));
        }
        for (((_, theta), (_, g)), (_, v)) in ps.into_iter().zip(gs).zip(vs) {
            if theta.data.len() != g.data.len() || theta.data.len() != v.data.len() {
                return Err(Error::shape("momentum_step slot", theta.name, g.name));
            }
            for ((t, &gx), vx) in theta.data.iter_mut().zip(g.data).zip(v.data.iter_mut()) {
                *vx = mu * *vx + lr * gx;
                *t -= *vx;
            }
        }
    }
    if !p.embeddings.trainable {
        return Ok(());
    }
    let table = &mut p.embeddings.matrix;
    if vel.embeddings.shape() != table.shape() {
        return Err(Error::shape("momentum_step embeddings", &*table, &vel.embeddings));
    }
    for r in 1..table.rows() {
        let g = grads.embeddings.get(&r);
        let v = vel.embeddings.row_mut(r);
        if g.is_none() && v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let theta = table.row_mut(r);
        for j in 0..theta.len() {
            let gx = g.map_or(0.0, |g| g[j]);
            v[j] = mu * v[j] + lr * gx;
            theta[j] -= v[j];
        }
    }
    Ok(())
}

/// Inverted-dropout mask: 0 with probability `rate`, else `1/(1−rate)`.
pub fn make_dropout_mask(rng: &mut Rng, len: usize, rate: f64) -> Result<Vector> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Invalid(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if rate == 0.0 {
        return Ok(Vector::filled(len, 1.0));
    }
    let keep = 1.0 / (1.0 - rate);
    Ok(Vector::from_vec((0..len).map(|_| if rng.unit() < rate { 0.0 } else { keep }).collect()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    /// Tab-separated table with a header row; floats use the shortest
    /// round-trip representation, missing test accuracy is `-`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\tloss\ttrain_acc\ttest_acc\n");
        for r in &self.epochs {
            let test = r.test_acc.map_or("-".to_string(), |a| a.to_string());
            out.push_str(&format!("{}\t{}\t{}\t{}\n", r.epoch, r.loss, r.train_acc, test));
        }
        out
    }
}

/// Parameters at the epoch with the best test accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct BestCheckpoint {
    pub epoch: usize,
    pub test_acc: f64,
    pub params: IanParams,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: IanParams,
    pub history: History,
    pub best: Option<BestCheckpoint>,
    pub final_train: Option<EvalReport>,
    pub final_test: Option<EvalReport>,
}

fn gold(inst: &Instance) -> Result<usize> {
    inst.label.ok_or_else(|| Error::Invalid(format!("instance {} has no label", inst.id)))
}

/// Initializes parameters from `config.model` and trains them.
pub fn train_from_scratch(
    embeddings: EmbeddingTable,
    train_set: &[Instance],
    test_set: &[Instance],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut rng = Rng::new(config.seed);
    let mut embeddings = embeddings;
    embeddings.trainable = !config.freeze_embeddings;
    let params = IanParams::init(&config.model, embeddings, &mut rng)?;
    train_with_rng(params, train_set, test_set, config, &mut rng)
}

pub fn train(params: IanParams, train_set: &[Instance], test_set: &[Instance], config: &TrainConfig) -> Result<TrainOutcome> {
    let mut rng = Rng::new(config.seed);
    train_with_rng(params, train_set, test_set, config, &mut rng)
}

fn train_with_rng(
    mut params: IanParams,
    train_set: &[Instance],
    test_set: &[Instance],
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    params.validate()?;
    if config.freeze_embeddings {
        params.embeddings.trainable = false;
    }
    let golds = train_set.iter().map(gold).collect::<Result<Vec<usize>>>()?;

    let mut history = History::default();
    let mut best: Option<BestCheckpoint> = None;

    if params.variant == ModelVariant::Majority {
        params.majority_label = majority_label(golds.iter().copied());
        let final_train = Some(evaluate(&params, train_set)?);
        let final_test = if test_set.is_empty() { None } else { Some(evaluate(&params, test_set)?) };
        return Ok(TrainOutcome { params, history, best, final_train, final_test });
    }

    let feature_dim = params.w_l.cols();
    let mut vel = Velocity::zeros_like(&params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut final_train = None;
    let mut final_test = None;

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let masks = batch
                .iter()
                .map(|_| (config.dropout > 0.0).then(|| make_dropout_mask(rng, feature_dim, config.dropout)).transpose())
                .collect::<Result<Vec<Option<Vector>>>>()?;

            let per_instance = batch
                .par_iter()
                .zip(masks.par_iter())
                .map(|(&i, mask)| {
                    let trace = forward(&params, &train_set[i], mask.as_ref())?;
                    let ce = loss(&trace.y, golds[i], &[], 0.0)?;
                    let g = backward_full(&params, &trace, golds[i], 0.0)?;
                    Ok((ce, used_rows(&trace), g))
                })
                .collect::<Result<Vec<_>>>()?;

            // fixed-order reduction keeps results independent of thread count
            let mut grads = GradSet::zeros_like(&params);
            let mut rows = BTreeSet::new();
            let mut ce_sum = 0.0;
            for (ce, r, g) in &per_instance {
                ce_sum += ce;
                rows.extend(r.iter().copied());
                grads.add_assign(g)?;
            }
            let n = batch.len() as f64;
            grads.scale(1.0 / n);
            add_l2(&params, &mut grads, &rows, config.l2)?;
            let batch_loss = ce_sum / n
                + config.l2 * regularized_slices(&params, &rows).iter().map(|s| s.iter().map(|x| x * x).sum::<f64>()).sum::<f64>();
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite { epoch, step, loss: batch_loss });
            }
            if let Some(max) = config.clip_norm {
                let norm = grads.sq_norm().sqrt();
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            momentum_step(&mut params, &grads, &mut vel, config.learning_rate, config.momentum)?;
            total += batch_loss * n;
        }

        let train_report = evaluate(&params, train_set)?;
        let test_report = if test_set.is_empty() { None } else { Some(evaluate(&params, test_set)?) };
        let record = EpochRecord {
            epoch,
            loss: total / train_set.len() as f64,
            train_acc: train_report.accuracy,
            test_acc: test_report.as_ref().map(|r| r.accuracy),
        };
        log::info!(
            "epoch {:>3}  loss {:.6}  train acc {:.4}  test acc {}",
            record.epoch,
            record.loss,
            record.train_acc,
            record.test_acc.map_or("-".to_string(), |a| format!("{a:.4}"))
        );
        if let Some(acc) = record.test_acc {
            if best.as_ref().is_none_or(|b| acc > b.test_acc) {
                best = Some(BestCheckpoint { epoch, test_acc: acc, params: params.clone() });
            }
        }
        history.epochs.push(record);
        final_train = Some(train_report);
        final_test = test_report;
    }

    Ok(TrainOutcome { params, history, best, final_train, final_test })
}
