//! Forward passes for IAN, its ablations and the baselines.
//!
//! All variants share the same building blocks ([`lstm`](crate::lstm),
//! [`attention`](crate::attention)) and record everything needed by the
//! backward pass in a [`ForwardTrace`].
//!
//! PAD tokens (index 0) are removed from both sequences before encoding.
//! For trailing padding this is exactly masking: the LSTM is causal, and
//! the removed positions would get no attention weight and no share of the
//! average.

use std::fmt;
use std::str::FromStr;

use crate::attention::{attend, average_pool, AttentionParams, AttentionTrace};
use crate::embeddings::{EmbeddingTable, PAD};
use crate::error::{Error, Result};
use crate::lstm::{lstm_forward, LstmParams, LstmStepCache};
use crate::numerics::{argmax, softmax_stable, uniform_init, Matrix, Rng, Slot, SlotMut, Slots, Vector};
use crate::NUM_CLASSES;

/// Which network to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Interactive attention: context attended by the target average and
    /// target attended by the context average.
    Ian,
    /// One context LSTM; attention query is the mean target embedding.
    NoTarget,
    /// Two LSTMs, each branch attended by its own average.
    NoInteraction,
    /// Context attended by the target average; target represented by its
    /// average hidden state.
    Target2Content,
    /// Mean of the context hidden states.
    LstmAvg,
    /// Left context + target and reversed target + right context, final
    /// hidden states concatenated.
    TdLstm,
    /// Most frequent training label.
    Majority,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 7] = [
        ModelVariant::Ian,
        ModelVariant::NoTarget,
        ModelVariant::NoInteraction,
        ModelVariant::Target2Content,
        ModelVariant::LstmAvg,
        ModelVariant::TdLstm,
        ModelVariant::Majority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Ian => "ian",
            ModelVariant::NoTarget => "no-target",
            ModelVariant::NoInteraction => "no-interaction",
            ModelVariant::Target2Content => "target2content",
            ModelVariant::LstmAvg => "lstm",
            ModelVariant::TdLstm => "td-lstm",
            ModelVariant::Majority => "majority",
        }
    }

    fn uses_target_lstm(self) -> bool {
        matches!(self, ModelVariant::Ian | ModelVariant::NoInteraction | ModelVariant::Target2Content | ModelVariant::TdLstm)
    }

    fn uses_context_attention(self) -> bool {
        matches!(self, ModelVariant::Ian | ModelVariant::NoTarget | ModelVariant::NoInteraction | ModelVariant::Target2Content)
    }

    fn uses_target_attention(self) -> bool {
        matches!(self, ModelVariant::Ian | ModelVariant::NoInteraction)
    }

    /// Width of the classifier input `d` for hidden size `hidden`.
    pub fn feature_dim(self, hidden: usize) -> usize {
        match self {
            ModelVariant::NoTarget | ModelVariant::LstmAvg => hidden,
            ModelVariant::Majority => 0,
            _ => 2 * hidden,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .or(match norm.as_str() {
                "lstm-avg" => Some(ModelVariant::LstmAvg),
                "tdlstm" => Some(ModelVariant::TdLstm),
                "notarget" => Some(ModelVariant::NoTarget),
                "nointeraction" => Some(ModelVariant::NoInteraction),
                "target-2-content" | "target-to-content" => Some(ModelVariant::Target2Content),
                _ => None,
            })
            .ok_or_else(|| Error::Invalid(format!("unknown model variant {s:?}")))
    }
}

/// One labeled (or unlabeled) example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    /// Token indices of the full sentence, target included.
    pub context: Vec<usize>,
    pub target: Vec<usize>,
    /// Token range `[start, end)` of this target occurrence in `context`.
    pub span: Option<(usize, usize)>,
    pub label: Option<usize>,
}

impl Instance {
    /// Context and target with PAD removed, span remapped.
    fn stripped(&self) -> Result<(Vec<usize>, Vec<usize>, Option<(usize, usize)>)> {
        if let Some((s, e)) = self.span {
            if s >= e || e > self.context.len() {
                return Err(Error::Invalid(format!(
                    "instance {}: span {s}..{e} outside context of {} tokens",
                    self.id,
                    self.context.len()
                )));
            }
        }
        let context: Vec<usize> = self.context.iter().copied().filter(|&t| t != PAD).collect();
        let target: Vec<usize> = self.target.iter().copied().filter(|&t| t != PAD).collect();
        if context.is_empty() {
            return Err(Error::Invalid(format!("instance {}: empty context", self.id)));
        }
        if target.is_empty() {
            return Err(Error::Invalid(format!("instance {}: empty target", self.id)));
        }
        let kept_before = |pos: usize| self.context[..pos].iter().filter(|&&t| t != PAD).count();
        let span = self.span.map(|(s, e)| (kept_before(s), kept_before(e))).filter(|(s, e)| s < e);
        Ok((context, target, span))
    }
}

/// Position of the first occurrence of `needle` inside `haystack`.
pub fn find_subsequence(haystack: &[usize], needle: &[usize]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub hidden_dim: usize,
    /// Share one `(W_a, b_a)` between the two attention directions.
    pub tie_attention: bool,
    /// Share one LSTM between the context and target branches.
    pub tie_lstm: bool,
    /// Weights are drawn from `U(-init_range, init_range)`; biases start at 0.
    pub init_range: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { variant: ModelVariant::Ian, hidden_dim: 300, tie_attention: false, tie_lstm: false, init_range: 0.1 }
    }
}

/// All learnable parameters. Optional parts are absent when the variant
/// does not use them or when they are tied to their context counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct IanParams {
    pub variant: ModelVariant,
    pub embeddings: EmbeddingTable,
    pub ctx_lstm: LstmParams,
    /// `None` with a target LSTM in use means it is tied to `ctx_lstm`.
    /// For TD-LSTM this is the right-to-left encoder.
    pub tgt_lstm: Option<LstmParams>,
    pub ctx_attn: Option<AttentionParams>,
    /// `None` with target attention in use means it is tied to `ctx_attn`.
    pub tgt_attn: Option<AttentionParams>,
    /// `C x feature_dim`.
    pub w_l: Matrix,
    pub b_l: Vector,
    /// Constant answer of the Majority baseline.
    pub majority_label: usize,
}

impl IanParams {
    pub fn init(config: &ModelConfig, embeddings: EmbeddingTable, rng: &mut Rng) -> Result<Self> {
        let variant = config.variant;
        let range = config.init_range;
        if variant == ModelVariant::Majority {
            let vocab = embeddings.vocab_size();
            return Ok(IanParams::majority(vocab, 0));
        }
        if config.hidden_dim == 0 {
            return Err(Error::Invalid("hidden_dim must be positive".into()));
        }
        let h = config.hidden_dim;
        let e = embeddings.dim();
        let ctx_lstm = LstmParams::init(h, e, range, rng);
        let tgt_lstm = (variant.uses_target_lstm() && !config.tie_lstm).then(|| LstmParams::init(h, e, range, rng));
        let query_dim = if variant == ModelVariant::NoTarget { e } else { h };
        let ctx_attn = variant.uses_context_attention().then(|| AttentionParams::init(h, query_dim, range, rng));
        let tgt_attn = (variant.uses_target_attention() && !config.tie_attention).then(|| AttentionParams::init(h, h, range, rng));
        let w_l = uniform_init(rng, NUM_CLASSES, variant.feature_dim(h), -range, range)?;
        Ok(IanParams {
            variant,
            embeddings,
            ctx_lstm,
            tgt_lstm,
            ctx_attn,
            tgt_attn,
            w_l,
            b_l: Vector::zeros(NUM_CLASSES),
            majority_label: 0,
        })
    }

    /// Parameter-free Majority model answering `label`.
    pub fn majority(vocab_size: usize, label: usize) -> Self {
        IanParams {
            variant: ModelVariant::Majority,
            embeddings: EmbeddingTable::new(Matrix::zeros(vocab_size, 0), false),
            ctx_lstm: LstmParams::zeros(0, 0),
            tgt_lstm: None,
            ctx_attn: None,
            tgt_attn: None,
            w_l: Matrix::zeros(NUM_CLASSES, 0),
            b_l: Vector::zeros(NUM_CLASSES),
            majority_label: label,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.ctx_lstm.hidden_dim()
    }

    pub fn tgt_lstm(&self) -> &LstmParams {
        self.tgt_lstm.as_ref().unwrap_or(&self.ctx_lstm)
    }

    pub fn tie_lstm(&self) -> bool {
        self.variant.uses_target_lstm() && self.tgt_lstm.is_none()
    }

    pub fn tie_attention(&self) -> bool {
        self.variant.uses_target_attention() && self.tgt_attn.is_none()
    }

    fn ctx_attn(&self) -> Result<&AttentionParams> {
        self.ctx_attn.as_ref().ok_or_else(|| Error::Invalid(format!("{} model has no context attention parameters", self.variant)))
    }

    fn tgt_attn(&self) -> Result<&AttentionParams> {
        match &self.tgt_attn {
            Some(a) => Ok(a),
            None => self.ctx_attn(),
        }
    }

    /// Checks that the parameter subset and shapes fit the variant.
    pub fn validate(&self) -> Result<()> {
        let v = self.variant;
        if v == ModelVariant::Majority {
            if self.majority_label >= NUM_CLASSES {
                return Err(Error::Invalid(format!("majority label {} out of range", self.majority_label)));
            }
            return Ok(());
        }
        self.ctx_lstm.validate()?;
        let h = self.hidden_dim();
        let e = self.embeddings.dim();
        if self.ctx_lstm.input_dim() != e {
            return Err(Error::shape("context LSTM input", e, self.ctx_lstm.input_dim()));
        }
        if let Some(t) = &self.tgt_lstm {
            if !v.uses_target_lstm() {
                return Err(Error::Invalid(format!("{v} model carries a target LSTM")));
            }
            t.validate()?;
            if (t.hidden_dim(), t.input_dim()) != (h, e) {
                return Err(Error::shape("target LSTM", format!("{h}x{e}"), format!("{}x{}", t.hidden_dim(), t.input_dim())));
            }
        }
        match (&self.ctx_attn, v.uses_context_attention()) {
            (None, true) => return Err(Error::Invalid(format!("{v} model needs context attention parameters"))),
            (Some(_), false) => return Err(Error::Invalid(format!("{v} model carries unused context attention"))),
            (Some(a), true) => {
                let q = if v == ModelVariant::NoTarget { e } else { h };
                if a.w_a.shape() != (h, q) {
                    return Err(Error::shape("context attention", format!("{h}x{q}"), &a.w_a));
                }
            }
            (None, false) => {}
        }
        if let Some(a) = &self.tgt_attn {
            if !v.uses_target_attention() {
                return Err(Error::Invalid(format!("{v} model carries unused target attention")));
            }
            if a.w_a.shape() != (h, h) {
                return Err(Error::shape("target attention", format!("{h}x{h}"), &a.w_a));
            }
        }
        let f = v.feature_dim(h);
        if self.w_l.shape() != (NUM_CLASSES, f) || self.b_l.len() != NUM_CLASSES {
            return Err(Error::shape("classifier", format!("{NUM_CLASSES}x{f}"), &self.w_l));
        }
        Ok(())
    }

    /// Non-embedding parameter arrays with their group name, in a fixed
    /// order shared with the gradient mirror.
    pub fn named_slots(&self) -> Vec<(&'static str, Slot<'_>)> {
        let mut out: Vec<(&'static str, Slot<'_>)> = Vec::new();
        out.extend(self.ctx_lstm.slots().into_iter().map(|s| ("ctx_lstm", s)));
        if let Some(t) = &self.tgt_lstm {
            out.extend(t.slots().into_iter().map(|s| ("tgt_lstm", s)));
        }
        if let Some(a) = &self.ctx_attn {
            out.extend(a.slots().into_iter().map(|s| ("ctx_attn", s)));
        }
        if let Some(a) = &self.tgt_attn {
            out.extend(a.slots().into_iter().map(|s| ("tgt_attn", s)));
        }
        out.push(("classifier", Slot { name: "w_l", kind: crate::numerics::SlotKind::Weight, data: self.w_l.as_slice() }));
        out.push(("classifier", Slot { name: "b_l", kind: crate::numerics::SlotKind::Bias, data: self.b_l.as_slice() }));
        out
    }

    pub fn named_slots_mut(&mut self) -> Vec<(&'static str, SlotMut<'_>)> {
        let mut out: Vec<(&'static str, SlotMut<'_>)> = Vec::new();
        out.extend(self.ctx_lstm.slots_mut().into_iter().map(|s| ("ctx_lstm", s)));
        if let Some(t) = &mut self.tgt_lstm {
            out.extend(t.slots_mut().into_iter().map(|s| ("tgt_lstm", s)));
        }
        if let Some(a) = &mut self.ctx_attn {
            out.extend(a.slots_mut().into_iter().map(|s| ("ctx_attn", s)));
        }
        if let Some(a) = &mut self.tgt_attn {
            out.extend(a.slots_mut().into_iter().map(|s| ("tgt_attn", s)));
        }
        out.push(("classifier", SlotMut { name: "w_l", kind: crate::numerics::SlotKind::Weight, data: self.w_l.as_mut_slice() }));
        out.push(("classifier", SlotMut { name: "b_l", kind: crate::numerics::SlotKind::Bias, data: self.b_l.as_mut_slice() }));
        out
    }
}

/// Embeddings and LSTM states of one encoded sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchTrace {
    /// Token indices in the order they were fed (reversed for the TD-LSTM
    /// right branch).
    pub tokens: Vec<usize>,
    pub inputs: Vec<Vector>,
    /// Empty when the branch is not run through an LSTM.
    pub caches: Vec<LstmStepCache>,
}

impl BranchTrace {
    pub fn hiddens(&self) -> Vec<Vector> {
        self.caches.iter().map(|c| c.h.clone()).collect()
    }
}

/// Cached intermediates of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub variant: ModelVariant,
    /// Context branch; the left branch for TD-LSTM.
    pub context: Option<BranchTrace>,
    /// Target branch; the right branch for TD-LSTM; embeddings only for
    /// No-Target.
    pub target: Option<BranchTrace>,
    pub c_avg: Option<Vector>,
    pub t_avg: Option<Vector>,
    /// Context attention (α).
    pub alpha: Option<AttentionTrace>,
    /// Target attention (β).
    pub beta: Option<AttentionTrace>,
    /// Classifier features before dropout.
    pub d: Vector,
    pub dropout: Option<Vector>,
    /// Classifier input, `d ⊙ mask` when training.
    pub d_dropped: Vector,
    /// `tanh(W_l·d + b_l)`.
    pub x: Vector,
    pub y: Vector,
}

fn encode(lstm: &LstmParams, table: &EmbeddingTable, tokens: Vec<usize>) -> Result<BranchTrace> {
    let inputs = table.lookup(&tokens)?;
    let (_, caches) = lstm_forward(lstm, &inputs)?;
    Ok(BranchTrace { tokens, inputs, caches })
}

/// Runs the variant stored in `p`.
pub fn forward(p: &IanParams, inst: &Instance, dropout: Option<&Vector>) -> Result<ForwardTrace> {
    let (context, target, span) = inst.stripped()?;
    let v = p.variant;
    let table = &p.embeddings;

    let mut tr = ForwardTrace {
        variant: v,
        context: None,
        target: None,
        c_avg: None,
        t_avg: None,
        alpha: None,
        beta: None,
        d: Vector::default(),
        dropout: None,
        d_dropped: Vector::default(),
        x: Vector::default(),
        y: Vector::default(),
    };

    match v {
        ModelVariant::Majority => {
            let mut y = Vector::zeros(NUM_CLASSES);
            y[p.majority_label] = 1.0;
            tr.x = y.clone();
            tr.y = y;
            return Ok(tr);
        }
        ModelVariant::Ian | ModelVariant::NoInteraction | ModelVariant::Target2Content => {
            let ctx = encode(&p.ctx_lstm, table, context)?;
            let tgt = encode(p.tgt_lstm(), table, target)?;
            let hc = ctx.hiddens();
            let ht = tgt.hiddens();
            let c_avg = average_pool(&hc)?;
            let t_avg = average_pool(&ht)?;
            let (ctx_query, tgt_query) = match v {
                ModelVariant::NoInteraction => (&c_avg, &t_avg),
                _ => (&t_avg, &c_avg),
            };
            let alpha = attend(p.ctx_attn()?, &hc, ctx_query)?;
            let t_repr = if v == ModelVariant::Target2Content {
                t_avg.clone()
            } else {
                let beta = attend(p.tgt_attn()?, &ht, tgt_query)?;
                let pooled = beta.pooled.clone();
                tr.beta = Some(beta);
                pooled
            };
            tr.d = Vector::concat(&[&alpha.pooled, &t_repr]);
            tr.alpha = Some(alpha);
            tr.c_avg = Some(c_avg);
            tr.t_avg = Some(t_avg);
            tr.context = Some(ctx);
            tr.target = Some(tgt);
        }
        ModelVariant::NoTarget => {
            let ctx = encode(&p.ctx_lstm, table, context)?;
            let inputs = table.lookup(&target)?;
            let t_avg = average_pool(&inputs)?;
            let alpha = attend(p.ctx_attn()?, &ctx.hiddens(), &t_avg)?;
            tr.d = alpha.pooled.clone();
            tr.alpha = Some(alpha);
            tr.t_avg = Some(t_avg);
            tr.context = Some(ctx);
            tr.target = Some(BranchTrace { tokens: target, inputs, caches: Vec::new() });
        }
        ModelVariant::LstmAvg => {
            let ctx = encode(&p.ctx_lstm, table, context)?;
            let c_avg = average_pool(&ctx.hiddens())?;
            tr.d = c_avg.clone();
            tr.c_avg = Some(c_avg);
            tr.context = Some(ctx);
        }
        ModelVariant::TdLstm => {
            let (start, end) = match span {
                Some(s) => s,
                None => {
                    let s = find_subsequence(&context, &target)
                        .ok_or_else(|| Error::Invalid(format!("instance {}: target not found in context and no span given", inst.id)))?;
                    (s, s + target.len())
                }
            };
            let left_tokens = context[..end].to_vec();
            let right_tokens: Vec<usize> = context[start..].iter().rev().copied().collect();
            let left = encode(&p.ctx_lstm, table, left_tokens)?;
            let right = encode(p.tgt_lstm(), table, right_tokens)?;
            let hl = &left.caches.last().expect("non-empty").h;
            let hr = &right.caches.last().expect("non-empty").h;
            tr.d = Vector::concat(&[hl, hr]);
            tr.context = Some(left);
            tr.target = Some(right);
        }
    }

    tr.d_dropped = match dropout {
        Some(mask) => {
            if mask.len() != tr.d.len() {
                return Err(Error::shape("dropout mask", tr.d.len(), mask.len()));
            }
            tr.dropout = Some(mask.clone());
            tr.d.mul(mask)?
        }
        None => tr.d.clone(),
    };
    let mut z = p.w_l.matvec(&tr.d_dropped)?;
    z.axpy(1.0, &p.b_l)?;
    tr.x = z.tanh();
    tr.y = softmax_stable(&tr.x)?;
    Ok(tr)
}

/// Full IAN forward pass; errors if `p` holds another variant.
pub fn forward_ian(p: &IanParams, inst: &Instance, dropout: Option<&Vector>) -> Result<ForwardTrace> {
    forward_variant(ModelVariant::Ian, p, inst, dropout)
}

pub fn forward_variant(variant: ModelVariant, p: &IanParams, inst: &Instance, dropout: Option<&Vector>) -> Result<ForwardTrace> {
    if p.variant != variant {
        return Err(Error::Invalid(format!("parameters are for {} but {} was requested", p.variant, variant)));
    }
    forward(p, inst, dropout)
}

/// Most probable class, lowest index on ties.
pub fn predict(p: &IanParams, inst: &Instance) -> Result<usize> {
    argmax(&forward(p, inst, None)?.y)
}

/// Most frequent label, lowest index on ties.
pub fn majority_label(labels: impl IntoIterator<Item = usize>) -> usize {
    let mut counts = [0usize; NUM_CLASSES];
    for l in labels {
        counts[l] += 1;
    }
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    argmax(&as_f).expect("NUM_CLASSES > 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(variant: ModelVariant, seed: u64) -> IanParams {
        let mut rng = Rng::new(seed);
        let table = EmbeddingTable::random(12, 4, 0.5, &mut rng);
        let config = ModelConfig { variant, hidden_dim: 3, init_range: 0.5, ..Default::default() };
        IanParams::init(&config, table, &mut rng).unwrap()
    }

    fn inst(context: &[usize], target: &[usize], span: Option<(usize, usize)>) -> Instance {
        Instance { id: "t".into(), context: context.to_vec(), target: target.to_vec(), span, label: Some(0) }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        }
        assert_eq!("TD_LSTM".parse::<ModelVariant>().unwrap(), ModelVariant::TdLstm);
        assert!("ae-lstm".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn zero_model_is_uniform_and_predicts_class_zero() {
        let mut p = small(ModelVariant::Ian, 1);
        p.embeddings.matrix = Matrix::zeros(12, 4);
        for (_, s) in p.named_slots_mut() {
            s.data.iter_mut().for_each(|x| *x = 0.0);
        }
        let i = inst(&[1, 2, 3, 4], &[2, 3], Some((1, 3)));
        let t = forward_ian(&p, &i, None).unwrap();
        assert!(t.alpha.as_ref().unwrap().weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
        assert!(t.beta.as_ref().unwrap().weights.iter().all(|&w| (w - 0.5).abs() < 1e-15));
        assert!(t.d.iter().all(|&x| x == 0.0));
        assert!(t.y.iter().all(|&y| (y - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(predict(&p, &i).unwrap(), 0);
    }

    #[test]
    fn every_variant_outputs_a_distribution() {
        let i = inst(&[1, 2, 3, 4, 5], &[3, 4], Some((2, 4)));
        for v in ModelVariant::ALL {
            let p = small(v, 7);
            p.validate().unwrap();
            let t = forward(&p, &i, None).unwrap();
            assert!((t.y.sum() - 1.0).abs() < 1e-10, "{v}");
            assert_eq!(t.d.len(), v.feature_dim(3), "{v}");
        }
    }

    #[test]
    fn empty_sequences_are_rejected_by_name() {
        let p = small(ModelVariant::Ian, 2);
        let mut i = inst(&[], &[1], None);
        i.id = "s42:0".into();
        let err = forward(&p, &i, None).unwrap_err().to_string();
        assert!(err.contains("s42:0") && err.contains("context"), "{err}");
        let err = forward(&p, &inst(&[1], &[PAD], None), None).unwrap_err().to_string();
        assert!(err.contains("target"), "{err}");
        assert!(forward(&p, &inst(&[1, 2], &[1], Some((1, 5))), None).is_err());
    }

    #[test]
    fn trailing_pad_does_not_change_output() {
        let p = small(ModelVariant::Ian, 3);
        let a = forward(&p, &inst(&[1, 2, 3], &[2], Some((1, 2))), None).unwrap();
        let b = forward(&p, &inst(&[1, 2, 3, PAD, PAD], &[2, PAD], Some((1, 2))), None).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn context_order_matters() {
        let p = small(ModelVariant::Ian, 4);
        let a = forward(&p, &inst(&[1, 2, 3, 4], &[2], None), None).unwrap();
        let b = forward(&p, &inst(&[4, 3, 2, 1], &[2], None), None).unwrap();
        assert_ne!(a.y, b.y);
    }

    #[test]
    fn variant_mismatch_is_an_error() {
        let p = small(ModelVariant::NoTarget, 5);
        assert!(forward_ian(&p, &inst(&[1], &[1], None), None).is_err());
        let mut broken = small(ModelVariant::Ian, 5);
        broken.ctx_attn = None;
        assert!(broken.validate().is_err());
        assert!(forward(&broken, &inst(&[1], &[1], None), None).is_err());
    }

    #[test]
    fn majority_on_table_counts() {
        let labels = std::iter::repeat_n(0, 2164).chain(std::iter::repeat_n(1, 637)).chain(std::iter::repeat_n(2, 807));
        let label = majority_label(labels);
        assert_eq!(label, 0);
        let p = IanParams::majority(5, label);
        assert_eq!(predict(&p, &inst(&[1, 2], &[2], None)).unwrap(), 0);
        assert_eq!(majority_label([1, 2, 1, 2]), 1);
    }

    #[test]
    fn no_interaction_uniform_on_identical_hiddens() {
        let p = small(ModelVariant::NoInteraction, 6);
        let t = forward(&p, &inst(&[3], &[5], None), None).unwrap();
        assert_eq!(t.alpha.unwrap().weights.as_slice(), &[1.0]);
        assert_eq!(t.beta.unwrap().weights.as_slice(), &[1.0]);

        // weights zeroed and the forget gate saturated shut: every step of the
        // target branch lands on the same hidden state
        let mut p = small(ModelVariant::NoInteraction, 6);
        let tl = p.tgt_lstm.as_mut().unwrap();
        for m in [&mut tl.wi_x, &mut tl.wf_x, &mut tl.wo_x, &mut tl.wc_x, &mut tl.wi_h, &mut tl.wf_h, &mut tl.wo_h, &mut tl.wc_h] {
            *m = Matrix::zeros(m.rows(), m.cols());
        }
        tl.b_f = Vector::filled(3, -1e3);
        tl.b_c = Vector::filled(3, 0.7);
        tl.b_i = Vector::filled(3, 1e3);
        tl.b_o = Vector::filled(3, 1e3);
        let t = forward(&p, &inst(&[1, 2, 3], &[4, 5, 6], None), None).unwrap();
        let beta = t.beta.unwrap();
        for &w in beta.weights.iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tied_parameters_are_shared() {
        let mut rng = Rng::new(8);
        let table = EmbeddingTable::random(6, 3, 0.5, &mut rng);
        let config = ModelConfig { hidden_dim: 3, tie_attention: true, tie_lstm: true, init_range: 0.5, ..Default::default() };
        let p = IanParams::init(&config, table, &mut rng).unwrap();
        assert!(p.tie_lstm() && p.tie_attention());
        p.validate().unwrap();
        let t = forward(&p, &inst(&[1, 2, 3], &[2], None), None).unwrap();
        assert!((t.y.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_isolation_when_untied() {
        let mut p = small(ModelVariant::Ian, 9);
        let i = inst(&[1, 2, 3, 4], &[2, 3], None);
        let a = forward(&p, &i, None).unwrap();
        p.tgt_attn = Some(p.tgt_attn.as_ref().unwrap().zeros_like());
        let b = forward(&p, &i, None).unwrap();
        assert_eq!(a.alpha.unwrap().weights, b.alpha.unwrap().weights);
        assert_ne!(a.beta.unwrap().weights, b.beta.unwrap().weights);
    }

    #[test]
    fn dropout_mask_applies_to_features() {
        let p = small(ModelVariant::Ian, 10);
        let i = inst(&[1, 2, 3], &[2], None);
        let mask = Vector::from_vec(vec![2.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
        let t = forward(&p, &i, Some(&mask)).unwrap();
        assert_eq!(t.d_dropped, t.d.mul(&mask).unwrap());
        assert!(forward(&p, &i, Some(&Vector::zeros(3))).is_err());
    }
}
