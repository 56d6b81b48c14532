//! Average pooling and bilinear attention pooling.
//!
//! Score of hidden state `h` against a query `q` is `tanh(hᵀ W_a q + b_a)`;
//! the weights are the softmax of the scores over positions, and the pooled
//! vector is the weighted sum of the hidden states.

use crate::error::{Error, Result};
use crate::numerics::{softmax_stable, uniform_init, Matrix, Rng, Slot, SlotKind, SlotMut, Slots, Vector};

/// `W_a` is `hidden x query`; the bias is a scalar because the score is.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w_a: Matrix,
    pub b_a: f64,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, query: usize) -> Self {
        AttentionParams { w_a: Matrix::zeros(hidden, query), b_a: 0.0 }
    }

    pub fn init(hidden: usize, query: usize, range: f64, rng: &mut Rng) -> Self {
        AttentionParams { w_a: uniform_init(rng, hidden, query, -range, range).expect("range > 0"), b_a: 0.0 }
    }

    pub fn zeros_like(&self) -> Self {
        AttentionParams::zeros(self.w_a.rows(), self.w_a.cols())
    }
}

impl Slots for AttentionParams {
    fn slots(&self) -> Vec<Slot<'_>> {
        vec![
            Slot { name: "w_a", kind: SlotKind::Weight, data: self.w_a.as_slice() },
            Slot { name: "b_a", kind: SlotKind::Bias, data: std::slice::from_ref(&self.b_a) },
        ]
    }

    fn slots_mut(&mut self) -> Vec<SlotMut<'_>> {
        vec![
            SlotMut { name: "w_a", kind: SlotKind::Weight, data: self.w_a.as_mut_slice() },
            SlotMut { name: "b_a", kind: SlotKind::Bias, data: std::slice::from_mut(&mut self.b_a) },
        ]
    }
}

/// Arithmetic mean of a non-empty sequence of equal-length vectors.
pub fn average_pool(hiddens: &[Vector]) -> Result<Vector> {
    let first = hiddens.first().ok_or(Error::Empty("average_pool input"))?;
    let mut sum = Vector::zeros(first.len());
    for h in hiddens {
        sum.axpy(1.0, h)?;
    }
    Ok(sum.scale(1.0 / hiddens.len() as f64))
}

/// Gradient of [`average_pool`]: every input receives `d_avg / n`.
pub fn average_pool_backward(d_avg: &Vector, n: usize) -> Vec<Vector> {
    let share = d_avg.scale(1.0 / n as f64);
    vec![share; n]
}

pub fn score(p: &AttentionParams, h: &Vector, query: &Vector) -> Result<f64> {
    let projected = p.w_a.matvec(query)?;
    Ok((h.dot(&projected)? + p.b_a).tanh())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionTrace {
    pub hiddens: Vec<Vector>,
    pub query: Vector,
    /// `W_a · query`, shared by every position.
    pub projected: Vector,
    /// Post-`tanh` scores.
    pub scores: Vec<f64>,
    pub weights: Vector,
    pub pooled: Vector,
}

pub fn attend(p: &AttentionParams, hiddens: &[Vector], query: &Vector) -> Result<AttentionTrace> {
    if hiddens.is_empty() {
        return Err(Error::Empty("attention positions"));
    }
    let projected = p.w_a.matvec(query)?;
    let scores = hiddens.iter().map(|h| Ok((h.dot(&projected)? + p.b_a).tanh())).collect::<Result<Vec<f64>>>()?;
    let weights = softmax_stable(&scores)?;
    let mut pooled = Vector::zeros(hiddens[0].len());
    for (h, &w) in hiddens.iter().zip(weights.iter()) {
        pooled.axpy(w, h)?;
    }
    Ok(AttentionTrace { hiddens: hiddens.to_vec(), query: query.clone(), projected, scores, weights, pooled })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionGrads {
    pub params: AttentionParams,
    pub d_hiddens: Vec<Vector>,
    pub d_query: Vector,
}

pub fn attend_backward(p: &AttentionParams, trace: &AttentionTrace, d_pooled: &Vector) -> Result<AttentionGrads> {
    let mut params = p.zeros_like();
    let (d_hiddens, d_query) = attend_backward_into(p, trace, d_pooled, &mut params)?;
    Ok(AttentionGrads { params, d_hiddens, d_query })
}

/// Accumulates parameter gradients into `grads`; returns the gradients
/// w.r.t. the hidden states and the query.
pub fn attend_backward_into(
    p: &AttentionParams,
    trace: &AttentionTrace,
    d_pooled: &Vector,
    grads: &mut AttentionParams,
) -> Result<(Vec<Vector>, Vector)> {
    if d_pooled.len() != trace.pooled.len() {
        return Err(Error::shape("attend_backward", trace.pooled.len(), d_pooled.len()));
    }
    if grads.w_a.shape() != p.w_a.shape() {
        return Err(Error::shape("attend_backward grads", &p.w_a, &grads.w_a));
    }
    let n = trace.hiddens.len();
    let mut d_hiddens: Vec<Vector> = trace.weights.iter().map(|&w| d_pooled.scale(w)).collect();

    // softmax Jacobian: ds_i = w_i (dw_i - Σ_j w_j dw_j)
    let d_weights = trace.hiddens.iter().map(|h| h.dot(d_pooled)).collect::<Result<Vec<f64>>>()?;
    let mean: f64 = d_weights.iter().zip(trace.weights.iter()).map(|(d, w)| d * w).sum();

    let mut d_projected = Vector::zeros(trace.projected.len());
    for i in 0..n {
        let ds = trace.weights[i] * (d_weights[i] - mean);
        let du = ds * (1.0 - trace.scores[i] * trace.scores[i]);
        if du == 0.0 {
            continue;
        }
        grads.b_a += du;
        grads.w_a.add_outer(du, &trace.hiddens[i], &trace.query)?;
        d_hiddens[i].axpy(du, &trace.projected)?;
        d_projected.axpy(du, &trace.hiddens[i])?;
    }
    let d_query = p.w_a.matvec_t(&d_projected)?;
    Ok((d_hiddens, d_query))
}
