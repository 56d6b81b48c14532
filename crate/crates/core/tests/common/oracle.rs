//! Forward passes recomputed with plain `Vec<f64>` arithmetic, straight from
//! the model equations and the raw parameter arrays.

use ian_core::model::{IanParams, Instance};
use ian_core::numerics::Matrix;

pub type V = Vec<f64>;

pub fn mv(m: &Matrix, x: &[f64]) -> V {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c) * x[c]).sum()).collect()
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn embed(p: &IanParams, tokens: &[usize]) -> Vec<V> {
    tokens.iter().map(|&t| p.embeddings.matrix.row(t).to_vec()).collect()
}

pub fn lstm(l: &ian_core::lstm::LstmParams, xs: &[V]) -> Vec<V> {
    let d = l.b_i.len();
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut out = Vec::new();
    for x in xs {
        let (ix, ih) = (mv(&l.wi_x, x), mv(&l.wi_h, &h));
        let (fx, fh) = (mv(&l.wf_x, x), mv(&l.wf_h, &h));
        let (ox, oh) = (mv(&l.wo_x, x), mv(&l.wo_h, &h));
        let (cx, ch) = (mv(&l.wc_x, x), mv(&l.wc_h, &h));
        for k in 0..d {
            let i = sig(ix[k] + ih[k] + l.b_i[k]);
            let f = sig(fx[k] + fh[k] + l.b_f[k]);
            let o = sig(ox[k] + oh[k] + l.b_o[k]);
            let g = (cx[k] + ch[k] + l.b_c[k]).tanh();
            c[k] = f * c[k] + i * g;
            h[k] = o * c[k].tanh();
        }
        out.push(h.clone());
    }
    out
}

pub fn mean(hs: &[V]) -> V {
    let mut s = vec![0.0; hs[0].len()];
    for h in hs {
        for (a, b) in s.iter_mut().zip(h) {
            *a += b;
        }
    }
    s.iter().map(|x| x / hs.len() as f64).collect()
}

/// Returns (weights, pooled).
pub fn attention(w: &Matrix, b: f64, hs: &[V], q: &[f64]) -> (V, V) {
    let wq = mv(w, q);
    let gammas: V = hs.iter().map(|h| (h.iter().zip(&wq).map(|(a, b)| a * b).sum::<f64>() + b).tanh()).collect();
    let mx = gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: V = gammas.iter().map(|g| (g - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    let a: V = e.iter().map(|x| x / z).collect();
    let mut r = vec![0.0; hs[0].len()];
    for (h, w) in hs.iter().zip(&a) {
        for (ri, hi) in r.iter_mut().zip(h) {
            *ri += w * hi;
        }
    }
    (a, r)
}

pub fn classify(p: &IanParams, d: &[f64]) -> V {
    let z = mv(&p.w_l, d);
    let x: V = z.iter().zip(p.b_l.as_slice()).map(|(a, b)| (a + b).tanh()).collect();
    let mx = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: V = x.iter().map(|v| (v - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub struct IanOracle {
    pub alpha: V,
    pub beta: V,
    pub y: V,
}

pub fn ian_oracle(p: &IanParams, inst: &Instance) -> IanOracle {
    let hc = lstm(&p.ctx_lstm, &embed(p, &inst.context));
    let ht = lstm(p.tgt_lstm.as_ref().unwrap(), &embed(p, &inst.target));
    let c_avg = mean(&hc);
    let t_avg = mean(&ht);
    let ca = p.ctx_attn.as_ref().unwrap();
    let ta = p.tgt_attn.as_ref().unwrap();
    let (alpha, c_r) = attention(&ca.w_a, ca.b_a, &hc, &t_avg);
    let (beta, t_r) = attention(&ta.w_a, ta.b_a, &ht, &c_avg);
    let d: V = c_r.into_iter().chain(t_r).collect();
    IanOracle { alpha, beta, y: classify(p, &d) }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
