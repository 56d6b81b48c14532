//! Single-layer unidirectional LSTM with backpropagation through time.
//!
//! ```text
//! i = σ(W_i^w·w + W_i^h·h' + b_i)      f = σ(W_f^w·w + W_f^h·h' + b_f)
//! o = σ(W_o^w·w + W_o^h·h' + b_o)      ĉ = tanh(W_c^w·w + W_c^h·h' + b_c)
//! c = f ⊙ c' + i ⊙ ĉ                   h = o ⊙ tanh(c)
//! ```
//!
//! The initial state is `h⁰ = c⁰ = 0`.

use crate::error::{Error, Result};
use crate::numerics::{uniform_init, Matrix, Rng, Slot, SlotKind, SlotMut, Slots, Vector};

/// Weights and biases of one LSTM. Also used as its own gradient mirror.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    /// Input-to-gate weights, `hidden x input`.
    pub wi_x: Matrix,
    pub wf_x: Matrix,
    pub wo_x: Matrix,
    pub wc_x: Matrix,
    /// Recurrent weights, `hidden x hidden`.
    pub wi_h: Matrix,
    pub wf_h: Matrix,
    pub wo_h: Matrix,
    pub wc_h: Matrix,
    pub b_i: Vector,
    pub b_f: Vector,
    pub b_o: Vector,
    pub b_c: Vector,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let wx = || Matrix::zeros(hidden, input);
        let wh = || Matrix::zeros(hidden, hidden);
        let b = || Vector::zeros(hidden);
        LstmParams {
            wi_x: wx(),
            wf_x: wx(),
            wo_x: wx(),
            wc_x: wx(),
            wi_h: wh(),
            wf_h: wh(),
            wo_h: wh(),
            wc_h: wh(),
            b_i: b(),
            b_f: b(),
            b_o: b(),
            b_c: b(),
        }
    }

    /// Weights from `U(-range, range)`, biases zero.
    pub fn init(hidden: usize, input: usize, range: f64, rng: &mut Rng) -> Self {
        let mut draw = |r, c| uniform_init(rng, r, c, -range, range).expect("range > 0");
        LstmParams {
            wi_x: draw(hidden, input),
            wf_x: draw(hidden, input),
            wo_x: draw(hidden, input),
            wc_x: draw(hidden, input),
            wi_h: draw(hidden, hidden),
            wf_h: draw(hidden, hidden),
            wo_h: draw(hidden, hidden),
            wc_h: draw(hidden, hidden),
            b_i: Vector::zeros(hidden),
            b_f: Vector::zeros(hidden),
            b_o: Vector::zeros(hidden),
            b_c: Vector::zeros(hidden),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.wi_x.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.wi_x.cols()
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams::zeros(self.hidden_dim(), self.input_dim())
    }

    /// Checks that all twelve arrays agree on the hidden and input sizes.
    pub fn validate(&self) -> Result<()> {
        let (h, x) = (self.hidden_dim(), self.input_dim());
        for m in [&self.wi_x, &self.wf_x, &self.wo_x, &self.wc_x] {
            if m.shape() != (h, x) {
                return Err(Error::shape("LstmParams", format!("{h}x{x}"), m));
            }
        }
        for m in [&self.wi_h, &self.wf_h, &self.wo_h, &self.wc_h] {
            if m.shape() != (h, h) {
                return Err(Error::shape("LstmParams", format!("{h}x{h}"), m));
            }
        }
        for b in [&self.b_i, &self.b_f, &self.b_o, &self.b_c] {
            if b.len() != h {
                return Err(Error::shape("LstmParams bias", h, b.len()));
            }
        }
        Ok(())
    }
}

impl Slots for LstmParams {
    fn slots(&self) -> Vec<Slot<'_>> {
        use SlotKind::*;
        vec![
            Slot { name: "wi_x", kind: Weight, data: self.wi_x.as_slice() },
            Slot { name: "wf_x", kind: Weight, data: self.wf_x.as_slice() },
            Slot { name: "wo_x", kind: Weight, data: self.wo_x.as_slice() },
            Slot { name: "wc_x", kind: Weight, data: self.wc_x.as_slice() },
            Slot { name: "wi_h", kind: Weight, data: self.wi_h.as_slice() },
            Slot { name: "wf_h", kind: Weight, data: self.wf_h.as_slice() },
            Slot { name: "wo_h", kind: Weight, data: self.wo_h.as_slice() },
            Slot { name: "wc_h", kind: Weight, data: self.wc_h.as_slice() },
            Slot { name: "b_i", kind: Bias, data: self.b_i.as_slice() },
            Slot { name: "b_f", kind: Bias, data: self.b_f.as_slice() },
            Slot { name: "b_o", kind: Bias, data: self.b_o.as_slice() },
            Slot { name: "b_c", kind: Bias, data: self.b_c.as_slice() },
        ]
    }

    fn slots_mut(&mut self) -> Vec<SlotMut<'_>> {
        use SlotKind::*;
        vec![
            SlotMut { name: "wi_x", kind: Weight, data: self.wi_x.as_mut_slice() },
            SlotMut { name: "wf_x", kind: Weight, data: self.wf_x.as_mut_slice() },
            SlotMut { name: "wo_x", kind: Weight, data: self.wo_x.as_mut_slice() },
            SlotMut { name: "wc_x", kind: Weight, data: self.wc_x.as_mut_slice() },
            SlotMut { name: "wi_h", kind: Weight, data: self.wi_h.as_mut_slice() },
            SlotMut { name: "wf_h", kind: Weight, data: self.wf_h.as_mut_slice() },
            SlotMut { name: "wo_h", kind: Weight, data: self.wo_h.as_mut_slice() },
            SlotMut { name: "wc_h", kind: Weight, data: self.wc_h.as_mut_slice() },
            SlotMut { name: "b_i", kind: Bias, data: self.b_i.as_mut_slice() },
            SlotMut { name: "b_f", kind: Bias, data: self.b_f.as_mut_slice() },
            SlotMut { name: "b_o", kind: Bias, data: self.b_o.as_mut_slice() },
            SlotMut { name: "b_c", kind: Bias, data: self.b_c.as_mut_slice() },
        ]
    }
}

/// Everything one step needs for its backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStepCache {
    pub input: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub i: Vector,
    pub f: Vector,
    pub o: Vector,
    pub c_hat: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    pub h: Vector,
}

fn gate(wx: &Matrix, wh: &Matrix, b: &Vector, x: &Vector, h: &Vector) -> Result<Vector> {
    let mut z = wx.matvec(x)?;
    z.axpy(1.0, &wh.matvec(h)?)?;
    z.axpy(1.0, b)?;
    Ok(z)
}

pub fn lstm_step(p: &LstmParams, input: &Vector, h_prev: &Vector, c_prev: &Vector) -> Result<(Vector, Vector, LstmStepCache)> {
    if h_prev.len() != p.hidden_dim() || c_prev.len() != p.hidden_dim() {
        return Err(Error::shape("lstm_step state", p.hidden_dim(), format!("h {} / c {}", h_prev.len(), c_prev.len())));
    }
    let i = gate(&p.wi_x, &p.wi_h, &p.b_i, input, h_prev)?.sigmoid();
    let f = gate(&p.wf_x, &p.wf_h, &p.b_f, input, h_prev)?.sigmoid();
    let o = gate(&p.wo_x, &p.wo_h, &p.b_o, input, h_prev)?.sigmoid();
    let c_hat = gate(&p.wc_x, &p.wc_h, &p.b_c, input, h_prev)?.tanh();
    let mut c = f.mul(c_prev)?;
    c.axpy(1.0, &i.mul(&c_hat)?)?;
    let tanh_c = c.tanh();
    let h = o.mul(&tanh_c)?;
    let cache = LstmStepCache {
        input: input.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        i,
        f,
        o,
        c_hat,
        c: c.clone(),
        tanh_c,
        h: h.clone(),
    };
    Ok((h, c, cache))
}

/// Runs the LSTM over `inputs` from a zero state.
pub fn lstm_forward(p: &LstmParams, inputs: &[Vector]) -> Result<(Vec<Vector>, Vec<LstmStepCache>)> {
    if inputs.is_empty() {
        return Err(Error::Empty("LSTM input sequence"));
    }
    let mut h = Vector::zeros(p.hidden_dim());
    let mut c = Vector::zeros(p.hidden_dim());
    let mut hiddens = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (h_next, c_next, cache) = lstm_step(p, x, &h, &c)?;
        hiddens.push(h_next.clone());
        caches.push(cache);
        h = h_next;
        c = c_next;
    }
    Ok((hiddens, caches))
}

/// BPTT. `d_hiddens[k]` is ∂J/∂h^k from everything above the LSTM.
///
/// Returns the parameter gradients and ∂J/∂w^k for every input.
pub fn lstm_backward(p: &LstmParams, caches: &[LstmStepCache], d_hiddens: &[Vector]) -> Result<(LstmParams, Vec<Vector>)> {
    let mut grads = p.zeros_like();
    let d_inputs = lstm_backward_into(p, caches, d_hiddens, &mut grads)?;
    Ok((grads, d_inputs))
}

/// Like [`lstm_backward`] but accumulates into existing gradients (used
/// when two branches share one LSTM).
pub fn lstm_backward_into(p: &LstmParams, caches: &[LstmStepCache], d_hiddens: &[Vector], grads: &mut LstmParams) -> Result<Vec<Vector>> {
    if caches.len() != d_hiddens.len() {
        return Err(Error::shape("lstm_backward", format!("{} steps", caches.len()), format!("{} upstream gradients", d_hiddens.len())));
    }
    let hd = p.hidden_dim();
    let mut dh_next = Vector::zeros(hd);
    let mut dc_next = Vector::zeros(hd);
    let mut d_inputs = vec![Vector::zeros(p.input_dim()); caches.len()];

    for k in (0..caches.len()).rev() {
        let s = &caches[k];
        let dh = d_hiddens[k].add(&dh_next)?;

        let mut dz_i = Vector::zeros(hd);
        let mut dz_f = Vector::zeros(hd);
        let mut dz_o = Vector::zeros(hd);
        let mut dz_c = Vector::zeros(hd);
        let mut dc_prev = Vector::zeros(hd);
        for j in 0..hd {
            let d_o = dh[j] * s.tanh_c[j];
            let dc = dc_next[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            let d_f = dc * s.c_prev[j];
            let d_i = dc * s.c_hat[j];
            let d_chat = dc * s.i[j];
            dc_prev[j] = dc * s.f[j];
            dz_i[j] = d_i * s.i[j] * (1.0 - s.i[j]);
            dz_f[j] = d_f * s.f[j] * (1.0 - s.f[j]);
            dz_o[j] = d_o * s.o[j] * (1.0 - s.o[j]);
            dz_c[j] = d_chat * (1.0 - s.c_hat[j] * s.c_hat[j]);
        }

        grads.wi_x.add_outer(1.0, &dz_i, &s.input)?;
        grads.wf_x.add_outer(1.0, &dz_f, &s.input)?;
        grads.wo_x.add_outer(1.0, &dz_o, &s.input)?;
        grads.wc_x.add_outer(1.0, &dz_c, &s.input)?;
        grads.wi_h.add_outer(1.0, &dz_i, &s.h_prev)?;
        grads.wf_h.add_outer(1.0, &dz_f, &s.h_prev)?;
        grads.wo_h.add_outer(1.0, &dz_o, &s.h_prev)?;
        grads.wc_h.add_outer(1.0, &dz_c, &s.h_prev)?;
        grads.b_i.axpy(1.0, &dz_i)?;
        grads.b_f.axpy(1.0, &dz_f)?;
        grads.b_o.axpy(1.0, &dz_o)?;
        grads.b_c.axpy(1.0, &dz_c)?;

        let mut dx = p.wi_x.matvec_t(&dz_i)?;
        dx.axpy(1.0, &p.wf_x.matvec_t(&dz_f)?)?;
        dx.axpy(1.0, &p.wo_x.matvec_t(&dz_o)?)?;
        dx.axpy(1.0, &p.wc_x.matvec_t(&dz_c)?)?;
        d_inputs[k] = dx;

        let mut dhp = p.wi_h.matvec_t(&dz_i)?;
        dhp.axpy(1.0, &p.wf_h.matvec_t(&dz_f)?)?;
        dhp.axpy(1.0, &p.wo_h.matvec_t(&dz_o)?)?;
        dhp.axpy(1.0, &p.wc_h.matvec_t(&dz_c)?)?;
        dh_next = dhp;
        dc_next = dc_prev;
    }
    Ok(d_inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sigmoid, uniform_vector};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Straight-line re-statement of the cell equations over plain slices.
    fn oracle_step(p: &LstmParams, w: &[f64], hp: &[f64], cp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = p.hidden_dim();
        let pre = |wx: &Matrix, wh: &Matrix, b: &Vector, j: usize| {
            let mut z = b[j];
            for k in 0..w.len() {
                z += wx.get(j, k) * w[k];
            }
            for k in 0..hd {
                z += wh.get(j, k) * hp[k];
            }
            z
        };
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        for j in 0..hd {
            let i = 1.0 / (1.0 + (-pre(&p.wi_x, &p.wi_h, &p.b_i, j)).exp());
            let f = 1.0 / (1.0 + (-pre(&p.wf_x, &p.wf_h, &p.b_f, j)).exp());
            let o = 1.0 / (1.0 + (-pre(&p.wo_x, &p.wo_h, &p.b_o, j)).exp());
            let ch = pre(&p.wc_x, &p.wc_h, &p.b_c, j).tanh();
            c[j] = f * cp[j] + i * ch;
            h[j] = o * c[j].tanh();
        }
        (h, c)
    }

    fn random_params(hd: usize, xd: usize, seed: u64) -> LstmParams {
        let mut rng = Rng::new(seed);
        let mut p = LstmParams::init(hd, xd, 0.5, &mut rng);
        for b in [&mut p.b_i, &mut p.b_f, &mut p.b_o, &mut p.b_c] {
            *b = uniform_vector(&mut rng, hd, -0.5, 0.5).unwrap();
        }
        p
    }

    #[test]
    fn zero_params_give_half_gates() {
        let p = LstmParams::zeros(2, 3);
        let z = Vector::zeros(2);
        let (h, c, cache) = lstm_step(&p, &Vector::filled(3, 1.0), &z, &z).unwrap();
        assert!(cache.i.iter().chain(cache.f.iter()).chain(cache.o.iter()).all(|&g| g == 0.5));
        assert!(cache.c_hat.iter().all(|&x| x == 0.0));
        assert_eq!(c.as_slice(), &[0.0, 0.0]);
        assert_eq!(h.as_slice(), &[0.0, 0.0]);

        let (h, c, _) = lstm_step(&p, &Vector::from_vec(vec![3.0, -1.0, 2.0]), &z, &Vector::filled(2, 2.0)).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 1.0]);
        let expected = 0.5 * 1f64.tanh();
        assert!(h.iter().all(|&x| close(x, expected, 1e-15)));
        assert!(close(expected, 0.3808, 1e-4));
    }

    #[test]
    fn step_matches_straight_line_oracle() {
        for seed in 0..5 {
            let p = random_params(4, 4, seed);
            let mut rng = Rng::new(100 + seed);
            let w = uniform_vector(&mut rng, 4, -1.0, 1.0).unwrap();
            let hp = uniform_vector(&mut rng, 4, -1.0, 1.0).unwrap();
            let cp = uniform_vector(&mut rng, 4, -1.0, 1.0).unwrap();
            let (h, c, cache) = lstm_step(&p, &w, &hp, &cp).unwrap();
            let (oh, oc) = oracle_step(&p, &w, &hp, &cp);
            for j in 0..4 {
                assert!(close(h[j], oh[j], 1e-12));
                assert!(close(c[j], oc[j], 1e-12));
                for g in [cache.i[j], cache.f[j], cache.o[j]] {
                    assert!(g > 0.0 && g < 1.0);
                }
                assert!(cache.c_hat[j].abs() < 1.0 && cache.tanh_c[j].abs() < 1.0);
                assert!(c[j].abs() <= cp[j].abs() + 1.0);
            }
        }
    }

    #[test]
    fn forward_sequence() {
        let p = random_params(3, 2, 5);
        let x = Vector::from_vec(vec![0.3, -0.7]);
        let (hs, _) = lstm_forward(&p, std::slice::from_ref(&x)).unwrap();
        let z = Vector::zeros(3);
        assert_eq!(hs[0], lstm_step(&p, &x, &z, &z).unwrap().0);

        let (hs, _) = lstm_forward(&p, &[x.clone(), x.clone()]).unwrap();
        assert_ne!(hs[0], hs[1]);

        let mut rng = Rng::new(8);
        let seq: Vec<Vector> = (0..5).map(|_| uniform_vector(&mut rng, 2, -1.0, 1.0).unwrap()).collect();
        let (hs, caches) = lstm_forward(&p, &seq).unwrap();
        assert_eq!(caches.len(), 5);
        let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
        for k in 0..5 {
            let (nh, nc) = oracle_step(&p, &seq[k], &h, &c);
            for j in 0..3 {
                assert!(close(hs[k][j], nh[j], 1e-12));
            }
            h = nh;
            c = nc;
        }
        assert!(lstm_forward(&p, &[]).is_err());
        assert!(lstm_forward(&p, &[Vector::zeros(3)]).is_err());
        assert!(sigmoid(0.0) == 0.5);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let p = random_params(3, 3, 2);
        let mut rng = Rng::new(1);
        let seq: Vec<Vector> = (0..3).map(|_| uniform_vector(&mut rng, 3, -1.0, 1.0).unwrap()).collect();
        let (_, caches) = lstm_forward(&p, &seq).unwrap();
        let (g, dx) = lstm_backward(&p, &caches, &vec![Vector::zeros(3); 3]).unwrap();
        assert_eq!(g, p.zeros_like());
        assert!(dx.iter().all(|v| v.iter().all(|&x| x == 0.0)));
        assert!(lstm_backward(&p, &caches, &vec![Vector::zeros(3); 2]).is_err());
    }

    fn sum_loss(p: &LstmParams, seq: &[Vector]) -> f64 {
        lstm_forward(p, seq).unwrap().0.iter().map(|h| h.sum()).sum()
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / (1e-8f64).max(a.abs() + n.abs())
    }

    fn check_fd(hd: usize, xd: usize, len: usize, seed: u64) {
        const EPS: f64 = 1e-5;
        let p = random_params(hd, xd, seed);
        let mut rng = Rng::new(seed + 1000);
        let seq: Vec<Vector> = (0..len).map(|_| uniform_vector(&mut rng, xd, -1.0, 1.0).unwrap()).collect();
        let (_, caches) = lstm_forward(&p, &seq).unwrap();
        let (grads, d_inputs) = lstm_backward(&p, &caches, &vec![Vector::filled(hd, 1.0); len]).unwrap();

        let analytic: Vec<Vec<f64>> = grads.slots().iter().map(|s| s.data.to_vec()).collect();
        let n_slots = analytic.len();
        for s in 0..n_slots {
            for k in 0..analytic[s][..].len() {
                let mut plus = p.clone();
                plus.slots_mut()[s].data[k] += EPS;
                let mut minus = p.clone();
                minus.slots_mut()[s].data[k] -= EPS;
                let numeric = (sum_loss(&plus, &seq) - sum_loss(&minus, &seq)) / (2.0 * EPS);
                let a = analytic[s][k];
                assert!(rel_err(a, numeric) <= 1e-5, "slot {s} coord {k}: {a} vs {numeric}");
            }
        }
        for t in 0..len {
            for k in 0..xd {
                let mut plus = seq.clone();
                plus[t][k] += EPS;
                let mut minus = seq.clone();
                minus[t][k] -= EPS;
                let numeric = (sum_loss(&p, &plus) - sum_loss(&p, &minus)) / (2.0 * EPS);
                assert!(rel_err(d_inputs[t][k], numeric) <= 1e-5, "input {t},{k}");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        check_fd(3, 3, 2, 21);
        check_fd(3, 8, 3, 22);
        check_fd(8, 3, 4, 23);
        check_fd(8, 8, 2, 24);
    }
}
