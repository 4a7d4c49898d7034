//! LSTM cell, forward pass and backpropagation through time.
//!
//! Cell: `i = σ(xW_i + hU_i + b_i)`, likewise `f`, `o`; `g = tanh(xW_g + hU_g + b_g)`;
//! `c' = f⊙c + i⊙g`; `h' = o⊙tanh(c')`. Logits are `h_T W_y + b_y`.

use serde::{Deserialize, Serialize};

use super::TextModelError;
use crate::rng::SeededRng;

/// Gate order used for every per-gate array.
pub const GATES: [&str; 4] = ["i", "f", "o", "g"];
const I: usize = 0;
const F: usize = 1;
const O: usize = 2;
const G: usize = 3;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TextModelError> {
        if data.len() != rows * cols {
            return Err(TextModelError::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `out += v · self` for a row vector `v` of length `rows`.
    fn vec_mul_acc(&self, v: &[f64], out: &mut [f64]) {
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += vr * m;
            }
        }
    }

    /// `out += self · v` for a column vector `v` of length `cols`.
    fn mul_vec_acc(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.row(r).iter().zip(v).map(|(m, x)| m * x).sum::<f64>();
        }
    }

    /// `self += a ⊗ b`.
    fn outer_acc(&mut self, a: &[f64], b: &[f64]) {
        for (r, &ar) in a.iter().enumerate() {
            if ar == 0.0 {
                continue;
            }
            for (m, &bc) in self.row_mut(r).iter_mut().zip(b) {
                *m += ar * bc;
            }
        }
    }
}

/// All trainable tensors. Biases and the output bias are 1-row matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub embedding: Matrix,
    pub w: [Matrix; 4],
    pub u: [Matrix; 4],
    pub b: [Matrix; 4],
    pub w_y: Matrix,
    pub b_y: Matrix,
}

/// Sizes `(V, d, h, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Dims {
    pub fn new(vocab: usize, embed: usize, hidden: usize, classes: usize) -> Self {
        Self {
            vocab,
            embed,
            hidden,
            classes,
        }
    }

    /// Tensor names and shapes in canonical order.
    pub fn layout(&self) -> Vec<(String, usize, usize)> {
        let Dims {
            vocab: v,
            embed: d,
            hidden: h,
            classes: k,
        } = *self;
        let mut out = vec![("E".to_string(), v, d)];
        out.extend(GATES.iter().map(|g| (format!("W_{g}"), d, h)));
        out.extend(GATES.iter().map(|g| (format!("U_{g}"), h, h)));
        out.extend(GATES.iter().map(|g| (format!("b_{g}"), 1, h)));
        out.push(("W_y".into(), h, k));
        out.push(("b_y".into(), 1, k));
        out
    }
}

impl LstmParams {
    pub fn zeros(dims: Dims) -> Self {
        let Dims {
            vocab: v,
            embed: d,
            hidden: h,
            classes: k,
        } = dims;
        Self {
            embedding: Matrix::zeros(v, d),
            w: std::array::from_fn(|_| Matrix::zeros(d, h)),
            u: std::array::from_fn(|_| Matrix::zeros(h, h)),
            b: std::array::from_fn(|_| Matrix::zeros(1, h)),
            w_y: Matrix::zeros(h, k),
            b_y: Matrix::zeros(1, k),
        }
    }

    /// Every entry uniform in `(-scale, scale)`, drawn in canonical tensor
    /// order, then `+1` on the forget-gate bias.
    pub fn random(dims: Dims, scale: f64, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(dims);
        for (_, t) in p.tensors_mut() {
            for x in t.data_mut() {
                *x = rng.uniform(-scale, scale);
            }
        }
        for x in p.b[F].data_mut() {
            *x += 1.0;
        }
        p
    }

    pub fn dims(&self) -> Dims {
        Dims {
            vocab: self.embedding.rows,
            embed: self.embedding.cols,
            hidden: self.w_y.rows,
            classes: self.w_y.cols,
        }
    }

    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("E".to_string(), &self.embedding)];
        out.extend(GATES.iter().zip(&self.w).map(|(g, m)| (format!("W_{g}"), m)));
        out.extend(GATES.iter().zip(&self.u).map(|(g, m)| (format!("U_{g}"), m)));
        out.extend(GATES.iter().zip(&self.b).map(|(g, m)| (format!("b_{g}"), m)));
        out.push(("W_y".into(), &self.w_y));
        out.push(("b_y".into(), &self.b_y));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![("E".to_string(), &mut self.embedding)];
        out.extend(GATES.iter().zip(&mut self.w).map(|(g, m)| (format!("W_{g}"), m)));
        out.extend(GATES.iter().zip(&mut self.u).map(|(g, m)| (format!("U_{g}"), m)));
        out.extend(GATES.iter().zip(&mut self.b).map(|(g, m)| (format!("b_{g}"), m)));
        out.push(("W_y".into(), &mut self.w_y));
        out.push(("b_y".into(), &mut self.b_y));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, m)| m.data.iter().all(|x| x.is_finite()))
    }

    /// Check every tensor against the shapes implied by `dims()`.
    pub fn validate(&self) -> Result<(), TextModelError> {
        let layout = self.dims().layout();
        for ((name, m), (_, r, c)) in self.tensors().into_iter().zip(layout) {
            if m.rows != r || m.cols != c || m.data.len() != r * c {
                return Err(TextModelError::Shape(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    m.rows, m.cols
                )));
            }
        }
        if !self.is_finite() {
            return Err(TextModelError::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Round every entry to the nearest 32-bit float.
    pub fn round_to_f32(&mut self) {
        for (_, m) in self.tensors_mut() {
            for x in m.data_mut() {
                *x = *x as f32 as f64;
            }
        }
    }

    pub(crate) fn zero(&mut self) {
        for (_, m) in self.tensors_mut() {
            m.fill(0.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmOutput {
    pub logits: Vec<f64>,
    pub hidden: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-log softmax(logits)[label]`.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Activations kept for the backward pass. `h[0]`, `c[0]` are the zero state.
struct Trace {
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    gates: Vec<[Vec<f64>; 4]>,
}

fn check_sequence(params: &LstmParams, seq: &[usize]) -> Result<(), TextModelError> {
    if seq.is_empty() {
        return Err(TextModelError::EmptySequence);
    }
    let v = params.embedding.rows;
    if let Some(&bad) = seq.iter().find(|&&x| x >= v) {
        return Err(TextModelError::IndexOutOfRange { index: bad, vocab: v });
    }
    Ok(())
}

fn run(params: &LstmParams, seq: &[usize], mut trace: Option<&mut Trace>) -> LstmOutput {
    let h_dim = params.w_y.rows;
    let mut h = vec![0.0; h_dim];
    let mut c = vec![0.0; h_dim];
    for &tok in seq {
        let x = params.embedding.row(tok);
        let mut a: [Vec<f64>; 4] = std::array::from_fn(|k| params.b[k].data.clone());
        for (k, ak) in a.iter_mut().enumerate() {
            params.w[k].vec_mul_acc(x, ak);
            params.u[k].vec_mul_acc(&h, ak);
        }
        for k in [I, F, O] {
            a[k].iter_mut().for_each(|z| *z = sigmoid(*z));
        }
        a[G].iter_mut().for_each(|z| *z = z.tanh());
        for j in 0..h_dim {
            c[j] = a[F][j] * c[j] + a[I][j] * a[G][j];
            h[j] = a[O][j] * c[j].tanh();
        }
        if let Some(t) = trace.as_deref_mut() {
            t.gates.push(a);
            t.h.push(h.clone());
            t.c.push(c.clone());
        }
    }
    let mut logits = params.b_y.data.clone();
    params.w_y.vec_mul_acc(&h, &mut logits);
    LstmOutput { logits, hidden: h }
}

/// Run the cell over `seq` from the zero state.
pub fn lstm_forward(params: &LstmParams, seq: &[usize]) -> Result<LstmOutput, TextModelError> {
    check_sequence(params, seq)?;
    Ok(run(params, seq, None))
}

/// Mean cross-entropy over a batch.
pub fn batch_loss(params: &LstmParams, batch: &[(Vec<usize>, usize)]) -> Result<f64, TextModelError> {
    if batch.is_empty() {
        return Err(TextModelError::EmptyBatch);
    }
    let mut total = 0.0;
    for (seq, label) in batch {
        check_example(params, seq, *label)?;
        total += cross_entropy(&run(params, seq, None).logits, *label);
    }
    Ok(total / batch.len() as f64)
}

fn check_example(params: &LstmParams, seq: &[usize], label: usize) -> Result<(), TextModelError> {
    check_sequence(params, seq)?;
    let k = params.w_y.cols;
    if label >= k {
        return Err(TextModelError::LabelOutOfRange { label, classes: k });
    }
    Ok(())
}

/// Gradient of the mean batch cross-entropy, plus the loss itself and how
/// many examples the current parameters already get right.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub grads: LstmParams,
    pub loss: f64,
    pub correct: usize,
}

pub fn lstm_gradients(params: &LstmParams, batch: &[(Vec<usize>, usize)]) -> Result<BatchGradients, TextModelError> {
    let mut grads = LstmParams::zeros(params.dims());
    let (loss, correct) = accumulate_gradients(params, batch, &mut grads)?;
    Ok(BatchGradients { grads, loss, correct })
}

/// Overwrite `grads` with the mean batch gradient. Returns `(loss, correct)`.
pub(crate) fn accumulate_gradients(
    params: &LstmParams,
    batch: &[(Vec<usize>, usize)],
    grads: &mut LstmParams,
) -> Result<(f64, usize), TextModelError> {
    if batch.is_empty() {
        return Err(TextModelError::EmptyBatch);
    }
    for (seq, label) in batch {
        check_example(params, seq, *label)?;
    }
    grads.zero();
    let mut loss = 0.0;
    let mut correct = 0;
    for (seq, label) in batch {
        let (l, hit) = backprop(params, seq, *label, grads);
        loss += l;
        correct += usize::from(hit);
    }
    let scale = 1.0 / batch.len() as f64;
    for (_, m) in grads.tensors_mut() {
        m.data_mut().iter_mut().for_each(|x| *x *= scale);
    }
    Ok((loss * scale, correct))
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Add this example's (unscaled) gradient into `grads`.
fn backprop(params: &LstmParams, seq: &[usize], label: usize, grads: &mut LstmParams) -> (f64, bool) {
    let h_dim = params.w_y.rows;
    let d = params.embedding.cols;
    let mut trace = Trace {
        h: vec![vec![0.0; h_dim]],
        c: vec![vec![0.0; h_dim]],
        gates: Vec::with_capacity(seq.len()),
    };
    let out = run(params, seq, Some(&mut trace));
    let loss = cross_entropy(&out.logits, label);
    let hit = argmax(&out.logits) == label;

    let mut dlogits = softmax(&out.logits);
    dlogits[label] -= 1.0;
    grads.w_y.outer_acc(&out.hidden, &dlogits);
    for (g, dz) in grads.b_y.data.iter_mut().zip(&dlogits) {
        *g += dz;
    }
    let mut dh = vec![0.0; h_dim];
    params.w_y.mul_vec_acc(&dlogits, &mut dh);
    let mut dc = vec![0.0; h_dim];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h_dim]);
    let mut dx = vec![0.0; d];

    for t in (0..seq.len()).rev() {
        let [i, f, o, g] = &trace.gates[t];
        let c = &trace.c[t + 1];
        let c_prev = &trace.c[t];
        let h_prev = &trace.h[t];
        for j in 0..h_dim {
            let tc = c[j].tanh();
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * o[j] * (1.0 - tc * tc);
            let d_i = dc[j] * g[j];
            let d_g = dc[j] * i[j];
            let d_f = dc[j] * c_prev[j];
            dc[j] *= f[j];
            da[I][j] = d_i * i[j] * (1.0 - i[j]);
            da[F][j] = d_f * f[j] * (1.0 - f[j]);
            da[O][j] = d_o * o[j] * (1.0 - o[j]);
            da[G][j] = d_g * (1.0 - g[j] * g[j]);
        }
        let x = params.embedding.row(seq[t]);
        dx.iter_mut().for_each(|v| *v = 0.0);
        dh.iter_mut().for_each(|v| *v = 0.0);
        #[allow(clippy::needless_range_loop)]
        for k in 0..4 {
            for (gb, a) in grads.b[k].data.iter_mut().zip(&da[k]) {
                *gb += a;
            }
            grads.w[k].outer_acc(x, &da[k]);
            grads.u[k].outer_acc(h_prev, &da[k]);
            params.w[k].mul_vec_acc(&da[k], &mut dx);
            params.u[k].mul_vec_acc(&da[k], &mut dh);
        }
        for (ge, v) in grads.embedding.row_mut(seq[t]).iter_mut().zip(&dx) {
            *ge += v;
        }
    }
    (loss, hit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_net_outputs_zero() {
        let p = LstmParams::zeros(Dims::new(5, 3, 4, 2));
        let out = lstm_forward(&p, &[1, 2, 3, 4]).unwrap();
        assert!(out.logits.iter().all(|&z| z == 0.0));
        assert!(out.hidden.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn single_step_hand_example() {
        let mut p = LstmParams::zeros(Dims::new(1, 1, 1, 1));
        p.embedding.set(0, 0, 1.0);
        p.w[G].set(0, 0, 1.0);
        let mut trace = Trace {
            h: vec![vec![0.0]],
            c: vec![vec![0.0]],
            gates: vec![],
        };
        let out = run(&p, &[0], Some(&mut trace));
        let g = 1f64.tanh();
        let c = 0.5 * g;
        assert!(close(g, 0.76159, 5e-6));
        assert!(close(trace.c[1][0], 0.38080, 5e-6));
        assert!(close(out.hidden[0], 0.18170, 5e-6));
        assert_eq!(trace.c[1][0], c);
        assert_eq!(out.hidden[0], 0.5 * c.tanh());
    }

    #[test]
    fn order_matters_on_random_net() {
        let p = LstmParams::random(Dims::new(6, 3, 4, 2), 0.5, &mut SeededRng::new(3));
        let a = lstm_forward(&p, &[2, 5]).unwrap();
        let b = lstm_forward(&p, &[5, 2]).unwrap();
        assert_ne!(a.hidden, b.hidden);
    }

    #[test]
    fn zero_net_output_bias_gradient_is_half() {
        let p = LstmParams::zeros(Dims::new(3, 2, 2, 2));
        let g = lstm_gradients(&p, &[(vec![1, 2], 0)]).unwrap();
        assert_eq!(g.grads.b_y.data(), [-0.5, 0.5]);
        assert!(close(g.loss, std::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn duplicated_batch_has_same_mean_gradient() {
        let p = LstmParams::random(Dims::new(7, 3, 4, 3), 0.3, &mut SeededRng::new(11));
        let batch = vec![(vec![1, 2, 3], 0), (vec![4], 2), (vec![6, 6, 0, 5], 1)];
        let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let a = lstm_gradients(&p, &batch).unwrap();
        let b = lstm_gradients(&p, &doubled).unwrap();
        for ((_, x), (_, y)) in a.grads.tensors().into_iter().zip(b.grads.tensors()) {
            for (u, v) in x.data().iter().zip(y.data()) {
                assert!(close(*u, *v, 1e-14 * (1.0 + u.abs())));
            }
        }
        assert!(close(a.loss, b.loss, 1e-14));
    }

    #[test]
    fn unused_embedding_rows_get_no_gradient() {
        let p = LstmParams::random(Dims::new(5, 2, 3, 2), 0.3, &mut SeededRng::new(1));
        let g = lstm_gradients(&p, &[(vec![2, 3], 1)]).unwrap();
        for r in [0, 1, 4] {
            assert!(g.grads.embedding.row(r).iter().all(|&x| x == 0.0));
        }
        assert!(g.grads.embedding.row(2).iter().any(|&x| x != 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = LstmParams::zeros(Dims::new(3, 2, 2, 2));
        assert!(matches!(lstm_forward(&p, &[]), Err(TextModelError::EmptySequence)));
        assert!(matches!(
            lstm_forward(&p, &[3]),
            Err(TextModelError::IndexOutOfRange { index: 3, vocab: 3 })
        ));
        assert!(matches!(lstm_gradients(&p, &[]), Err(TextModelError::EmptyBatch)));
        assert!(matches!(
            lstm_gradients(&p, &[(vec![0], 2)]),
            Err(TextModelError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn random_init_bumps_forget_bias() {
        let p = LstmParams::random(Dims::new(4, 2, 3, 2), 0.05, &mut SeededRng::new(0));
        assert!(p.b[F].data().iter().all(|&x| (0.95..1.05).contains(&x)));
        assert!(p.b[I].data().iter().all(|&x| x.abs() < 0.05));
        p.validate().unwrap();
        assert_eq!(p.param_count(), 4 * 2 + 4 * (2 * 3 + 3 * 3 + 3) + 3 * 2 + 2);
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!(close(p[0], 0.5, 1e-15) && p[2] >= 0.0);
        assert!(close(p.iter().sum::<f64>(), 1.0, 1e-12));
    }
}
