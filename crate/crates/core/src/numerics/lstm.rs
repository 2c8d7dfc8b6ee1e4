//! Bidirectional LSTM with exact backpropagation through time.
//!
//! Cell, per direction, with gates stacked as `[input, forget, candidate, output]`
//! in the rows of `W_ih` (`4h × in`), `W_hh` (`4h × h`) and `b` (`4h`):
//!
//! ```text
//! z_t = W_ih x_t + W_hh h_{t-1} + b
//! i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Initial hidden and cell states are zero. The backward direction runs the
//! same cell over the reversed sequence; its state at position `i` is the
//! state after consuming tokens `n-1 ..= i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::activation::sigmoid;
use super::linear::{axpy, dot};
use super::param::{ParamId, ParamStore};
use super::real::Real;
use super::tensor::Tensor;
use super::NumericsError;

/// Borrowed weights of one LSTM direction.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a, R> {
    pub w_ih: &'a Tensor<R>,
    pub w_hh: &'a Tensor<R>,
    pub bias: &'a Tensor<R>,
}

impl<R: Real> LstmWeights<'_, R> {
    fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    fn check(&self, in_dim: usize) -> Result<usize, NumericsError> {
        let h = self.hidden();
        let ok = self.w_hh.rows() == 4 * h
            && self.w_ih.rows() == 4 * h
            && self.w_ih.cols() == in_dim
            && self.bias.len() == 4 * h;
        if ok {
            Ok(h)
        } else {
            Err(NumericsError::ShapeMismatch {
                op: "lstm",
                expected: vec![4 * h, in_dim, 4 * h, h, 4 * h],
                found: vec![
                    self.w_ih.rows(),
                    self.w_ih.cols(),
                    self.w_hh.rows(),
                    self.w_hh.cols(),
                    self.bias.len(),
                ],
            })
        }
    }
}

/// Per-position activations of one direction, indexed by original position.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCache<R> {
    gates: Vec<R>,
    cells: Vec<R>,
    cell_tanh: Vec<R>,
    hidden: Vec<R>,
    reverse: bool,
}

/// Activations kept for [`bilstm_backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmCache<R> {
    fwd: DirectionCache<R>,
    bwd: DirectionCache<R>,
}

fn order(n: usize, reverse: bool) -> Vec<usize> {
    if reverse {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    }
}

fn run_direction<R: Real>(x: &Tensor<R>, w: &LstmWeights<'_, R>, reverse: bool) -> Result<DirectionCache<R>, NumericsError> {
    let n = x.rows();
    let in_dim = x.cols();
    let h = w.check(in_dim)?;
    let mut cache = DirectionCache {
        gates: vec![R::zero(); n * 4 * h],
        cells: vec![R::zero(); n * h],
        cell_tanh: vec![R::zero(); n * h],
        hidden: vec![R::zero(); n * h],
        reverse,
    };
    let w_ih = w.w_ih.data();
    let w_hh = w.w_hh.data();
    let bias = w.bias.data();
    let zeros = vec![R::zero(); h];
    let mut prev: Option<usize> = None;
    let mut z = vec![R::zero(); 4 * h];
    for t in order(n, reverse) {
        let xt = x.row(t);
        let (h_prev, c_prev) = match prev {
            Some(p) => (
                cache.hidden[p * h..(p + 1) * h].to_vec(),
                cache.cells[p * h..(p + 1) * h].to_vec(),
            ),
            None => (zeros.clone(), zeros.clone()),
        };
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = bias[r] + dot(&w_ih[r * in_dim..(r + 1) * in_dim], xt) + dot(&w_hh[r * h..(r + 1) * h], &h_prev);
        }
        let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[h + k]);
            let g = z[2 * h + k].tanh();
            let o = sigmoid(z[3 * h + k]);
            gates[k] = i;
            gates[h + k] = f;
            gates[2 * h + k] = g;
            gates[3 * h + k] = o;
            let c = f * c_prev[k] + i * g;
            let ct = c.tanh();
            cache.cells[t * h + k] = c;
            cache.cell_tanh[t * h + k] = ct;
            cache.hidden[t * h + k] = o * ct;
        }
        prev = Some(t);
    }
    Ok(cache)
}

struct DirectionGrads<'g, R> {
    w_ih: &'g mut [R],
    w_hh: &'g mut [R],
    bias: &'g mut [R],
}

/// BPTT for one direction. `dh` holds the upstream gradient for this
/// direction's hidden state at each position (`n × h`). Returns `dx`.
fn direction_backward<R: Real>(
    x: &Tensor<R>,
    w: &LstmWeights<'_, R>,
    cache: &DirectionCache<R>,
    dh: &[R],
    grads: DirectionGrads<'_, R>,
) -> Tensor<R> {
    let n = x.rows();
    let in_dim = x.cols();
    let h = w.hidden();
    let w_ih = w.w_ih.data();
    let w_hh = w.w_hh.data();
    let mut dx = vec![R::zero(); n * in_dim];
    let mut dh_next = vec![R::zero(); h];
    let mut dc_next = vec![R::zero(); h];
    let mut dz = vec![R::zero(); 4 * h];
    let steps = order(n, cache.reverse);
    let zeros = vec![R::zero(); h];
    for (k, &t) in steps.iter().enumerate().rev() {
        let prev = if k > 0 { Some(steps[k - 1]) } else { None };
        let c_prev = prev.map_or(&zeros[..], |p| &cache.cells[p * h..(p + 1) * h]);
        let h_prev = prev.map_or(&zeros[..], |p| &cache.hidden[p * h..(p + 1) * h]);
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let one = R::one();
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let ct = cache.cell_tanh[t * h + j];
            let dht = dh[t * h + j] + dh_next[j];
            let d_o = dht * ct;
            let dc = dht * o * (one - ct * ct) + dc_next[j];
            let di = dc * g;
            let dg = dc * i;
            let df = dc * c_prev[j];
            dc_next[j] = dc * f;
            dz[j] = di * i * (one - i);
            dz[h + j] = df * f * (one - f);
            dz[2 * h + j] = dg * (one - g * g);
            dz[3 * h + j] = d_o * o * (one - o);
        }
        let xt = x.row(t);
        let dxt = &mut dx[t * in_dim..(t + 1) * in_dim];
        dh_next.iter_mut().for_each(|v| *v = R::zero());
        for (r, &g) in dz.iter().enumerate() {
            if g == R::zero() {
                continue;
            }
            grads.bias[r] += g;
            axpy(g, xt, &mut grads.w_ih[r * in_dim..(r + 1) * in_dim]);
            axpy(g, h_prev, &mut grads.w_hh[r * h..(r + 1) * h]);
            axpy(g, &w_ih[r * in_dim..(r + 1) * in_dim], dxt);
            axpy(g, &w_hh[r * h..(r + 1) * h], &mut dh_next);
        }
    }
    Tensor::matrix(n, in_dim, dx)
}

/// Runs both directions over `x` (`n × in`) and returns `n × 2h` rows
/// `[forward_i | backward_i]`.
pub fn bilstm<R: Real>(
    x: &Tensor<R>,
    fwd: &LstmWeights<'_, R>,
    bwd: &LstmWeights<'_, R>,
) -> Result<(Tensor<R>, BiLstmCache<R>), NumericsError> {
    if x.rows() == 0 {
        return Err(NumericsError::EmptySequence);
    }
    let f = run_direction(x, fwd, false)?;
    let b = run_direction(x, bwd, true)?;
    let (hf, hb) = (fwd.hidden(), bwd.hidden());
    let n = x.rows();
    let mut out = Vec::with_capacity(n * (hf + hb));
    for i in 0..n {
        out.extend_from_slice(&f.hidden[i * hf..(i + 1) * hf]);
        out.extend_from_slice(&b.hidden[i * hb..(i + 1) * hb]);
    }
    Ok((Tensor::matrix(n, hf + hb, out), BiLstmCache { fwd: f, bwd: b }))
}

/// Gradients of one direction's weights, shaped like the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmGrads<R> {
    pub w_ih: Tensor<R>,
    pub w_hh: Tensor<R>,
    pub bias: Tensor<R>,
}

impl<R: Real> LstmGrads<R> {
    pub fn zeros_like(w: &LstmWeights<'_, R>) -> Self {
        LstmGrads {
            w_ih: Tensor::zeros(w.w_ih.shape()),
            w_hh: Tensor::zeros(w.w_hh.shape()),
            bias: Tensor::zeros(w.bias.shape()),
        }
    }
}

/// Exact backward pass of [`bilstm`]. Accumulates into `gf`/`gb` and returns `dx`.
pub fn bilstm_backward<R: Real>(
    x: &Tensor<R>,
    fwd: &LstmWeights<'_, R>,
    bwd: &LstmWeights<'_, R>,
    cache: &BiLstmCache<R>,
    dy: &Tensor<R>,
    gf: &mut LstmGrads<R>,
    gb: &mut LstmGrads<R>,
) -> Tensor<R> {
    let n = x.rows();
    let (hf, hb) = (fwd.hidden(), bwd.hidden());
    let mut dhf = Vec::with_capacity(n * hf);
    let mut dhb = Vec::with_capacity(n * hb);
    for i in 0..n {
        let row = dy.row(i);
        dhf.extend_from_slice(&row[..hf]);
        dhb.extend_from_slice(&row[hf..]);
    }
    let mut dx = direction_backward(
        x,
        fwd,
        &cache.fwd,
        &dhf,
        DirectionGrads {
            w_ih: gf.w_ih.data_mut(),
            w_hh: gf.w_hh.data_mut(),
            bias: gf.bias.data_mut(),
        },
    );
    let dxb = direction_backward(
        x,
        bwd,
        &cache.bwd,
        &dhb,
        DirectionGrads {
            w_ih: gb.w_ih.data_mut(),
            w_hh: gb.w_hh.data_mut(),
            bias: gb.bias.data_mut(),
        },
    );
    dx.add_assign(&dxb);
    dx
}

/// Parameter handles of one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmDirection {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
}

impl LstmDirection {
    fn new<R: Real>(
        store: &mut ParamStore<R>,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NumericsError> {
        let w_ih = store.add_uniform(format!("{prefix}.W_ih"), &[4 * hidden, in_dim], in_dim, rng)?;
        let w_hh = store.add_uniform(format!("{prefix}.W_hh"), &[4 * hidden, hidden], hidden, rng)?;
        let mut b = Tensor::zeros(&[4 * hidden]);
        // forget gate starts open
        b.data_mut()[hidden..2 * hidden].iter_mut().for_each(|v| *v = R::one());
        let bias = store.add(format!("{prefix}.b"), b)?;
        Ok(LstmDirection { w_ih, w_hh, bias })
    }

    fn weights<'a, R: Real>(&self, store: &'a ParamStore<R>) -> LstmWeights<'a, R> {
        LstmWeights {
            w_ih: store.value(self.w_ih),
            w_hh: store.value(self.w_hh),
            bias: store.value(self.bias),
        }
    }

    fn take_grads<R: Real>(&self, store: &mut ParamStore<R>) -> LstmGrads<R> {
        let empty = || Tensor::zeros(&[0]);
        LstmGrads {
            w_ih: core::mem::replace(store.grad_mut(self.w_ih), empty()),
            w_hh: core::mem::replace(store.grad_mut(self.w_hh), empty()),
            bias: core::mem::replace(store.grad_mut(self.bias), empty()),
        }
    }

    fn put_grads<R: Real>(&self, store: &mut ParamStore<R>, g: LstmGrads<R>) {
        *store.grad_mut(self.w_ih) = g.w_ih;
        *store.grad_mut(self.w_hh) = g.w_hh;
        *store.grad_mut(self.bias) = g.bias;
    }
}

/// One BiLSTM layer registered in a [`ParamStore`] as
/// `{prefix}.fwd.{W_ih,W_hh,b}` and `{prefix}.bwd.{W_ih,W_hh,b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
    pub in_dim: usize,
    pub hidden: usize,
}

impl BiLstm {
    pub fn new<R: Real>(
        store: &mut ParamStore<R>,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NumericsError> {
        let fwd = LstmDirection::new(store, &format!("{prefix}.fwd"), in_dim, hidden, rng)?;
        let bwd = LstmDirection::new(store, &format!("{prefix}.bwd"), in_dim, hidden, rng)?;
        Ok(BiLstm {
            fwd,
            bwd,
            in_dim,
            hidden,
        })
    }

    pub fn out_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn forward<R: Real>(
        &self,
        store: &ParamStore<R>,
        x: &Tensor<R>,
    ) -> Result<(Tensor<R>, BiLstmCache<R>), NumericsError> {
        bilstm(x, &self.fwd.weights(store), &self.bwd.weights(store))
    }

    pub fn backward<R: Real>(
        &self,
        store: &mut ParamStore<R>,
        x: &Tensor<R>,
        cache: &BiLstmCache<R>,
        dy: &Tensor<R>,
    ) -> Tensor<R> {
        let mut gf = self.fwd.take_grads(store);
        let mut gb = self.bwd.take_grads(store);
        let dx = bilstm_backward(
            x,
            &self.fwd.weights(store),
            &self.bwd.weights(store),
            cache,
            dy,
            &mut gf,
            &mut gb,
        );
        self.fwd.put_grads(store, gf);
        self.bwd.put_grads(store, gb);
        dx
    }
}

/// Residual BiLSTM stack: `x^0 = input`, `x^j = x^{j-1} ⊕ BiLSTM^j(x^{j-1})`.
///
/// Output width is `in_dim + 2·hidden·layers`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBiLstmStack {
    pub layers: Vec<BiLstm>,
    pub in_dim: usize,
    pub hidden: usize,
}

/// Inputs to every layer of a [`ResidualBiLstmStack`] plus their caches.
#[derive(Clone, Debug, PartialEq)]
pub struct StackCache<R> {
    inputs: Vec<Tensor<R>>,
    caches: Vec<BiLstmCache<R>>,
}

impl ResidualBiLstmStack {
    pub fn new<R: Real>(
        store: &mut ParamStore<R>,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        layers: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NumericsError> {
        let mut out = Vec::with_capacity(layers);
        let mut width = in_dim;
        for j in 0..layers {
            out.push(BiLstm::new(store, &format!("{prefix}.bilstm{j}"), width, hidden, rng)?);
            width += 2 * hidden;
        }
        Ok(ResidualBiLstmStack {
            layers: out,
            in_dim,
            hidden,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.in_dim + 2 * self.hidden * self.layers.len()
    }

    pub fn forward<R: Real>(
        &self,
        store: &ParamStore<R>,
        x: &Tensor<R>,
    ) -> Result<(Tensor<R>, StackCache<R>), NumericsError> {
        let mut cache = StackCache {
            inputs: Vec::with_capacity(self.layers.len()),
            caches: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.clone();
        for layer in &self.layers {
            let (y, c) = layer.forward(store, &current)?;
            let next = Tensor::concat_cols(&[&current, &y])?;
            cache.inputs.push(current);
            cache.caches.push(c);
            current = next;
        }
        Ok((current, cache))
    }

    pub fn backward<R: Real>(&self, store: &mut ParamStore<R>, cache: &StackCache<R>, dy: &Tensor<R>) -> Tensor<R> {
        let mut grad = dy.clone();
        for (j, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[j];
            let w = input.cols();
            let mut d_prev = grad.slice_cols(0, w);
            let d_layer = grad.slice_cols(w, layer.out_dim());
            let d_through = layer.backward(store, input, &cache.caches[j], &d_layer);
            d_prev.add_assign(&d_through);
            grad = d_prev;
        }
        grad
    }
}
