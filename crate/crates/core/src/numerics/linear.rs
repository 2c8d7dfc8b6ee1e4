use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::activation::{swish_derivative, swish_scalar};
use super::param::{ParamId, ParamStore};
use super::real::Real;
use super::tensor::Tensor;
use super::NumericsError;

/// `y_i = W x_i + bias` for every row `x_i` of `x` (`n × a`), with `W` of
/// shape `b × a`.
pub fn linear<R: Real>(x: &Tensor<R>, weight: &Tensor<R>, bias: &Tensor<R>) -> Result<Tensor<R>, NumericsError> {
    let (n, a) = (x.rows(), x.cols());
    let (b, wa) = (weight.rows(), weight.cols());
    if wa != a || bias.len() != b {
        return Err(NumericsError::ShapeMismatch {
            op: "linear",
            expected: vec![b, a, b],
            found: vec![weight.rows(), weight.cols(), bias.len()],
        });
    }
    let w = weight.data();
    let bias = bias.data();
    let mut out = Vec::with_capacity(n * b);
    for i in 0..n {
        let xi = x.row(i);
        for (k, &bk) in bias.iter().enumerate() {
            out.push(bk + dot(&w[k * a..(k + 1) * a], xi));
        }
    }
    Ok(Tensor::matrix(n, b, out))
}

/// Exact gradients of [`linear`]: returns `(dx, dW, dbias)` for upstream `dy`.
pub fn linear_backward<R: Real>(
    x: &Tensor<R>,
    weight: &Tensor<R>,
    dy: &Tensor<R>,
) -> (Tensor<R>, Tensor<R>, Tensor<R>) {
    let mut dw = Tensor::zeros(weight.shape());
    let mut db = Tensor::zeros(&[weight.rows()]);
    let dx = linear_backward_into(x, weight, dy, dw.data_mut(), db.data_mut());
    (dx, dw, db)
}

/// Like [`linear_backward`] but accumulates `dW` and `dbias` in place.
pub(crate) fn linear_backward_into<R: Real>(
    x: &Tensor<R>,
    weight: &Tensor<R>,
    dy: &Tensor<R>,
    dw: &mut [R],
    db: &mut [R],
) -> Tensor<R> {
    let (n, a) = (x.rows(), x.cols());
    let b = weight.rows();
    let w = weight.data();
    let mut dx = vec![R::zero(); n * a];
    for i in 0..n {
        let xi = x.row(i);
        let dyi = dy.row(i);
        let dxi = &mut dx[i * a..(i + 1) * a];
        for k in 0..b {
            let g = dyi[k];
            if g == R::zero() {
                continue;
            }
            db[k] += g;
            axpy(g, xi, &mut dw[k * a..(k + 1) * a]);
            axpy(g, &w[k * a..(k + 1) * a], dxi);
        }
    }
    Tensor::matrix(n, a, dx)
}

#[inline]
pub(crate) fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    let mut s = R::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `y += alpha · x`
#[inline]
pub(crate) fn axpy<R: Real>(alpha: R, x: &[R], y: &mut [R]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// An affine layer whose weight and bias live in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Registers `{prefix}.W` (`out × in`) and `{prefix}.b` (`out`).
    pub fn new<R: Real>(
        store: &mut ParamStore<R>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NumericsError> {
        let weight = store.add_uniform(format!("{prefix}.W"), &[out_dim, in_dim], in_dim, rng)?;
        let bias = store.add(format!("{prefix}.b"), Tensor::zeros(&[out_dim]))?;
        Ok(Linear {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn forward<R: Real>(&self, store: &ParamStore<R>, x: &Tensor<R>) -> Result<Tensor<R>, NumericsError> {
        linear(x, store.value(self.weight), store.value(self.bias))
    }

    /// Accumulates parameter gradients and returns `dx`.
    pub fn backward<R: Real>(&self, store: &mut ParamStore<R>, x: &Tensor<R>, dy: &Tensor<R>) -> Tensor<R> {
        let mut dw = core::mem::replace(store.grad_mut(self.weight), Tensor::zeros(&[0]));
        let mut db = core::mem::replace(store.grad_mut(self.bias), Tensor::zeros(&[0]));
        let dx = linear_backward_into(x, store.value(self.weight), dy, dw.data_mut(), db.data_mut());
        *store.grad_mut(self.weight) = dw;
        *store.grad_mut(self.bias) = db;
        dx
    }

    pub fn param_names<R: Real>(&self, store: &ParamStore<R>) -> [String; 2] {
        [
            store.get(self.weight).name.clone(),
            store.get(self.bias).name.clone(),
        ]
    }
}

/// `Swish(W x + b)`, the shape of every representation layer in the model.
#[derive(Clone, Debug, PartialEq)]
pub struct SwishLinear {
    pub affine: Linear,
}

/// Values kept from [`SwishLinear::forward`] for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct SwishLinearCache<R> {
    pub pre_activation: Tensor<R>,
}

impl SwishLinear {
    pub fn new<R: Real>(
        store: &mut ParamStore<R>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NumericsError> {
        Ok(SwishLinear {
            affine: Linear::new(store, prefix, in_dim, out_dim, rng)?,
        })
    }

    pub fn forward<R: Real>(
        &self,
        store: &ParamStore<R>,
        x: &Tensor<R>,
    ) -> Result<(Tensor<R>, SwishLinearCache<R>), NumericsError> {
        let z = self.affine.forward(store, x)?;
        let y = z.map(swish_scalar);
        Ok((y, SwishLinearCache { pre_activation: z }))
    }

    pub fn backward<R: Real>(
        &self,
        store: &mut ParamStore<R>,
        x: &Tensor<R>,
        cache: &SwishLinearCache<R>,
        dy: &Tensor<R>,
    ) -> Tensor<R> {
        let mut dz = dy.clone();
        for (g, &z) in dz.data_mut().iter_mut().zip(cache.pre_activation.data()) {
            *g *= swish_derivative(z);
        }
        self.affine.backward(store, x, &dz)
    }
}
