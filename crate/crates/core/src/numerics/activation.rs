use super::real::Real;
use super::tensor::Tensor;

/// Logistic sigmoid, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let z = x.exp();
        z / (R::one() + z)
    }
}

/// `x · σ(x)`.
#[inline]
pub fn swish_scalar<R: Real>(x: R) -> R {
    x * sigmoid(x)
}

/// `σ(x) + x · σ(x) · (1 − σ(x))`.
#[inline]
pub fn swish_derivative<R: Real>(x: R) -> R {
    let s = sigmoid(x);
    s + x * s * (R::one() - s)
}

pub fn swish<R: Real>(x: &Tensor<R>) -> Tensor<R> {
    x.map(swish_scalar)
}

/// Elementwise derivative of [`swish`] at `x`.
pub fn swish_grad<R: Real>(x: &Tensor<R>) -> Tensor<R> {
    x.map(swish_derivative)
}
