//! Dense tensors and the fixed operator set the model is built from:
//! Swish, affine maps, residual BiLSTM stacks, softmax cross-entropy,
//! AdamW and a finite-difference gradient checker.
//!
//! Every operator is generic over [`Real`], so the same code runs in 32-bit
//! for training and in 64-bit for gradient verification.

use alloc::string::String;
use alloc::vec::Vec;

mod activation;
mod gradcheck;
mod linear;
mod loss;
mod lstm;
mod optim;
mod param;
mod real;
mod tensor;

pub use activation::{sigmoid, swish, swish_derivative, swish_grad, swish_scalar};
pub use gradcheck::{grad_check, relative_error, GradCheckError, GradCheckReport};
pub use linear::{linear, linear_backward, Linear, SwishLinear, SwishLinearCache};
pub use loss::softmax_cross_entropy;
pub use lstm::{
    bilstm, bilstm_backward, BiLstm, BiLstmCache, LstmDirection, LstmGrads, LstmWeights, ResidualBiLstmStack,
    StackCache,
};
pub use optim::{AdamW, AdamWConfig};
pub use param::{ParamId, ParamStore, Parameter};
pub use real::{Precision, Real};
pub use tensor::{argmax, Tensor};


#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("{op}: shape mismatch, expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("row {row}: target {target} out of range for {classes} classes")]
    TargetOutOfRange { row: usize, target: usize, classes: usize },
    #[error("parameter {0:?} registered twice")]
    DuplicateParameter(String),
    #[error("recurrent layer applied to an empty sequence")]
    EmptySequence,
}
