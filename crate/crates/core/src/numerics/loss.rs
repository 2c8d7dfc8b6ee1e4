use alloc::vec::Vec;

use super::real::Real;
use super::tensor::Tensor;
use super::NumericsError;

/// Mean cross-entropy of `softmax(logits)` against `targets` over the rows
/// selected by `mask`, and its gradient with respect to `logits`.
///
/// Rows with `mask[i] == false` contribute nothing and receive zero
/// gradient; their target is not inspected. With no selected rows the loss
/// is 0 and the gradient is all zeros.
pub fn softmax_cross_entropy<R: Real>(
    logits: &Tensor<R>,
    targets: &[usize],
    mask: &[bool],
) -> Result<(R, Tensor<R>), NumericsError> {
    let n = logits.rows();
    let c = logits.cols();
    if targets.len() != n || mask.len() != n {
        return Err(NumericsError::ShapeMismatch {
            op: "softmax_cross_entropy",
            expected: alloc::vec![n, n],
            found: alloc::vec![targets.len(), mask.len()],
        });
    }
    for (row, (&t, &m)) in targets.iter().zip(mask).enumerate() {
        if m && t >= c {
            return Err(NumericsError::TargetOutOfRange {
                row,
                target: t,
                classes: c,
            });
        }
    }
    let mut grad = Tensor::zeros(logits.shape());
    let selected = mask.iter().filter(|&&m| m).count();
    if selected == 0 {
        return Ok((R::zero(), grad));
    }
    let scale = R::one() / R::of(selected as f64);
    let mut total = R::zero();
    let mut probs: Vec<R> = Vec::with_capacity(c);
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(R::neg_infinity(), R::max);
        probs.clear();
        probs.extend(row.iter().map(|&z| (z - max).exp()));
        let sum: R = probs.iter().copied().sum();
        let log_sum = sum.ln() + max;
        total += log_sum - row[targets[i]];
        let g = grad.row_mut(i);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = probs[k] / sum * scale;
        }
        g[targets[i]] -= scale;
    }
    Ok((total * scale, grad))
}
