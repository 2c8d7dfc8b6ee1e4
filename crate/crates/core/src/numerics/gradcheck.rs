use alloc::string::String;
use alloc::vec::Vec;

use super::param::{ParamId, ParamStore};
use super::real::Real;

/// Worst disagreement found by [`grad_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat index where the maximum occurred.
    pub worst: Option<(String, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GradCheckError<E> {
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("loss evaluation failed: {0}")]
    Loss(E),
}

/// Relative error with the denominator floored at `1e-8`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients with central differences for every
/// trainable scalar in `store`.
///
/// `loss_fn` must compute the loss and accumulate gradients into the store;
/// grads are zeroed before the analytic call. Perturbed evaluations ignore
/// whatever gradients `loss_fn` writes.
pub fn grad_check<R, E, F>(store: &mut ParamStore<R>, eps: f64, mut loss_fn: F) -> Result<GradCheckReport, GradCheckError<E>>
where
    R: Real,
    F: FnMut(&mut ParamStore<R>) -> Result<R, E>,
{
    store.zero_grads();
    let base = loss_fn(store).map_err(GradCheckError::Loss)?;
    if !base.is_finite() {
        return Err(GradCheckError::NonFiniteLoss);
    }
    let analytic: Vec<Vec<R>> = store.iter().map(|p| p.grad.data().to_vec()).collect();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let step = R::of(eps);
    for (idx, grads) in analytic.iter().enumerate() {
        let id = ParamId(idx);
        if !store.get(id).trainable {
            continue;
        }
        for (k, &a) in grads.iter().enumerate() {
            let original = store.value(id).data()[k];
            store.get_mut(id).value.data_mut()[k] = original + step;
            let plus = loss_fn(store).map_err(GradCheckError::Loss)?;
            store.get_mut(id).value.data_mut()[k] = original - step;
            let minus = loss_fn(store).map_err(GradCheckError::Loss)?;
            store.get_mut(id).value.data_mut()[k] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(GradCheckError::NonFiniteLoss);
            }
            let numeric = (plus.as_f64() - minus.as_f64()) / (2.0 * eps);
            let a = a.as_f64();
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((store.get(id).name.clone(), k));
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
