//! Central finite differences, used to check tape gradients.
//!
//! Nothing here touches the tape: the loss is re-evaluated from scratch at
//! perturbed parameter values.

use super::{ParamId, ParamStore};

/// Floor applied to the denominator of [`relative_error`] so that
/// coordinates with vanishing gradient are compared absolutely.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// `(f(θ + h·eₖ) − f(θ − h·eₖ)) / 2h` for coordinate `k` of parameter `id`.
/// The parameter value is restored before returning.
pub fn central_difference<F>(store: &mut ParamStore, id: ParamId, k: usize, h: f64, f: F) -> f64
where
    F: Fn(&ParamStore) -> f64,
{
    let orig = store.value(id).data()[k];
    store.value_mut(id).data_mut()[k] = orig + h;
    let plus = f(store);
    store.value_mut(id).data_mut()[k] = orig - h;
    let minus = f(store);
    store.value_mut(id).data_mut()[k] = orig;
    (plus - minus) / (2.0 * h)
}

/// `|a − b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}
