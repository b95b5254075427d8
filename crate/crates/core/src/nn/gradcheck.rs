use rand::seq::index::sample;

use super::Differentiable;
use crate::ingest::Label;
use crate::rng::ChaCha8Rng;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Outcome of comparing the analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters skipped because a ±h perturbation crossed a kink.
    pub skipped: usize,
}

/// `|a − n| / max(1, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Checks up to `max_params` randomly chosen parameters (all when the model
/// has fewer) of the regularized single-sample loss. Parameters are restored
/// afterwards.
pub fn grad_check<M: Differentiable>(
    model: &mut M,
    x: &M::Input,
    y: Label,
    l2: f64,
    max_params: usize,
    rng: &mut ChaCha8Rng,
) -> GradCheck {
    let (_, analytic) = model.loss_and_grad(x, y, l2);
    let base_sig = model.kink_signature(x);
    let n = model.params().len();
    let candidates = sample(rng, n, n).into_vec();
    let mut result = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for i in candidates {
        if result.checked == max_params {
            break;
        }
        let orig = model.params().get(i);
        model.params_mut().set(i, orig + FD_STEP);
        let plus = model.loss(x, y, l2);
        let plus_sig = model.kink_signature(x);
        model.params_mut().set(i, orig - FD_STEP);
        let minus = model.loss(x, y, l2);
        let minus_sig = model.kink_signature(x);
        model.params_mut().set(i, orig);
        if plus_sig != base_sig || minus_sig != base_sig {
            result.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic.get(i), numeric);
        result.max_rel_error = result.max_rel_error.max(err);
        result.checked += 1;
    }
    result
}
