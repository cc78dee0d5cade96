//! Modified prediction entropy.
//!
//! `ME(v, y) = -(1 - v_y) ln(v_y) - sum_{y' != y} v_{y'} ln(1 - v_{y'})`
//!
//! The score is 0 exactly when the correct class holds all the mass and
//! grows as mass leaks to other classes; low values therefore indicate
//! membership. Logs are clamped at [`PROB_CLAMP`](crate::scalar::PROB_CLAMP)
//! and the total saturates at [`entropy_saturation`], the stand-in for the
//! infinite score of a one-hot-incorrect prediction, so comparisons against
//! thresholds stay total.

use crate::error::{Error, Result};
use crate::scalar::{cast, entropy_saturation, Scalar, PROB_CLAMP};

/// Computes the (saturating) modified prediction entropy of a prediction
/// vector with respect to the true label.
pub fn modified_entropy<S: Scalar>(prediction: &[S], label: usize) -> Result<S> {
    if label >= prediction.len() {
        return Err(Error::InvalidInput(format!(
            "label {label} outside the {}-class prediction vector",
            prediction.len()
        )));
    }
    let clamp = cast::<S>(PROB_CLAMP);
    let one = S::one();

    let vy = prediction[label];
    let mut me = -(one - vy) * vy.max(clamp).ln();
    for (i, &p) in prediction.iter().enumerate() {
        if i != label {
            me -= p * (one - p).max(clamp).ln();
        }
    }
    Ok(me.min(entropy_saturation()))
}
