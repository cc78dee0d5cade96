//! Linear SVM trained by Pegasos-style subgradient descent on the
//! L2-regularized hinge loss.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::shadow::Membership;

/// Hyperparameters for the subgradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    /// Passes over the data.
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lambda: 1e-3, epochs: 200 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidInput("lambda must be positive and finite".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// A linear decision rule `w . x + b > 0 => In`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: S,
    pub lambda: f64,
}

impl<S: Scalar> LinearSvm<S> {
    pub fn decide(&self, x: &[S]) -> Result<Membership> {
        if x.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "input dimension {} does not match the model's {}",
                x.len(),
                self.weights.len()
            )));
        }
        let mut score = self.bias;
        for (w, v) in self.weights.iter().zip(x.iter()) {
            score += *w * *v;
        }
        Ok(if score > S::zero() { Membership::In } else { Membership::Out })
    }
}

/// Trains a binary linear SVM with Pegasos updates.
///
/// The weight vector starts at zero and samples are visited cyclically in
/// their given order, so training is fully deterministic and equivariant
/// under any consistent permutation of the input coordinates. The step size
/// at update `t` is `1 / (lambda * t)`; the bias follows the hinge
/// subgradient unregularized.
pub fn train_svm<S: Scalar>(
    samples: &[(&[S], Membership)],
    cfg: &SvmConfig,
) -> Result<LinearSvm<S>> {
    cfg.validate()?;
    let dim = samples
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::InvalidInput("cannot train an SVM on no samples".into()))?;
    if samples.iter().any(|(x, _)| x.len() != dim) {
        return Err(Error::InvalidInput("samples have mixed dimensions".into()));
    }

    let lambda = cast::<S>(cfg.lambda);
    let mut weights = vec![S::zero(); dim];
    let mut bias = S::zero();
    let mut t: u64 = 0;

    for _ in 0..cfg.epochs {
        for (x, tag) in samples {
            t += 1;
            let eta = S::one() / (lambda * cast::<S>(t as f64));
            let y = match tag {
                Membership::In => S::one(),
                Membership::Out => -S::one(),
            };
            let mut score = bias;
            for (w, v) in weights.iter().zip(x.iter()) {
                score += *w * *v;
            }
            let shrink = S::one() - eta * lambda;
            if y * score < S::one() {
                for (w, v) in weights.iter_mut().zip(x.iter()) {
                    *w = shrink * *w + eta * y * *v;
                }
                bias += eta * y;
            } else {
                for w in weights.iter_mut() {
                    *w = shrink * *w;
                }
            }
        }
    }

    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::NonFinite("SVM parameters diverged".into()));
    }
    Ok(LinearSvm { weights, bias, lambda: cfg.lambda })
}

/// Fraction of samples the model tags correctly.
pub fn svm_accuracy<S: Scalar>(model: &LinearSvm<S>, samples: &[(&[S], Membership)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to score".into()));
    }
    let mut hits = 0usize;
    for (x, tag) in samples {
        if model.decide(x)? == *tag {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
