//! Numerical verification of the analytic gradients.

use crate::error::Result;
use crate::nn::train::{backprop_sample, GradBuffers, Workspace};
use crate::nn::{cross_entropy, LayeredNet};
use crate::scalar::{cast, Scalar};

/// Analytic gradients of the softmax cross-entropy loss for one layer.
#[derive(Debug, Clone)]
pub struct LayerGrads<S: Scalar> {
    pub weights: Vec<S>,
    pub biases: Vec<S>,
}

/// Analytic per-parameter gradients of `cross_entropy(forward(x), label)`.
pub fn loss_gradients<S: Scalar>(
    net: &LayeredNet<S>,
    x: &[S],
    label: usize,
) -> Result<Vec<LayerGrads<S>>> {
    let mut grads = GradBuffers::zeroed_like(net);
    let mut ws = Workspace::for_net(net);
    backprop_sample(net, x, label, &mut ws, &mut grads)?;
    Ok(grads
        .weights
        .into_iter()
        .zip(grads.biases)
        .map(|(weights, biases)| LayerGrads { weights, biases })
        .collect())
}

fn sample_loss<S: Scalar>(net: &LayeredNet<S>, x: &[S], label: usize) -> Result<f64> {
    let v = net.forward(x)?;
    Ok(cross_entropy(&v, label)?.to_f64().unwrap_or(f64::NAN))
}

/// Compares every analytic parameter gradient against a central finite
/// difference of step `eps` and returns the maximum relative error, with
/// relative error `|a - n| / max(|a|, |n|, 1e-8)`.
#[allow(clippy::needless_range_loop)]
pub fn gradient_check<S: Scalar>(
    net: &LayeredNet<S>,
    sample: (&[S], usize),
    eps: f64,
) -> Result<f64> {
    let (x, label) = sample;
    let analytic = loss_gradients(net, x, label)?;
    let step = cast::<S>(eps);
    let mut worst = 0.0f64;

    let mut probe = net.clone();
    for li in 0..net.num_layers() {
        let wcount = net.layers()[li].weights().len();
        for p in 0..wcount {
            let original = probe.layers()[li].weights()[p];
            probe.layers_mut()[li].weights_mut()[p] = original + step;
            let plus = sample_loss(&probe, x, label)?;
            probe.layers_mut()[li].weights_mut()[p] = original - step;
            let minus = sample_loss(&probe, x, label)?;
            probe.layers_mut()[li].weights_mut()[p] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[li].weights[p].to_f64().unwrap_or(f64::NAN);
            worst = worst.max(relative_error(a, numeric));
        }
        let bcount = net.layers()[li].biases().len();
        for p in 0..bcount {
            let original = probe.layers()[li].biases()[p];
            probe.layers_mut()[li].biases_mut()[p] = original + step;
            let plus = sample_loss(&probe, x, label)?;
            probe.layers_mut()[li].biases_mut()[p] = original - step;
            let minus = sample_loss(&probe, x, label)?;
            probe.layers_mut()[li].biases_mut()[p] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[li].biases[p].to_f64().unwrap_or(f64::NAN);
            worst = worst.max(relative_error(a, numeric));
        }
    }
    Ok(worst)
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}
