//! A membership-inference attack laboratory for small feedforward
//! classifiers.
//!
//! The crate trains dense softmax classifiers from scratch, splits them into
//! shallow/deep stacks for transfer learning, builds shadow-model ensembles
//! (optionally seeded from a leaked shallow stack), and mounts
//! membership-inference adversaries against a black-box source model:
//! learning-based attacks (a small DNN or a linear SVM per class) and an
//! entropy-threshold attack over the modified prediction entropy. Evaluation
//! reports balanced accuracy, precision, recall, and membership advantage.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the common `f64` instantiations used by the experiment runner.

pub mod attacks;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod shadow;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations; the wire formats store 64-bit floats, so these are
/// the default working types.
pub type Net64 = nn::LayeredNet<f64>;
pub type Stack64 = nn::LayerStack<f64>;
pub type Dataset64 = data::LabeledDataset<f64>;
pub type Adversary64 = attacks::Adversary<f64>;
pub type Ensemble64 = shadow::ShadowEnsemble<f64>;

/// `f32` instantiations for memory-lean experimentation.
pub type Net32 = nn::LayeredNet<f32>;
pub type Stack32 = nn::LayerStack<f32>;
pub type Dataset32 = data::LabeledDataset<f32>;
