//! Versioned binary parameter blobs.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic       4 bytes  "TMIA"
//! version     u32      currently 1
//! layer_count u32
//! per layer:
//!   in_dim     u32
//!   out_dim    u32
//!   activation u8      0 = identity, 1 = relu, 2 = tanh
//!   weights    out_dim * in_dim f64, row-major
//!   biases     out_dim f64
//! split_index u32
//! ```
//!
//! Parameters are stored as 64-bit floats regardless of the working scalar
//! type; `f32 -> f64 -> f32` is exact, so round-trips are bit-exact for both
//! supported scalars. A shallow stack serializes as a net whose split index
//! equals its layer count.

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, LayeredNet};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"TMIA";
pub const FORMAT_VERSION: u32 = 1;

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1,
        Activation::Tanh => 2,
    }
}

fn activation_from_tag(tag: u8) -> Result<Activation> {
    match tag {
        0 => Ok(Activation::Identity),
        1 => Ok(Activation::Relu),
        2 => Ok(Activation::Tanh),
        other => Err(Error::Parse(format!("unknown activation tag {other}"))),
    }
}

/// Serializes a net into the versioned blob format.
pub fn save_params<S: Scalar>(net: &LayeredNet<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + net.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.num_layers() as u32).to_le_bytes());
    for layer in net.layers() {
        out.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        out.push(activation_tag(layer.activation()));
        for w in layer.weights() {
            out.extend_from_slice(&w.to_f64().expect("finite parameter").to_le_bytes());
        }
        for b in layer.biases() {
            out.extend_from_slice(&b.to_f64().expect("finite parameter").to_le_bytes());
        }
    }
    out.extend_from_slice(&(net.split_index() as u32).to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Parse(format!(
                "blob truncated at byte {} (needed {} more)",
                self.pos, n
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reconstructs a net from a blob produced by [`save_params`].
pub fn load_params<S: Scalar>(bytes: &[u8]) -> Result<LayeredNet<S>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse("bad magic: not a parameter blob".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let layer_count = r.u32()? as usize;
    if layer_count == 0 {
        return Err(Error::Parse("blob declares zero layers".into()));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let activation = activation_from_tag(r.u8()?)?;
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Parse("blob declares a zero-sized layer".into()));
        }
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            weights.push(S::from_f64(r.f64()?).expect("f64 converts to scalar"));
        }
        let mut biases = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            biases.push(S::from_f64(r.f64()?).expect("f64 converts to scalar"));
        }
        layers.push(
            DenseLayer::from_parts(in_dim, out_dim, weights, biases, activation)
                .map_err(|e| Error::Parse(e.to_string()))?,
        );
    }
    let split_index = r.u32()? as usize;
    if r.pos != bytes.len() {
        return Err(Error::Parse(format!(
            "{} trailing bytes after the blob",
            bytes.len() - r.pos
        )));
    }
    LayeredNet::from_layers(layers, split_index).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes a blob to disk.
pub fn save_params_file<S: Scalar>(net: &LayeredNet<S>, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, save_params(net))?;
    Ok(())
}

/// Reads a blob from disk.
pub fn load_params_file<S: Scalar>(path: &std::path::Path) -> Result<LayeredNet<S>> {
    load_params(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetSpec;

    fn sample_net(seed: u64) -> LayeredNet<f64> {
        let spec = NetSpec {
            input_dim: 5,
            layer_dims: vec![7, 4, 3],
            activations: vec![Activation::Relu, Activation::Tanh, Activation::Identity],
            split_index: 2,
        };
        LayeredNet::init(&spec, seed).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net(31);
        let blob = save_params(&net);
        let back: LayeredNet<f64> = load_params(&blob).unwrap();
        assert_eq!(net.split_index(), back.split_index());
        for (a, b) in net.layers().iter().zip(back.layers().iter()) {
            assert_eq!(a.activation(), b.activation());
            for (x, y) in a.weights().iter().zip(b.weights().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.biases().iter().zip(b.biases().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn round_trip_is_bit_exact_for_f32() {
        let spec = NetSpec::dense(4, &[6], 3);
        let net: LayeredNet<f32> = LayeredNet::init(&spec, 8).unwrap();
        let back: LayeredNet<f32> = load_params(&save_params(&net)).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn truncated_blob_is_a_parse_error() {
        let blob = save_params(&sample_net(1));
        let short = &blob[..blob.len() - 1];
        assert!(matches!(load_params::<f64>(short), Err(Error::Parse(_))));
    }

    #[test]
    fn unknown_version_is_reported() {
        let mut blob = save_params(&sample_net(2));
        blob[4..8].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(
            load_params::<f64>(&blob),
            Err(Error::VersionMismatch { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut blob = save_params(&sample_net(3));
        blob[0] = b'X';
        assert!(matches!(load_params::<f64>(&blob), Err(Error::Parse(_))));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut blob = save_params(&sample_net(4));
        blob.push(0);
        assert!(matches!(load_params::<f64>(&blob), Err(Error::Parse(_))));
    }

    #[test]
    fn shallow_stack_round_trips_through_net_form() {
        let net = sample_net(5);
        let (g, _) = net.split().unwrap();
        let as_net = g.clone().into_net();
        assert_eq!(as_net.split_index(), as_net.num_layers());
        let back: LayeredNet<f64> = load_params(&save_params(&as_net)).unwrap();
        assert_eq!(as_net, back);
        assert_eq!(back.layers(), g.layers());
    }
}
