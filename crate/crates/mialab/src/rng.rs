//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is a [`ChaCha8Rng`] seeded from a
//! `u64`. Independent streams (per shadow model, per class, per experiment
//! cell) are derived with [`derive_seed`], a splitmix64 finalizer applied to
//! `seed ^ golden * tag`. Derived streams are decorrelated but fully
//! reproducible, and deriving is associative-free: the (seed, tag) pair alone
//! determines the child seed, so parallel workers need no shared state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags for the fixed derivation points, so call sites never collide by
/// accident. Values are arbitrary but frozen.
pub mod tag {
    /// Fresh parameter initialization of a full network.
    pub const INIT: u64 = 0x01;
    /// Fresh parameter initialization of a transferred head stack.
    pub const HEAD_INIT: u64 = 0x02;
    /// Epoch shuffling inside the training loop.
    pub const SHUFFLE: u64 = 0x03;
    /// Per-shadow dataset sampling.
    pub const SAMPLE: u64 = 0x04;
    /// Per-shadow model training.
    pub const SHADOW: u64 = 0x05;
    /// Per-class attack-model training.
    pub const ATTACK_CLASS: u64 = 0x06;
    /// Source-model training inside an experiment.
    pub const SOURCE: u64 = 0x07;
    /// Dataset generation inside an experiment.
    pub const DATA: u64 = 0x08;
    /// Four-way dataset split inside an experiment.
    pub const SPLIT: u64 = 0x09;
    /// Grid-cell seeds inside an experiment.
    pub const CELL: u64 = 0x0A;
    /// Per-repeat seeds inside a grid cell.
    pub const REPEAT: u64 = 0x0B;
    /// Target-model training in the black-box target pipeline.
    pub const TARGET: u64 = 0x0C;
}

/// Derives a child seed from `(seed, tag)` with the splitmix64 finalizer.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed for the `index`-th element of a tagged family.
pub fn derive_indexed_seed(seed: u64, tag: u64, index: u64) -> u64 {
    derive_seed(derive_seed(seed, tag), index.wrapping_add(1))
}

/// The crate-wide deterministic generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
