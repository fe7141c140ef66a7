//! Deterministic RNG plumbing: seed derivation and the stream type used by the
//! generators.

use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

/// Derive the RNG seed for one instance of a batch.
///
/// splitmix64 finalizer over `master_seed + golden_ratio * (index + 1)`. Stable
/// across platforms and releases (unlike the std hasher), so batches are
/// order-independent and datasets rebuild byte-identically.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The deterministic stream used wherever a config carries a seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
