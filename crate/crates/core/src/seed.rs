//! Sub-seed derivation.
//!
//! Every stochastic component draws its RNG seed from the master seed through
//! [`derive_seed`]: the component name and an index are hashed with 64-bit
//! FNV-1a, xor-ed into the master seed, and the result is finalized with the
//! SplitMix64 mixer. The mapping is fixed, so identical master seeds always
//! give identical runs regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, component: &str, index: u64) -> u64 {
    let h = fnv1a(component.as_bytes(), FNV_OFFSET);
    let h = fnv1a(&index.to_le_bytes(), h);
    mix64(master ^ h)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
