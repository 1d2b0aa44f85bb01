//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! `(master seed, domain, index)`. The domain separates unrelated consumers
//! (tree shapes, walk moves, tuple draws, ...) and the index selects one
//! replica/tree inside a domain. Streams are independent of the order in
//! which they are created, so adding replicas never perturbs earlier ones and
//! results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Default master seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_160_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Tree = 1,
    Walk = 2,
    PoolTree = 3,
    Population = 4,
    Tuples = 5,
    HittingTree = 6,
    HittingWalk = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` of `domain` under the master `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derives an independent master seed, e.g. for a second arm of a comparison.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt.wrapping_add(0xA5A5_A5A5)))
}
