//! Deterministic random streams.
//!
//! Every consumer gets its own ChaCha8 stream selected by the root seed, a
//! domain tag and two 32-bit coordinates (typically superchain and subchain).
//! Streams never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; distinct domains never share key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Transition noise of chain `(k, m)`.
    Chain = 1,
    /// Shared initial point of superchain `k`.
    SharedInit = 2,
    /// Independent initial point of chain `(k, m)`.
    IndependentInit = 3,
    /// Simulated datasets.
    Data = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of an experiment rooted at `root`.
pub fn replication_seed(root: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(root) ^ rep.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// The stream for `(root, domain, a, b)`.
pub fn stream(root: u64, domain: Domain, a: usize, b: usize) -> ChaCha8Rng {
    let key = splitmix64(root ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let a = u32::try_from(a).expect("stream coordinate exceeds u32");
    let b = u32::try_from(b).expect("stream coordinate exceeds u32");
    rng.set_stream((u64::from(a) << 32) | u64::from(b));
    rng
}
