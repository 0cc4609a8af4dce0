//! Seed tree. Every random stream in a run is derived from the single run
//! seed by domain and index, so dealer, clients and data stay independent
//! and reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const DEALER: u64 = 1;
pub const CLIENT: u64 = 2;
pub const DATA: u64 = 3;
pub const BASELINE: u64 = 4;
pub const AUDIT: u64 = 5;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for (domain, index) under `seed`.
pub fn derive(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ domain.rotate_left(17)) ^ index)
}

pub fn rng(seed: u64, domain: u64, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive(seed, domain, index))
}

/// Seed of the client stream that shares client `j`'s values in round `r`.
/// Step ids above the Stage I range keep correction shares distinct.
pub fn client_stream(seed: u64, client: usize, step: u64) -> ChaCha20Rng {
    rng(derive(seed, CLIENT, client as u64), CLIENT, step)
}
