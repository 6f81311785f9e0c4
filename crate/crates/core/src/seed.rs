//! Counter-based seeding: every random stream is a pure function of
//! (master seed, stage tag, item id, sub-index), so results do not depend on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derives a 64-bit seed from a master seed, a stage tag and an item id.
pub fn derive_seed(master: u64, tag: &str, item: u64) -> u64 {
    splitmix64(splitmix64(master ^ tag_hash(tag)).wrapping_add(splitmix64(item)))
}

/// A generator whose stream index selects an independent ChaCha stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit id for a string key such as an instance hash.
pub fn key_id(key: &str) -> u64 {
    splitmix64(tag_hash(key))
}
