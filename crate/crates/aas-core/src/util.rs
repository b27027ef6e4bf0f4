//! Small shared helpers: stable hashing for seed derivation.

/// FNV-1a over a byte string. Used to derive per-episode / per-run RNG
/// seeds from a base seed and string tags. `std`'s hashers are not
/// guaranteed stable across releases, and reproducibility of seeded runs
/// matters more than hash quality here.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Mixes a base seed with string tags into a new 64-bit seed.
///
/// Deterministic across platforms and runs; distinct tags give
/// independent-looking streams.
pub fn mix_seed(base: u64, tags: &[&str]) -> u64 {
    let mut h = fnv1a(&base.to_le_bytes());
    for tag in tags {
        h ^= fnv1a(tag.as_bytes());
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
        h ^= h >> 29;
    }
    h
}
