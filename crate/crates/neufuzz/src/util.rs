//! Small shared helpers.

/// FNV-1a 64-bit hash. Used for content hashes that must be stable across
/// processes and platforms (coverage path hashes, seed identities).
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
