//! Stable 64-bit FNV-1a hashing.
//!
//! `std`'s `DefaultHasher` is not guaranteed stable across releases, so
//! fingerprints and seed derivation use this fixed function instead.

const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over `bytes`, starting from `state`.
pub fn fnv1a_extend(mut state: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        state ^= b as u64;
        state = state.wrapping_mul(PRIME);
    }
    state
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(OFFSET, bytes)
}

/// Hash of a sequence of 64-bit words, little-endian, after a seed word.
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut h = fnv1a_extend(OFFSET, &seed.to_le_bytes());
    for w in words {
        h = fnv1a_extend(h, &w.to_le_bytes());
    }
    h
}

/// Seed for a named pipeline stage, derived from the top-level seed as
/// `fnv1a(le_bytes(root) ++ stage)`.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    fnv1a_extend(fnv1a(&root.to_le_bytes()), stage.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_vectors() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn stage_seeds_differ() {
        assert_ne!(derive_seed(1, "split"), derive_seed(1, "train"));
        assert_ne!(derive_seed(1, "split"), derive_seed(2, "split"));
        assert_eq!(derive_seed(7, "init"), derive_seed(7, "init"));
    }
}
