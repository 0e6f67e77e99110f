//! Stable 64-bit hashing and named sub-seed derivation.
//!
//! FNV-1a is used everywhere a digest must be identical across platforms
//! and releases: file content digests in manifests, model file checksums,
//! and the derivation of per-component RNG seeds from the single top-level
//! experiment seed.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Incremental FNV-1a hasher for streaming input.
#[derive(Debug, Clone)]
pub struct Fnv1a64(u64);

impl Fnv1a64 {
    pub fn new() -> Self {
        Fnv1a64(FNV_OFFSET)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self::new()
    }
}

/// Derive a named sub-seed from a master seed.
///
/// Every source of randomness in the pipeline (corpus shuffle, fragment
/// sampling, CV fold assignment, split membership, weight init) draws its
/// own seed through this function, so components stay independently
/// reproducible under one top-level seed.
pub fn sub_seed(master: u64, name: &str) -> u64 {
    let mut h = Fnv1a64::new();
    h.update(&master.to_le_bytes());
    h.update(name.as_bytes());
    h.finish()
}

/// Sub-seed keyed by name plus an index (per-file, per-repetition, ...).
pub fn sub_seed_indexed(master: u64, name: &str, index: u64) -> u64 {
    let mut h = Fnv1a64::new();
    h.update(&master.to_le_bytes());
    h.update(name.as_bytes());
    h.update(&index.to_le_bytes());
    h.finish()
}
