//! Deterministic derivation of sub-seeds from a single root seed.
//!
//! Every source of randomness in the crate is a [`rand_chacha::ChaCha8Rng`]
//! seeded through this module, so results are bit-reproducible across runs,
//! platforms, and thread counts.  Independent random streams (bootstrap rows,
//! per-tree feature sampling, data generation, splitting) are separated by a
//! domain constant, so adding a new consumer never perturbs existing streams.

/// Domain constants for seed derivation.  The values themselves are
/// arbitrary; they only need to be distinct.
pub(crate) mod domain {
    pub const BOOTSTRAP_ROW: u64 = 1;
    pub const TREE_FEATURES: u64 = 2;
    pub const SYNTHETIC_DATA: u64 = 3;
    pub const SPLIT_SHUFFLE: u64 = 4;
    pub const PLAN: u64 = 5;
    pub const MU_COS: u64 = 6;
    pub const MU_SIN: u64 = 7;
    pub const SIGMA_COS: u64 = 8;
    pub const SIGMA_SIN: u64 = 9;
    // value 10 is retired; reusing it would silently replay an old stream
    pub const EXPERIMENT_DATA: u64 = 11;
    pub const EXPERIMENT_SPLIT: u64 = 12;
    pub const EXPERIMENT_MODEL: u64 = 13;
}

/// The splitmix64 finalizer: a cheap bijective mixer with full avalanche.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `root` for stream `index` within
/// the given `domain`.
#[inline]
pub(crate) fn derive_seed(root: u64, domain: u64, index: u64) -> u64 {
    let mut z = root;
    z = mix64(z ^ mix64(domain));
    z = mix64(z ^ mix64(index));
    z
}

/// Hashes a bootstrap row as a multiset: the result depends only on which
/// unit indices appear and with what multiplicity, not on their order.
///
/// `counts[u]` is the multiplicity of unit `u` in the row.
pub(crate) fn multiset_hash(counts: &[u32]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3; // arbitrary nonzero start
    for (unit, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            h = mix64(h ^ (unit as u64 + 1));
        }
    }
    h
}
