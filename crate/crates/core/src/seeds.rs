//! Deterministic seed derivation. Every random stream in an experiment is
//! keyed by mixing identifiers (master seed, trial index, sample index) so
//! that paired comparisons share randomness by construction.

fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapses a list of identifiers into one well-mixed 64-bit seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x6A09_E667_F3BC_C909;
    for &p in parts {
        acc = avalanche(acc.wrapping_add(0x9E37_79B9_7F4A_7C15) ^ p);
    }
    acc
}
