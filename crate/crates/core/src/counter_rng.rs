//! Counter-based uniforms: every random quantity is a pure function of a
//! 64-bit seed and a 64-bit counter (edge id, site key), so samples can be
//! regenerated, coupled across parameters, or evaluated at shifted sites
//! without storing draws.
//!
//! The mixing function is the SplitMix64 finalizer applied twice. It is
//! frozen: changing it changes every stored sample (see the golden tests).

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64 mixed bits for `(seed, counter)`.
#[inline]
pub fn mix(seed: u64, counter: u64) -> u64 {
    splitmix64(seed.wrapping_add(GOLDEN_GAMMA) ^ splitmix64(counter.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA)))
}

/// Uniform draw in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform(seed: u64, counter: u64) -> f64 {
    (mix(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Order-sensitive key for a lattice site.
pub fn site_key(coords: &[i64]) -> u64 {
    coords
        .iter()
        .fold(0x243F_6A88_85A3_08D3u64, |h, &c| splitmix64(h ^ (c as u64)))
}
