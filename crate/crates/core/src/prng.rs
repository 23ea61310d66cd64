//! Small deterministic RNG helpers.
//!
//! All randomness in the crate flows through explicit seeds: column sampling
//! and matrix generation use a seeded ChaCha stream, and derived seeds are
//! produced with a SplitMix64-style finalizer so results are independent of
//! execution order.

use rand_core::RngCore;

/// SplitMix64 finalizer. Bijective on u64, good avalanche; used to derive
/// per-trial seeds and the internal restart vector for power iteration.
pub(crate) fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) with 53 random bits.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via the Marsaglia polar method (the spare value is
/// discarded to keep the stream position independent of call history).
pub(crate) fn unit_gaussian(rng: &mut impl RngCore) -> f64 {
    loop {
        let u = 2.0 * unit_f64(rng) - 1.0;
        let v = 2.0 * unit_f64(rng) - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}
