//! Seed derivation and the elementary complex Gaussian draw.
//!
//! All randomness flows from a single `u64` master seed. Named sub-seeds keep
//! independent concerns (geometry, shadowing, Monte Carlo trials) on separate
//! streams, and every Monte Carlo trial owns a dedicated ChaCha stream so any
//! subset of trials can be drawn in any order, on any number of threads, with
//! bit-identical results.

use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Mixes `base` with a purpose tag and an index into a fresh sub-seed.
///
/// The same `(base, tag, index)` triple always yields the same seed; distinct
/// tags or indices yield decorrelated ones.
#[must_use]
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut state = splitmix64(base ^ fnv1a(tag.as_bytes()));
    state = splitmix64(state ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    state
}

/// Generator for one Monte Carlo trial: `seed` selects the experiment and the
/// trial index selects the ChaCha stream.
#[must_use]
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One circularly symmetric standard complex Gaussian draw, CN(0, 1).
///
/// Real and imaginary parts are drawn in that order, each N(0, 1/2).
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
