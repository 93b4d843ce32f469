//! Seeded, stream-based randomness. Every stochastic output is a pure
//! function of (master seed, trial index), so parallel trial execution is
//! deterministic and order-independent.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; decorrelates nearby seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for one trial, derived from the master seed.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(mix(master_seed));
    rng.set_stream(mix(trial.wrapping_add(1)));
    rng
}

pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    trial_rng(seed, 0)
}

/// Derives an independent sub-seed for trial `trial` of a master seed; used
/// where a component (e.g. a signal sampler) wants a seed, not an RNG.
pub fn derive_seed(master_seed: u64, trial: u64) -> u64 {
    mix(mix(master_seed) ^ mix(trial.wrapping_add(0x5eed)))
}

/// Uniform in [0, 1).
#[inline]
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normals via Box-Muller (deterministic given the RNG state).
pub fn standard_normals(rng: &mut impl RngCore, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1 = (uniform01(rng)).max(f64::MIN_POSITIVE);
        let u2 = uniform01(rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        out.push(r * theta.sin());
    }
    out.truncate(count);
    out
}
