//! Deterministic stream splitting.
//!
//! Every (trial, user) pair owns an independent ChaCha8 stream: the trial
//! index is hashed with the master seed into a 256-bit key, and the user
//! index selects the stream within that key. Results therefore depend only
//! on the master seed and the indices, never on scheduling. The protocol is
//! deliberately not part of the key, so protocols compared under one seed
//! see common random numbers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_key(master_seed: u64, trial: u64) -> [u8; 32] {
    let mut state = splitmix64(master_seed) ^ splitmix64(trial.wrapping_add(0x6A09_E667_F3BC_C909));
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// Generator for one user within one trial.
pub fn user_rng(master_seed: u64, trial: u64, user: u64) -> SimRng {
    let mut rng = ChaCha8Rng::from_seed(trial_key(master_seed, trial));
    rng.set_stream(user);
    rng
}

/// Generator for trial-level choices that are not tied to a user.
pub fn trial_rng(master_seed: u64, trial: u64) -> SimRng {
    let mut rng = ChaCha8Rng::from_seed(trial_key(master_seed, trial));
    rng.set_stream(u64::MAX);
    rng
}

/// Uniform double in `[0, 1)` from the top 53 bits of one draw.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Laplace(0, scale) by inverting the CDF at a 53-bit uniform.
pub fn laplace<R: RngCore + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let w = unit_f64(rng) - 0.5;
    -scale * w.signum() * (-2.0 * w.abs()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| user_rng(7, 3, 11).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let b = user_rng(7, 3, 12).next_u64();
        let c = user_rng(7, 4, 11).next_u64();
        let d = user_rng(8, 3, 11).next_u64();
        assert!(a[0] != b && a[0] != c && a[0] != d);
    }

    #[test]
    fn unit_range() {
        let mut r = user_rng(1, 0, 0);
        for _ in 0..10_000 {
            let u = unit_f64(&mut r);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn laplace_moments() {
        let mut r = user_rng(5, 0, 0);
        let n = 200_000;
        let b = 2.0;
        let xs: Vec<f64> = (0..n).map(|_| laplace(&mut r, b)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // Var = 2b^2 = 8; the sd of the sample mean is sqrt(8/n).
        assert!(mean.abs() < 4.0 * (8.0 / n as f64).sqrt());
        assert!((var - 8.0).abs() < 0.2);
        let tail = xs.iter().filter(|&&x| x > 1.0).count() as f64 / n as f64;
        let expected = 0.5 * (-1.0 / b).exp();
        assert!((tail - expected).abs() < 4.0 * (expected * (1.0 - expected) / n as f64).sqrt());
    }
}
