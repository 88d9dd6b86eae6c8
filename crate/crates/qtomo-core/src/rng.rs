//! Random streams and variate samplers.
//!
//! All randomness flows through explicitly passed streams so that every
//! simulation is reproducible from a 64-bit seed. Batch drivers derive
//! one independent stream per task with [`derive_seed`], which makes
//! results independent of execution order and parallelism.

use crate::stats::ln_gamma;
use rand::Rng;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// The deterministic stream type used by the toolkit.
pub type Stream = ChaCha8Rng;

/// Creates a deterministic random stream from a 64-bit seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent per-task seed from a master seed and task index.
///
/// Uses a splitmix64-style mix so that nearby indices produce unrelated
/// streams: `seed_i = master ⊕ mix(i)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples a standard normal variate via the Marsaglia polar method.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x = 2.0 * rng.gen::<f64>() - 1.0;
        let y = 2.0 * rng.gen::<f64>() - 1.0;
        let s = x * x + y * y;
        if s > 0.0 && s < 1.0 {
            return x * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Samples a standard complex Gaussian (independent N(0,1) parts).
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex<f64> {
    num_complex::Complex::new(standard_normal(rng), standard_normal(rng))
}

/// Samples from Poisson(lambda).
///
/// Exponential-gap inversion below `lambda = 30`, Hörmann's transformed
/// rejection (PTRS) above. Both are exact samplers; the split keeps the
/// small-mean regime — where chi-squared validity is fragile — free of
/// approximation.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

/// Counts unit-rate exponential gaps until they exceed `lambda`,
/// in the multiplicative (product-of-uniforms) form.
fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let limit = (-lambda).exp();
    let mut product = rng.gen::<f64>();
    let mut count = 0u64;
    while product > limit {
        product *= rng.gen::<f64>();
        count += 1;
    }
    count
}

/// Hörmann's PTRS transformed-rejection sampler, valid for lambda ≥ 10.
fn poisson_ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let log_lambda = lambda.ln();
    let b = 0.931 + 2.53 * lambda.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v = rng.gen::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let rhs = k * log_lambda - lambda - ln_gamma(k + 1.0);
        if (v * inv_alpha / (a / (us * us) + b)).ln() <= rhs {
            return k as u64;
        }
    }
}
