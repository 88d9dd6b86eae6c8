//! Synthetic count data: expected counts, systematic brightness drift,
//! and Poissonian sampling.
//!
//! The generation pipeline is `expected_counts → apply_drift →
//! sample_poisson_counts`, with full provenance recorded so a dataset can
//! be regenerated bit-identically from its metadata.

use crate::error::Error;
use crate::rng::sample_poisson;
use crate::sets::ProjectorSet;
use crate::states::DensityMatrix;
use crate::Result;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// Drift phase: fixed in radians, or drawn uniformly per dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftPhase {
    Random,
    Fixed(f64),
}

/// Systematic-noise recipe for simulated acquisitions.
///
/// `drift_ratio` expresses the sinusoidal brightness modulation relative
/// to the mean Poissonian noise scale; zero means pure counting noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub drift_ratio: f64,
    /// Oscillation period in units of count settings.
    pub drift_period: f64,
    pub drift_phase: DriftPhase,
    pub seed: u64,
}

impl NoiseConfig {
    /// Pure Poissonian statistics, no systematic drift.
    pub fn poissonian(seed: u64) -> Self {
        Self {
            drift_ratio: 0.0,
            drift_period: 9.5,
            drift_phase: DriftPhase::Random,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.drift_ratio >= 0.0) {
            return Err(Error::domain(format!(
                "drift ratio must be >= 0, got {}",
                self.drift_ratio
            )));
        }
        if !(self.drift_period > 0.0) {
            return Err(Error::domain(format!(
                "drift period must be > 0, got {}",
                self.drift_period
            )));
        }
        Ok(())
    }
}

/// Generation metadata carried by simulated datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub drift_ratio: f64,
    pub drift_period: f64,
    /// The phase actually used, after resolving a random phase.
    pub drift_phase: f64,
    pub generator_version: String,
}

/// Measured (or simulated) counts for one tomography acquisition.
///
/// `mean_flux` and `provenance` are absent for imported experimental
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDataset {
    pub dim: usize,
    /// Set expression (e.g. "cube^2") or a note that the set is inline.
    pub set_descriptor: String,
    pub counts: Vec<u64>,
    pub mean_flux: Option<f64>,
    pub provenance: Option<Provenance>,
}

impl CountDataset {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Checks that the dataset matches a projector set.
    pub fn check_against(&self, set: &ProjectorSet) -> Result<()> {
        if self.dim != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: self.dim,
            });
        }
        if self.counts.len() != set.len() {
            return Err(Error::DimensionMismatch {
                expected: set.len(),
                got: self.counts.len(),
            });
        }
        Ok(())
    }
}

/// Expected counts n_j = Tr[P_j ρ̄] for an unnormalised state ρ̄ whose
/// trace carries the flux.
pub fn expected_counts(state: &DensityMatrix, set: &ProjectorSet) -> Result<Vec<f64>> {
    if state.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: state.dim(),
        });
    }
    Ok(set.expected_values(state.matrix()))
}

/// Fractional drift amplitude: the drift ratio times the average
/// relative Poisson noise of the acquisition, taken as the quadratic
/// mean of 1/√n_j so the noisiest (lowest-count) settings carry their
/// full weight. Expected counts are floored at one photon inside the
/// average, where relative counting noise stops being meaningful. For
/// uniform counts this reduces to r/√n̄.
fn drift_amplitude(ratio: f64, expected: &[f64]) -> Result<f64> {
    let mean_inv = expected
        .iter()
        .map(|&n| 1.0 / n.max(1.0))
        .sum::<f64>()
        / expected.len() as f64;
    if expected.iter().all(|&n| n <= 0.0) {
        return Err(Error::domain(
            "drift amplitude undefined: all expected counts are zero",
        ));
    }
    let a = ratio * mean_inv.sqrt();
    if a >= 1.0 {
        return Err(Error::domain(format!(
            "drift amplitude {a:.3} >= 1 would drive counts negative"
        )));
    }
    Ok(a)
}

fn modulate(expected: &[f64], amplitude: f64, period: f64, phase: f64) -> Vec<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    expected
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let factor = 1.0 + amplitude * (two_pi * j as f64 / period + phase).sin();
            (n * factor).max(0.0)
        })
        .collect()
}

pub(crate) fn resolve_phase<R: Rng + ?Sized>(phase: DriftPhase, rng: &mut R) -> f64 {
    match phase {
        DriftPhase::Fixed(v) => v,
        DriftPhase::Random => rng.gen::<f64>() * 2.0 * core::f64::consts::PI,
    }
}

/// Applies sinusoidal brightness drift to expected counts, in acquisition
/// order (index j follows the set's label order).
///
/// A zero drift ratio returns the input unchanged and does not consume
/// randomness.
pub fn apply_drift<R: Rng + ?Sized>(
    expected: &[f64],
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    if expected.iter().any(|&n| n < 0.0) {
        return Err(Error::domain("expected counts must be nonnegative"));
    }
    if config.drift_ratio == 0.0 || expected.is_empty() {
        return Ok(expected.to_vec());
    }
    let amplitude = drift_amplitude(config.drift_ratio, expected)?;
    let phase = resolve_phase(config.drift_phase, rng);
    Ok(modulate(expected, amplitude, config.drift_period, phase))
}

/// Draws one Poisson count per expected value. Tiny numerical negatives
/// are clamped to zero.
pub fn sample_poisson_counts<R: Rng + ?Sized>(expected: &[f64], rng: &mut R) -> Vec<u64> {
    expected
        .iter()
        .map(|&n| sample_poisson(n.max(0.0), rng))
        .collect()
}

/// Simulates a complete acquisition from a normalised target state:
/// scales to the mean flux, applies drift, samples Poissonian counts and
/// records provenance.
pub fn simulate_dataset<R: Rng + ?Sized>(
    state: &DensityMatrix,
    set: &ProjectorSet,
    mean_flux: f64,
    config: &NoiseConfig,
    set_descriptor: &str,
    rng: &mut R,
) -> Result<CountDataset> {
    if !(mean_flux > 0.0) {
        return Err(Error::domain(format!(
            "mean flux must be positive, got {mean_flux}"
        )));
    }
    config.validate()?;
    let bright = state.normalized().scaled(mean_flux)?;
    let expected = expected_counts(&bright, set)?;
    let expected: Vec<f64> = expected.into_iter().map(|n| n.max(0.0)).collect();
    let (drifted, phase) = if config.drift_ratio == 0.0 {
        (expected, 0.0)
    } else {
        let amplitude = drift_amplitude(config.drift_ratio, &expected)?;
        let phase = resolve_phase(config.drift_phase, rng);
        (modulate(&expected, amplitude, config.drift_period, phase), phase)
    };
    let counts = sample_poisson_counts(&drifted, rng);
    Ok(CountDataset {
        dim: state.dim(),
        set_descriptor: String::from(set_descriptor),
        counts,
        mean_flux: Some(mean_flux),
        provenance: Some(Provenance {
            seed: config.seed,
            drift_ratio: config.drift_ratio,
            drift_period: config.drift_period,
            drift_phase: phase,
            generator_version: String::from(crate::VERSION),
        }),
    })
}
