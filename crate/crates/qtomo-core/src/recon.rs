//! State reconstruction from counts.
//!
//! Two estimators: raw linear inversion through the set's pseudoinverse
//! (fast, possibly non-physical) and maximum-likelihood fitting of the
//! Gaussian-approximation weighted-least-squares objective over the PSD
//! cone. The trace is left free so it returns the brightness estimate.
//!
//! The optimiser is projected gradient descent with Armijo backtracking
//! and PSD projection by eigenvalue clipping: the objective is smooth and
//! convex over a convex set at these dimensions, so this converges
//! without any external solver.

use crate::error::Error;
use crate::linalg::{eig_hermitian, ComplexMatrix, hs_inner_re};
use crate::sets::ProjectorSet;
use crate::sim::CountDataset;
use crate::states::DensityMatrix;
use crate::Result;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Optimiser strategy. Projected gradient is the default and currently
/// the only built-in; the semidefinite-programme rewriting would slot in
/// here as an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerStrategy {
    #[default]
    ProjectedGradient,
}

/// Tunable optimiser knobs; the defaults match the documented contract.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Stop when the relative objective decrease falls below this.
    pub relative_tolerance: f64,
    /// Denominator floor ε; `None` derives 1e-9·ΣN from the data.
    pub denominator_floor: Option<f64>,
    pub strategy: OptimizerStrategy,
    /// Record the objective after every accepted step.
    pub track_history: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            relative_tolerance: 1e-10,
            denominator_floor: None,
            strategy: OptimizerStrategy::ProjectedGradient,
            track_history: false,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::domain("relative tolerance must be positive"));
        }
        if let Some(floor) = self.denominator_floor {
            if !(floor > 0.0) {
                return Err(Error::domain("denominator floor must be positive"));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max iterations must be at least 1"));
        }
        Ok(())
    }

    fn floor_for(&self, total_counts: f64) -> f64 {
        self.denominator_floor
            .unwrap_or_else(|| (1e-9 * total_counts).max(f64::MIN_POSITIVE))
    }
}

/// Output of a maximum-likelihood reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Unnormalised estimate; the trace is the brightness estimate.
    pub estimate: DensityMatrix,
    /// N_j − n_j at the estimate.
    pub residuals: Vec<f64>,
    /// Weighted-least-squares objective at the estimate.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Option<Vec<f64>>,
}

/// Linear inversion of real-valued measurement data: assembles
/// Σ_k (q⁺·values)_k O_k. Hermitian by construction, not necessarily
/// positive.
pub fn linear_inversion_values(values: &[f64], set: &ProjectorSet) -> Result<ComplexMatrix> {
    if values.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            got: values.len(),
        });
    }
    if !set.is_informationally_complete() {
        return Err(Error::IncompleteSet);
    }
    let coords = set.inversion().matvec(values);
    Ok(set.basis().assemble(&coords))
}

/// Linear inversion of a count dataset (Eq. count vector applied to the
/// pseudoinverse; least-squares solution for overcomplete sets).
pub fn linear_inversion(dataset: &CountDataset, set: &ProjectorSet) -> Result<ComplexMatrix> {
    dataset.check_against(set)?;
    let values: Vec<f64> = dataset.counts.iter().map(|&c| c as f64).collect();
    linear_inversion_values(&values, set)
}

/// Σ_j (N_j − n_j)²/max(n_j, floor).
fn weighted_residual_sum(counts: &[f64], expected: &[f64], floor: f64) -> f64 {
    counts
        .iter()
        .zip(expected)
        .map(|(&obs, &n)| {
            let delta = obs - n;
            delta * delta / n.max(floor)
        })
        .sum()
}

/// The weighted-least-squares objective Π for a PSD candidate, with the
/// module's denominator guard.
pub fn objective(
    dataset: &CountDataset,
    set: &ProjectorSet,
    candidate: &DensityMatrix,
) -> Result<f64> {
    dataset.check_against(set)?;
    if candidate.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: candidate.dim(),
        });
    }
    let counts: Vec<f64> = dataset.counts.iter().map(|&c| c as f64).collect();
    let expected = set.expected_values(candidate.matrix());
    let floor = OptimizerOptions::default().floor_for(counts.iter().sum());
    Ok(weighted_residual_sum(&counts, &expected, floor))
}

/// Projects a Hermitian matrix onto the PSD cone by clipping negative
/// eigenvalues to zero (trace is whatever remains).
fn psd_project(matrix: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(matrix)?;
    let d = matrix.rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for (k, &l) in eig.values.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let col = eig.vectors.column(k);
        out = out.add(&ComplexMatrix::outer(&col).scale(l));
    }
    Ok(out)
}

/// Gradient of the objective with respect to the Hermitian candidate:
/// Σ_j w_j P_j with w_j = ∂/∂n_j [(N_j − n_j)²/max(n_j, ε)].
fn gradient(
    counts: &[f64],
    expected: &[f64],
    set: &ProjectorSet,
    floor: f64,
) -> ComplexMatrix {
    let d = set.dim();
    let mut g = ComplexMatrix::zeros(d, d);
    for ((&obs, &n), p) in counts.iter().zip(expected).zip(set.projectors()) {
        let w = if n >= floor {
            1.0 - (obs / n) * (obs / n)
        } else {
            -2.0 * (obs - n) / floor
        };
        if w != 0.0 {
            g = g.add(&p.scale(w));
        }
    }
    g
}

/// Maximum-likelihood reconstruction: minimises the weighted
/// least-squares objective over unnormalised PSD matrices, starting from
/// the PSD projection of the linear inversion.
pub fn mle_reconstruct(
    dataset: &CountDataset,
    set: &ProjectorSet,
    options: &OptimizerOptions,
) -> Result<ReconstructionResult> {
    options.validate()?;
    dataset.check_against(set)?;
    if !set.is_informationally_complete() {
        return Err(Error::IncompleteSet);
    }
    if dataset.counts.iter().all(|&c| c == 0) {
        return Err(Error::domain(
            "reconstruction needs at least one positive count",
        ));
    }
    let OptimizerStrategy::ProjectedGradient = options.strategy;

    let counts: Vec<f64> = dataset.counts.iter().map(|&c| c as f64).collect();
    let total: f64 = counts.iter().sum();
    let floor = options.floor_for(total);
    // convergence scales
    let grad_map_tol = 1e-8 * total;
    let perfect_fit_floor = 1e-12 * total;

    // start from the physical part of the linear inversion
    let mut x = psd_project(&linear_inversion(dataset, set)?)?;
    if x.trace().re <= 0.0 {
        // degenerate start (all eigenvalues clipped): flat state matching
        // the total count scale, n_j = ΣN/M for unit-trace projectors
        let d = set.dim();
        x = ComplexMatrix::identity(d).scale(total / set.len() as f64);
    }

    let mut expected = set.expected_values(&x);
    let mut f = weighted_residual_sum(&counts, &expected, floor);
    let mut history = options.track_history.then(|| alloc::vec![f]);
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;
    let mut plateau_streak = 0usize;

    while iterations < options.max_iterations {
        iterations += 1;
        let g = gradient(&counts, &expected, set, floor);

        // backtracking line search with the proximal sufficient-decrease rule
        let mut accepted = false;
        let mut stalled = false;
        for _ in 0..80 {
            let trial = psd_project(&x.sub(&g.scale(step)))?;
            let diff = trial.sub(&x);
            let dist_sq = {
                let n = diff.frobenius_norm();
                n * n
            };
            if dist_sq == 0.0 {
                // projection returned the iterate itself: stationary
                stalled = true;
                break;
            }
            let trial_expected = set.expected_values(&trial);
            let trial_f = weighted_residual_sum(&counts, &trial_expected, floor);
            let model_bound = f + hs_inner_re(&g, &diff) + dist_sq / (2.0 * step);
            if trial_f <= model_bound && trial.trace().re > 0.0 {
                accepted = true;
                x = trial;
                expected = trial_expected;
                let f_prev = f;
                f = trial_f;
                if let Some(h) = history.as_mut() {
                    h.push(f);
                }
                let rel_decrease = (f_prev - f) / f_prev.max(f64::MIN_POSITIVE);
                if rel_decrease < options.relative_tolerance {
                    plateau_streak += 1;
                } else {
                    plateau_streak = 0;
                }
                break;
            }
            step *= 0.5;
        }
        if accepted {
            step *= 2.0; // let the next iteration probe a larger step
        }

        if f <= perfect_fit_floor {
            converged = true;
            break;
        }
        // stop on an exhausted line search, a stationary projection, or a
        // persistent plateau; converged means first-order optimal
        if stalled || !accepted || plateau_streak >= 3 {
            let g_now = gradient(&counts, &expected, set, floor);
            converged = gradient_mapping_norm(&x, &g_now)? <= grad_map_tol;
            if converged || stalled || !accepted {
                break;
            }
            // plateau without optimality: keep iterating, the adaptive
            // step usually recovers
            plateau_streak = 0;
        }
    }

    let estimate = DensityMatrix::new(x)?;
    let expected = set.expected_values(estimate.matrix());
    let residuals: Vec<f64> = counts.iter().zip(&expected).map(|(&o, &n)| o - n).collect();
    let objective = weighted_residual_sum(&counts, &expected, floor);
    Ok(ReconstructionResult {
        estimate,
        residuals,
        objective,
        iterations,
        converged,
        objective_history: history,
    })
}

/// ‖x − proj(x − t·g)‖_F / t at the reference step t = 1.
///
/// For convex objectives this quantity is non-increasing in t, so the
/// unit-step value upper-bounds the working-step value: a conservative
/// stationarity certificate.
fn gradient_mapping_norm(x: &ComplexMatrix, g: &ComplexMatrix) -> Result<f64> {
    let moved = psd_project(&x.sub(g))?;
    Ok(moved.sub(x).frobenius_norm())
}
