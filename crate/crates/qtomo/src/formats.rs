//! JSON artifact schemas.
//!
//! Every structured output embeds the tool version; simulated datasets
//! carry full provenance so a file can be regenerated bit-identically.
//! Projector-set files never store the coefficient matrix — it is
//! recomputed on load.

use crate::{usage, AppError};
use qtomo_core::diag::{DiagnosisMethod, DiagnosisReport};
use qtomo_core::linalg::{Complex64, ComplexMatrix};
use qtomo_core::recon::ReconstructionResult;
use qtomo_core::sets::{parse_set_expr, ProjectorSet};
use qtomo_core::sim::{CountDataset, Provenance};
use qtomo_core::states::DensityMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn matrix_entries(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.entries().iter().map(|z| [z.re, z.im]).collect()
}

fn entries_to_matrix(dim: usize, entries: &[[f64; 2]]) -> Result<ComplexMatrix, AppError> {
    let data: Vec<Complex64> = entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::from_row_major(dim, dim, data)
        .map_err(|e| usage(format!("bad matrix entries: {e}")))
}

// ── projector sets ───────────────────────────────────────────────────────

/// `{"dim": d, "projectors": [[[re, im], …], …], "labels": […]}` with each
/// projector as row-major complex entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectorSetFile {
    pub dim: usize,
    pub projectors: Vec<Vec<[f64; 2]>>,
    pub labels: Vec<String>,
}

impl ProjectorSetFile {
    pub fn from_set(set: &ProjectorSet) -> Self {
        Self {
            dim: set.dim(),
            projectors: set.projectors().iter().map(matrix_entries).collect(),
            labels: set.labels().to_vec(),
        }
    }

    /// Rebuilds the set, recomputing coefficients and the inversion map.
    pub fn to_set(&self) -> Result<ProjectorSet, AppError> {
        let projectors: Result<Vec<ComplexMatrix>, AppError> = self
            .projectors
            .iter()
            .map(|p| entries_to_matrix(self.dim, p))
            .collect();
        ProjectorSet::from_projectors(self.dim, projectors?, self.labels.clone())
            .map_err(|e| usage(format!("invalid projector set: {e}")))
    }
}

/// A measurement set referenced by name or written out inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetDescriptorFile {
    Named(String),
    Inline(ProjectorSetFile),
}

impl SetDescriptorFile {
    pub fn resolve(&self) -> Result<ProjectorSet, AppError> {
        match self {
            SetDescriptorFile::Named(name) => {
                parse_set_expr(name).map_err(|e| usage(format!("unknown set '{name}': {e}")))
            }
            SetDescriptorFile::Inline(file) => file.to_set(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SetDescriptorFile::Named(name) => name.clone(),
            SetDescriptorFile::Inline(_) => "inline".to_string(),
        }
    }
}

// ── count datasets ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceFile {
    pub seed: u64,
    pub drift_ratio: f64,
    pub drift_period: f64,
    pub drift_phase: f64,
    pub generator_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountDatasetFile {
    pub tool_version: String,
    pub dim: usize,
    pub set: SetDescriptorFile,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_flux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceFile>,
}

impl CountDatasetFile {
    pub fn from_dataset(dataset: &CountDataset, set: SetDescriptorFile) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            dim: dataset.dim,
            set,
            counts: dataset.counts.clone(),
            mean_flux: dataset.mean_flux,
            provenance: dataset.provenance.as_ref().map(|p| ProvenanceFile {
                seed: p.seed,
                drift_ratio: p.drift_ratio,
                drift_period: p.drift_period,
                drift_phase: p.drift_phase,
                generator_version: p.generator_version.clone(),
            }),
        }
    }

    pub fn to_dataset(&self) -> CountDataset {
        CountDataset {
            dim: self.dim,
            set_descriptor: self.set.label(),
            counts: self.counts.clone(),
            mean_flux: self.mean_flux,
            provenance: self.provenance.as_ref().map(|p| Provenance {
                seed: p.seed,
                drift_ratio: p.drift_ratio,
                drift_period: p.drift_period,
                drift_phase: p.drift_phase,
                generator_version: p.generator_version.clone(),
            }),
        }
    }
}

// ── states ───────────────────────────────────────────────────────────────

/// A density matrix on disk: `{"dim": d, "matrix": [[re, im], …]}`
/// row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(state: &DensityMatrix) -> Self {
        Self {
            dim: state.dim(),
            matrix: matrix_entries(state.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix, AppError> {
        let m = entries_to_matrix(self.dim, &self.matrix)?;
        DensityMatrix::new(m).map_err(|e| usage(format!("invalid state: {e}")))
    }
}

// ── reconstructions ──────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub tool_version: String,
    pub dim: usize,
    /// Row-major complex entries of the unnormalised estimate.
    pub estimate: Vec<[f64; 2]>,
    /// Brightness estimate (trace of the unnormalised state).
    pub trace: f64,
    pub objective: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ReconstructionFile {
    pub fn from_result(result: &ReconstructionResult) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            dim: result.estimate.dim(),
            estimate: matrix_entries(result.estimate.matrix()),
            trace: result.estimate.trace(),
            objective: result.objective,
            residuals: result.residuals.clone(),
            iterations: result.iterations,
            converged: result.converged,
        }
    }

    pub fn to_result(&self) -> Result<ReconstructionResult, AppError> {
        let m = entries_to_matrix(self.dim, &self.estimate)?;
        let estimate =
            DensityMatrix::new(m).map_err(|e| usage(format!("invalid estimate: {e}")))?;
        Ok(ReconstructionResult {
            estimate,
            residuals: self.residuals.clone(),
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            objective_history: None,
        })
    }
}

// ── diagnosis reports ────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McDiagnosisFile {
    /// w_l for ranks 1..=d.
    pub weights: Vec<f64>,
    pub samples: usize,
    pub excluded: usize,
    pub kappa_bar: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_bar: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosisFile {
    pub tool_version: String,
    pub method: String,
    pub chi_squared: f64,
    pub effective_rank: usize,
    pub constraints: usize,
    pub dof: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perfect_fit: Option<bool>,
    pub variance_corrected_width: f64,
    pub cutoff_95: f64,
    pub cutoff_99: f64,
    pub flagged_95: bool,
    pub flagged_99: bool,
    pub low_count_warning: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McDiagnosisFile>,
    /// Monte-Carlo stream seed, when the method used one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DiagnosisFile {
    pub fn from_report(report: &DiagnosisReport, seed: Option<u64>) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            method: report.method.name().to_string(),
            chi_squared: report.chi_squared,
            effective_rank: report.effective_rank,
            constraints: report.constraints,
            dof: report.dof,
            quality: report.quality,
            perfect_fit: report.perfect_fit,
            variance_corrected_width: report.variance_corrected_width,
            cutoff_95: report.cutoff_95,
            cutoff_99: report.cutoff_99,
            flagged_95: report.flagged_95,
            flagged_99: report.flagged_99,
            low_count_warning: report.low_count_warning,
            mc: report.mc.as_ref().map(|mc| McDiagnosisFile {
                weights: mc.weights.weights.clone(),
                samples: mc.weights.samples,
                excluded: mc.weights.excluded,
                kappa_bar: mc.weights.kappa_bar,
                p_value: mc.p_value,
                quality_bar: mc.quality_bar,
            }),
            seed: if matches!(report.method, DiagnosisMethod::MonteCarlo) {
                seed
            } else {
                None
            },
        }
    }
}

// ── IO helpers ───────────────────────────────────────────────────────────

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| crate::runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::runtime(format!("serialisation failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| crate::runtime(format!("cannot write {}: {e}", path.display())))
}
