//! Batch experiment drivers.
//!
//! An [`ExperimentSpec`] describes a numerical study: a state ensemble, a
//! measurement set, flux, noise (optionally swept over drift ratios) and
//! diagnostics. Runs are embarrassingly parallel with per-run derived
//! seeds, so a summary is byte-identical for any `--parallel` setting.

use crate::formats::{read_json, write_json};
use crate::{runtime, usage, AppError};
use qtomo_core::diag::{
    diagnose, diagnose_naive, diagnose_rank_counting, DiagnosisConfig, DiagnosisMethod,
};
use qtomo_core::recon::{mle_reconstruct, OptimizerOptions};
use qtomo_core::rng::{derive_seed, stream_from_seed};
use qtomo_core::sets::{parse_set_expr, ProjectorSet};
use qtomo_core::sim::{simulate_dataset, DriftPhase, NoiseConfig};
use qtomo_core::states::{werner_like, werner_two_qubit, EnsembleKind, StateEnsembleSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Salt for deriving the Monte-Carlo diagnosis stream from a run seed.
const MC_SEED_SALT: u64 = 0x4d43_5345_4544; // "MCSEED"

// ── spec files ───────────────────────────────────────────────────────────

fn default_p_range() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpecFile {
    /// One of `werner_like`, `werner`, `rank_biased`, `haar_pure`.
    pub kind: String,
    pub dim: usize,
    #[serde(default = "default_p_range")]
    pub p_range: [f64; 2],
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpecFile {
    fn kind(&self) -> Result<EnsembleKind, AppError> {
        match self.kind.as_str() {
            "werner_like" => Ok(EnsembleKind::WernerLike),
            "werner" | "werner_two_qubit" => Ok(EnsembleKind::WernerTwoQubit),
            "rank_biased" => Ok(EnsembleKind::RankBiased),
            "haar_pure" => Ok(EnsembleKind::HaarPure),
            other => Err(usage(format!("unknown ensemble kind '{other}'"))),
        }
    }

    pub fn to_spec(&self, repetitions: usize) -> Result<StateEnsembleSpec, AppError> {
        let spec = StateEnsembleSpec {
            kind: self.kind()?,
            dim: self.dim,
            p_range: (self.p_range[0], self.p_range[1]),
            count: repetitions,
            seed: self.seed,
        };
        spec.validate().map_err(|e| usage(format!("bad ensemble: {e}")))?;
        Ok(spec)
    }
}

fn default_period() -> f64 {
    9.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpecFile {
    #[serde(default)]
    pub drift_ratio: f64,
    #[serde(default = "default_period")]
    pub drift_period: f64,
    /// Fixed phase in radians; absent means a fresh random phase per
    /// dataset.
    #[serde(default)]
    pub drift_phase: Option<f64>,
}

impl Default for NoiseSpecFile {
    fn default() -> Self {
        Self {
            drift_ratio: 0.0,
            drift_period: default_period(),
            drift_phase: None,
        }
    }
}

impl NoiseSpecFile {
    fn to_config(&self, ratio: f64, seed: u64) -> NoiseConfig {
        NoiseConfig {
            drift_ratio: ratio,
            drift_period: self.drift_period,
            drift_phase: match self.drift_phase {
                Some(phi) => DriftPhase::Fixed(phi),
                None => DriftPhase::Random,
            },
            seed,
        }
    }
}

fn default_threshold() -> f64 {
    qtomo_core::diag::DEFAULT_RANK_THRESHOLD
}

fn default_confidence() -> [f64; 2] {
    [0.95, 0.99]
}

fn default_mc_samples() -> usize {
    qtomo_core::diag::DEFAULT_MC_SAMPLES
}

fn default_method() -> String {
    "rank".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsSpecFile {
    /// `rank`, `mc` or `naive`.
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_confidence")]
    pub confidence: [f64; 2],
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

impl Default for DiagnosticsSpecFile {
    fn default() -> Self {
        Self {
            method: default_method(),
            threshold: default_threshold(),
            confidence: default_confidence(),
            mc_samples: default_mc_samples(),
        }
    }
}

pub fn parse_method(name: &str) -> Result<DiagnosisMethod, AppError> {
    match name {
        "rank" | "rank_counting" => Ok(DiagnosisMethod::RankCounting),
        "mc" | "monte_carlo" => Ok(DiagnosisMethod::MonteCarlo),
        "naive" => Ok(DiagnosisMethod::Naive),
        other => Err(usage(format!("unknown diagnosis method '{other}'"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PuritySweepFile {
    pub sets: Vec<String>,
    pub p_grid: Vec<f64>,
    pub reps_per_point: usize,
    /// Total photon budget shared by all sets; defaults to
    /// base 2000/setting at the smallest set.
    #[serde(default)]
    pub total_budget: Option<f64>,
}

fn default_flux() -> f64 {
    2000.0
}

/// A complete experiment recipe, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub ensemble: EnsembleSpecFile,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default = "default_flux")]
    pub mean_flux: f64,
    #[serde(default)]
    pub noise: NoiseSpecFile,
    /// Drift-ratio sweep; each value runs the full ensemble.
    #[serde(default)]
    pub drift_sweep: Option<Vec<f64>>,
    /// Total runs (per sweep point); defaults to the ensemble count.
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpecFile,
    /// Werner purity sweep mode (ignores `set`/`noise`).
    #[serde(default)]
    pub purity_sweep: Option<PuritySweepFile>,
}

impl ExperimentSpec {
    pub fn repetitions(&self) -> Result<usize, AppError> {
        self.repetitions
            .or(self.ensemble.count)
            .filter(|&n| n >= 1)
            .ok_or_else(|| usage("experiment needs repetitions or ensemble.count >= 1"))
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if let Some(sweep) = &self.drift_sweep {
            let ascending = sweep.windows(2).all(|w| w[0] <= w[1]);
            if sweep.is_empty() || !ascending || sweep.iter().any(|&r| r < 0.0) {
                return Err(usage("drift_sweep must be nonnegative ascending values"));
            }
        }
        if self.purity_sweep.is_none() && self.set.is_none() {
            return Err(usage("experiment needs a measurement set"));
        }
        parse_method(&self.diagnostics.method)?;
        Ok(())
    }
}

/// Loads one spec or a suite (a JSON array of specs) from a file.
pub fn load_spec_file(path: &Path) -> Result<Vec<ExperimentSpec>, AppError> {
    let value: serde_json::Value = read_json(path)?;
    specs_from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn specs_from_value(value: serde_json::Value) -> Result<Vec<ExperimentSpec>, AppError> {
    let specs: Vec<ExperimentSpec> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| usage(format!("bad experiment suite: {e}")))?
    } else {
        vec![serde_json::from_value(value).map_err(|e| usage(format!("bad experiment spec: {e}")))?]
    };
    for spec in &specs {
        spec.validate()?;
    }
    Ok(specs)
}

// ── run records ──────────────────────────────────────────────────────────

/// One tomography run inside an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub drift_ratio: f64,
    pub target_purity: f64,
    pub target_rank: usize,
    pub recon_rank: usize,
    pub x2: f64,
    pub kappa: usize,
    pub quality: Option<f64>,
    pub flagged_95: bool,
    pub flagged_99: bool,
    pub naive_flagged_95: bool,
    pub naive_flagged_99: bool,
    pub mc_p_value: Option<f64>,
    pub fidelity: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedRun {
    pub run: usize,
    pub drift_ratio: f64,
    pub reason: String,
}

enum RunOutcome {
    Done(Box<RunRecord>),
    Excluded(ExcludedRun),
}

// ── summaries ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Freedman–Diaconis binning with recorded edges.
pub fn histogram(values: &[f64]) -> Histogram {
    if values.is_empty() {
        return Histogram {
            edges: vec![0.0, 1.0],
            counts: vec![0],
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let min = sorted[0];
    let max = sorted[n - 1];
    let q1 = sorted[n / 4];
    let q3 = sorted[(3 * n) / 4];
    let iqr = (q3 - q1).max(0.0);
    let width = if iqr > 0.0 {
        2.0 * iqr / (n as f64).cbrt()
    } else {
        ((max - min) / (n as f64).sqrt().max(1.0)).max(1e-12)
    };
    let bins = (((max - min) / width).ceil() as usize).clamp(1, 400);
    let width = ((max - min) / bins as f64).max(1e-300);
    let edges: Vec<f64> = (0..=bins).map(|i| min + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// Log-scale histogram of the smallest reconstructed eigenvalues
/// (normalised), split by sign around exact zero.
#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueHistogram {
    /// log10 bin edges for magnitudes, from 1e-12 to 1.
    pub log10_edges: Vec<f64>,
    pub positive_counts: Vec<usize>,
    pub negative_counts: Vec<usize>,
    pub zeros: usize,
    /// Magnitudes below the first edge.
    pub positive_underflow: usize,
    pub negative_underflow: usize,
}

fn eigenvalue_histogram(min_eigenvalues: &[f64]) -> EigenvalueHistogram {
    let bins = 48; // quarter-decade bins across 12 decades
    let lo = -12.0;
    let hi = 0.0;
    let width = (hi - lo) / bins as f64;
    let log10_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut positive_counts = vec![0usize; bins];
    let mut negative_counts = vec![0usize; bins];
    let mut zeros = 0;
    let mut positive_underflow = 0;
    let mut negative_underflow = 0;
    for &v in min_eigenvalues {
        if v == 0.0 {
            zeros += 1;
            continue;
        }
        let mag = v.abs().log10();
        let (counts, underflow) = if v > 0.0 {
            (&mut positive_counts, &mut positive_underflow)
        } else {
            (&mut negative_counts, &mut negative_underflow)
        };
        if mag < lo {
            *underflow += 1;
        } else {
            let idx = (((mag - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    EigenvalueHistogram {
        log10_edges,
        positive_counts,
        negative_counts,
        zeros,
        positive_underflow,
        negative_underflow,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RankStats {
    pub rank: usize,
    pub count: usize,
    pub mean_x2: f64,
    pub std_x2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlagRates {
    pub method_95: f64,
    pub method_99: f64,
    pub naive_95: f64,
    pub naive_99: f64,
}

/// Summary of one sweep point (plain experiments have exactly one).
#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub drift_ratio: f64,
    pub included: usize,
    pub excluded: usize,
    pub mean_x2: f64,
    pub std_x2: f64,
    pub per_rank: Vec<RankStats>,
    pub full_rank_fraction: f64,
    pub mean_fidelity: f64,
    pub flag_rates: FlagRates,
    pub low_count_warnings: usize,
    pub x2_histogram: Histogram,
    pub min_eigenvalue_histogram: EigenvalueHistogram,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub tool_version: String,
    pub name: String,
    pub master_seed: u64,
    pub set: String,
    pub dim: usize,
    pub measurements: usize,
    pub mean_flux: f64,
    pub method: String,
    pub repetitions: usize,
    pub points: Vec<PointSummary>,
    pub excluded_runs: Vec<ExcludedRun>,
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: EnsembleSummary,
    pub records: Vec<RunRecord>,
}

// ── the runner ───────────────────────────────────────────────────────────

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_one(
    spec: &ExperimentSpec,
    set: &ProjectorSet,
    ensemble: &StateEnsembleSpec,
    method: DiagnosisMethod,
    drift_ratio: f64,
    run: usize,
    seed: u64,
) -> RunOutcome {
    let exclude = |reason: String| {
        RunOutcome::Excluded(ExcludedRun {
            run,
            drift_ratio,
            reason,
        })
    };
    let mut rng = stream_from_seed(seed);
    let target = match ensemble.draw(&mut rng) {
        Ok(t) => t,
        Err(e) => return exclude(format!("state generation: {e}")),
    };
    let noise = spec.noise.to_config(drift_ratio, seed);
    let dataset = match simulate_dataset(
        &target,
        set,
        spec.mean_flux,
        &noise,
        spec.set.as_deref().unwrap_or("inline"),
        &mut rng,
    ) {
        Ok(ds) => ds,
        Err(e) => return exclude(format!("simulation: {e}")),
    };
    let result = match mle_reconstruct(&dataset, set, &OptimizerOptions::default()) {
        Ok(r) => r,
        Err(e) => return exclude(format!("reconstruction: {e}")),
    };
    if !result.converged {
        return exclude("reconstruction did not converge".to_string());
    }
    let threshold = spec.diagnostics.threshold;
    let naive = match diagnose_naive(&dataset, set, &result) {
        Ok(r) => r,
        Err(e) => return exclude(format!("diagnosis: {e}")),
    };
    let report = match method {
        DiagnosisMethod::RankCounting => diagnose_rank_counting(&dataset, set, &result, threshold),
        DiagnosisMethod::Naive => Ok(naive.clone()),
        DiagnosisMethod::MonteCarlo => {
            let config = DiagnosisConfig {
                method: DiagnosisMethod::MonteCarlo,
                threshold,
                confidence: (spec.diagnostics.confidence[0], spec.diagnostics.confidence[1]),
                mc_samples: spec.diagnostics.mc_samples,
                mc_seed: derive_seed(seed, MC_SEED_SALT),
                optimizer: OptimizerOptions::default(),
            };
            diagnose(&dataset, set, &result, &config)
        }
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => return exclude(format!("diagnosis: {e}")),
    };
    let fidelity = target
        .fidelity(&result.estimate)
        .unwrap_or(f64::NAN);
    let normalized_min = result.estimate.eigenvalues().last().copied().unwrap_or(0.0)
        / result.estimate.trace();
    RunOutcome::Done(Box::new(RunRecord {
        run,
        seed,
        drift_ratio,
        target_purity: target.purity(),
        target_rank: target.effective_rank(1e-9),
        recon_rank: result.estimate.effective_rank(threshold),
        x2: report.chi_squared,
        kappa: report.dof,
        quality: report.quality,
        flagged_95: report.flagged_95,
        flagged_99: report.flagged_99,
        naive_flagged_95: naive.flagged_95,
        naive_flagged_99: naive.flagged_99,
        mc_p_value: report.mc.as_ref().map(|mc| mc.p_value),
        fidelity,
        min_eigenvalue: normalized_min,
        iterations: result.iterations,
    }))
}

fn summarise_point(
    drift_ratio: f64,
    dim: usize,
    records: &[RunRecord],
    excluded: usize,
) -> PointSummary {
    let x2s: Vec<f64> = records.iter().map(|r| r.x2).collect();
    let (mean_x2, std_x2) = mean_and_std(&x2s);
    let per_rank = (1..=dim)
        .map(|rank| {
            let sub: Vec<f64> = records
                .iter()
                .filter(|r| r.recon_rank == rank)
                .map(|r| r.x2)
                .collect();
            let (mean, std) = mean_and_std(&sub);
            RankStats {
                rank,
                count: sub.len(),
                mean_x2: mean,
                std_x2: std,
            }
        })
        .collect();
    let n = records.len().max(1) as f64;
    let rate = |f: &dyn Fn(&RunRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / n;
    let min_eigs: Vec<f64> = records.iter().map(|r| r.min_eigenvalue).collect();
    PointSummary {
        drift_ratio,
        included: records.len(),
        excluded,
        mean_x2,
        std_x2,
        per_rank,
        full_rank_fraction: rate(&|r| r.recon_rank == dim),
        mean_fidelity: records.iter().map(|r| r.fidelity).sum::<f64>() / n,
        flag_rates: FlagRates {
            method_95: rate(&|r| r.flagged_95),
            method_99: rate(&|r| r.flagged_99),
            naive_95: rate(&|r| r.naive_flagged_95),
            naive_99: rate(&|r| r.naive_flagged_99),
        },
        low_count_warnings: 0,
        x2_histogram: histogram(&x2s),
        min_eigenvalue_histogram: eigenvalue_histogram(&min_eigs),
    }
}

/// Runs an experiment. Deterministic for a given master seed under any
/// parallelism. Fails if more than 5% of runs are excluded.
pub fn run_experiment(
    spec: &ExperimentSpec,
    parallelism: Option<usize>,
    master_seed: u64,
) -> Result<ExperimentOutput, AppError> {
    spec.validate()?;
    let reps = spec.repetitions()?;
    let set_expr = spec
        .set
        .clone()
        .ok_or_else(|| usage("experiment needs a measurement set"))?;
    let set = parse_set_expr(&set_expr).map_err(|e| usage(format!("bad set: {e}")))?;
    let ensemble = spec.ensemble.to_spec(reps)?;
    let method = parse_method(&spec.diagnostics.method)?;
    let ratios = spec
        .drift_sweep
        .clone()
        .unwrap_or_else(|| vec![spec.noise.drift_ratio]);

    let jobs: Vec<(usize, usize)> = (0..ratios.len())
        .flat_map(|pi| (0..reps).map(move |i| (pi, i)))
        .collect();
    let execute = || {
        jobs.par_iter()
            .map(|&(pi, i)| {
                let seed = derive_seed(master_seed, ((pi as u64) << 32) | i as u64);
                (
                    pi,
                    run_one(spec, &set, &ensemble, method, ratios[pi], i, seed),
                )
            })
            .collect::<Vec<_>>()
    };
    let outcomes = match parallelism {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| runtime(format!("thread pool: {e}")))?
            .install(execute),
        _ => execute(),
    };

    let mut records: Vec<RunRecord> = Vec::with_capacity(jobs.len());
    let mut excluded_runs = Vec::new();
    let mut per_point: Vec<(Vec<RunRecord>, usize)> = vec![(Vec::new(), 0); ratios.len()];
    for (pi, outcome) in outcomes {
        match outcome {
            RunOutcome::Done(rec) => {
                per_point[pi].0.push((*rec).clone());
                records.push(*rec);
            }
            RunOutcome::Excluded(ex) => {
                per_point[pi].1 += 1;
                excluded_runs.push(ex);
            }
        }
    }
    let total = jobs.len();
    if excluded_runs.len() * 20 > total {
        return Err(runtime(format!(
            "experiment '{}' excluded {} of {total} runs",
            spec.name,
            excluded_runs.len()
        )));
    }

    let points = ratios
        .iter()
        .zip(&per_point)
        .map(|(&ratio, (recs, excl))| summarise_point(ratio, set.dim(), recs, *excl))
        .collect();
    Ok(ExperimentOutput {
        summary: EnsembleSummary {
            tool_version: crate::VERSION.to_string(),
            name: spec.name.clone(),
            master_seed,
            set: set_expr,
            dim: set.dim(),
            measurements: set.len(),
            mean_flux: spec.mean_flux,
            method: method.name().to_string(),
            repetitions: reps,
            points,
            excluded_runs,
        },
        records,
    })
}

// ── purity sweep ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize)]
pub struct PurityPoint {
    pub p: f64,
    pub mean_x2: f64,
    pub se_x2: f64,
    pub full_rank_fraction: f64,
    pub mean_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PurityCurve {
    pub set: String,
    pub measurements: usize,
    pub flux_per_setting: f64,
    pub points: Vec<PurityPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PuritySweepSummary {
    pub tool_version: String,
    pub name: String,
    pub master_seed: u64,
    pub total_budget: f64,
    pub reps_per_point: usize,
    pub curves: Vec<PurityCurve>,
}

/// Werner-state study over a purity grid for several measurement sets at
/// equal total acquisition time: per-setting flux scales as 1/M against a
/// shared photon budget.
pub fn werner_purity_sweep(
    name: &str,
    sweep: &PuritySweepFile,
    parallelism: Option<usize>,
    master_seed: u64,
) -> Result<PuritySweepSummary, AppError> {
    if sweep.sets.is_empty() || sweep.p_grid.is_empty() || sweep.reps_per_point == 0 {
        return Err(usage("purity sweep needs sets, a p grid and repetitions"));
    }
    let sets: Vec<ProjectorSet> = sweep
        .sets
        .iter()
        .map(|expr| parse_set_expr(expr).map_err(|e| usage(format!("bad set '{expr}': {e}"))))
        .collect::<Result<_, _>>()?;
    let dim = sets[0].dim();
    if sets.iter().any(|s| s.dim() != dim) {
        return Err(usage("purity sweep sets must share one dimension"));
    }
    let min_m = sets.iter().map(|s| s.len()).min().expect("nonempty");
    let budget = sweep.total_budget.unwrap_or(2000.0 * min_m as f64);

    let mut jobs = Vec::new();
    for (si, set_expr) in sweep.sets.iter().enumerate() {
        for (pi, &p) in sweep.p_grid.iter().enumerate() {
            for rep in 0..sweep.reps_per_point {
                jobs.push((si, pi, rep, set_expr.clone(), p));
            }
        }
    }
    let run_job = |&(si, pi, rep, _, p): &(usize, usize, usize, String, f64)| {
        let set = &sets[si];
        let flux = budget / set.len() as f64;
        let seed = derive_seed(
            master_seed,
            ((si as u64) << 48) | ((pi as u64) << 32) | rep as u64,
        );
        let mut rng = stream_from_seed(seed);
        let target = if dim == 4 {
            werner_two_qubit(p, &mut rng)
        } else {
            werner_like(dim, p, &mut rng)
        }
        .map_err(|e| format!("state: {e}"))?;
        let ds = simulate_dataset(&target, set, flux, &NoiseConfig::poissonian(seed), "sweep", &mut rng)
            .map_err(|e| format!("simulate: {e}"))?;
        let result = mle_reconstruct(&ds, set, &OptimizerOptions::default())
            .map_err(|e| format!("reconstruct: {e}"))?;
        if !result.converged {
            return Err("non-convergence".to_string());
        }
        let fidelity = target.fidelity(&result.estimate).unwrap_or(f64::NAN);
        let full_rank = result.estimate.effective_rank(default_threshold()) == dim;
        Ok::<(usize, usize, f64, bool, f64), String>((si, pi, result.objective, full_rank, fidelity))
    };
    let execute = || jobs.par_iter().map(run_job).collect::<Vec<_>>();
    let outcomes = match parallelism {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| runtime(format!("thread pool: {e}")))?
            .install(execute),
        _ => execute(),
    };

    let mut grids: Vec<Vec<(Vec<f64>, usize, Vec<f64>)>> =
        vec![vec![(Vec::new(), 0, Vec::new()); sweep.p_grid.len()]; sets.len()];
    let mut failures = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok((si, pi, x2, full_rank, fidelity)) => {
                let cell = &mut grids[si][pi];
                cell.0.push(x2);
                if full_rank {
                    cell.1 += 1;
                }
                cell.2.push(fidelity);
            }
            Err(_) => failures += 1,
        }
    }
    if failures * 20 > jobs.len() {
        return Err(runtime(format!(
            "purity sweep failed {failures} of {} runs",
            jobs.len()
        )));
    }

    let curves = sweep
        .sets
        .iter()
        .enumerate()
        .map(|(si, expr)| PurityCurve {
            set: expr.clone(),
            measurements: sets[si].len(),
            flux_per_setting: budget / sets[si].len() as f64,
            points: sweep
                .p_grid
                .iter()
                .enumerate()
                .map(|(pi, &p)| {
                    let (x2s, full, fids) = &grids[si][pi];
                    let (mean, std) = mean_and_std(x2s);
                    PurityPoint {
                        p,
                        mean_x2: mean,
                        se_x2: std / (x2s.len().max(1) as f64).sqrt(),
                        full_rank_fraction: *full as f64 / x2s.len().max(1) as f64,
                        mean_fidelity: fids.iter().sum::<f64>() / fids.len().max(1) as f64,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(PuritySweepSummary {
        tool_version: crate::VERSION.to_string(),
        name: name.to_string(),
        master_seed,
        total_budget: budget,
        reps_per_point: sweep.reps_per_point,
        curves,
    })
}

// ── artifact writing ─────────────────────────────────────────────────────

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-run CSV with an embedded version/seed header comment.
pub fn records_csv(records: &[RunRecord], master_seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qtomo {} seed={master_seed}", crate::VERSION);
    let _ = writeln!(
        out,
        "run,seed,drift_ratio,target_purity,target_rank,recon_rank,x2,kappa,quality,flagged_95,flagged_99,naive_flagged_95,naive_flagged_99,mc_p_value,fidelity,min_eigenvalue,iterations"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run,
            r.seed,
            r.drift_ratio,
            r.target_purity,
            r.target_rank,
            r.recon_rank,
            r.x2,
            r.kappa,
            fmt_opt(r.quality),
            r.flagged_95,
            r.flagged_99,
            r.naive_flagged_95,
            r.naive_flagged_99,
            fmt_opt(r.mc_p_value),
            r.fidelity,
            r.min_eigenvalue,
            r.iterations
        );
    }
    out
}

/// Purity-sweep curves as CSV.
pub fn purity_csv(summary: &PuritySweepSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qtomo {} seed={}", crate::VERSION, summary.master_seed);
    let _ = writeln!(
        out,
        "set,measurements,flux_per_setting,p,mean_x2,se_x2,full_rank_fraction,mean_fidelity"
    );
    for curve in &summary.curves {
        for pt in &curve.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                curve.set,
                curve.measurements,
                curve.flux_per_setting,
                pt.p,
                pt.mean_x2,
                pt.se_x2,
                pt.full_rank_fraction,
                pt.mean_fidelity
            );
        }
    }
    out
}

/// Executes a spec (plain, drift sweep or purity sweep) and writes its
/// artifacts under `outdir/<name>/`.
pub fn execute_and_write(
    spec: &ExperimentSpec,
    outdir: &Path,
    parallelism: Option<usize>,
    master_seed: u64,
) -> Result<(), AppError> {
    let dir = outdir.join(&spec.name);
    std::fs::create_dir_all(&dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    if let Some(sweep) = &spec.purity_sweep {
        let summary = werner_purity_sweep(&spec.name, sweep, parallelism, master_seed)?;
        write_json(&dir.join("summary.json"), &summary)?;
        std::fs::write(dir.join("curves.csv"), purity_csv(&summary))
            .map_err(|e| runtime(format!("cannot write curves.csv: {e}")))?;
    } else {
        let output = run_experiment(spec, parallelism, master_seed)?;
        write_json(&dir.join("summary.json"), &output.summary)?;
        std::fs::write(dir.join("runs.csv"), records_csv(&output.records, master_seed))
            .map_err(|e| runtime(format!("cannot write runs.csv: {e}")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        serde_json::from_value(serde_json::json!({
            "name": "test",
            "ensemble": {"kind": "werner_like", "dim": 2, "p_range": [0.33333333, 0.66666667], "count": 40},
            "set": "cube",
            "mean_flux": 2000.0
        }))
        .unwrap()
    }

    #[test]
    fn experiment_is_deterministic_across_parallelism() {
        let spec = small_spec();
        let a = run_experiment(&spec, Some(1), 99).unwrap();
        let b = run_experiment(&spec, Some(4), 99).unwrap();
        let ja = serde_json::to_string(&a.summary).unwrap();
        let jb = serde_json::to_string(&b.summary).unwrap();
        assert_eq!(ja, jb);
        assert_eq!(records_csv(&a.records, 99), records_csv(&b.records, 99));
    }

    #[test]
    fn experiment_mean_x2_near_dofs() {
        // d=2 cube: κ = M − d² = 2 for full-rank interior states
        let spec = small_spec();
        let out = run_experiment(&spec, None, 7).unwrap();
        let point = &out.summary.points[0];
        assert!(point.included >= 38);
        assert!(
            (point.mean_x2 - 2.0).abs() < 4.0 * point.std_x2 / (point.included as f64).sqrt() + 0.5,
            "mean {} std {}",
            point.mean_x2,
            point.std_x2
        );
    }

    #[test]
    fn drift_sweep_points_are_separate() {
        let mut spec = small_spec();
        spec.repetitions = Some(10);
        spec.drift_sweep = Some(vec![0.0, 1.0]);
        let out = run_experiment(&spec, None, 3).unwrap();
        assert_eq!(out.summary.points.len(), 2);
        assert_eq!(out.summary.points[0].drift_ratio, 0.0);
        assert_eq!(out.summary.points[1].drift_ratio, 1.0);
        assert_eq!(out.records.len(), 20);
    }

    #[test]
    fn histogram_covers_all_values() {
        let values: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin() * 10.0 + 20.0).collect();
        let h = histogram(&values);
        assert_eq!(h.counts.iter().sum::<usize>(), values.len());
        assert_eq!(h.edges.len(), h.counts.len() + 1);
    }

    #[test]
    fn purity_sweep_minimal_set_fits_perfectly_at_low_p() {
        let sweep = PuritySweepFile {
            sets: vec!["tetrahedron".into(), "cube".into()],
            p_grid: vec![0.2],
            reps_per_point: 20,
            total_budget: None,
        };
        let summary = werner_purity_sweep("mini", &sweep, None, 5).unwrap();
        assert_eq!(summary.total_budget, 2000.0 * 4.0);
        let tetra = &summary.curves[0];
        assert!(tetra.points[0].mean_x2 < 1e-3, "tetra mean {}", tetra.points[0].mean_x2);
        let cube = &summary.curves[1];
        assert!(cube.points[0].mean_x2 > 0.5, "cube mean {}", cube.points[0].mean_x2);
        // equal-total-time: cube runs at 4/6 the tetrahedron flux
        assert!((cube.flux_per_setting - 8000.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn suite_files_parse_spec_or_array() {
        let single = serde_json::json!({
            "name": "one",
            "ensemble": {"kind": "haar_pure", "dim": 2, "count": 5},
            "set": "cube"
        });
        assert_eq!(specs_from_value(single).unwrap().len(), 1);
        let suite = serde_json::json!([
            {"name": "a", "ensemble": {"kind": "haar_pure", "dim": 2, "count": 5}, "set": "cube"},
            {"name": "b", "ensemble": {"kind": "rank_biased", "dim": 2, "count": 5}, "set": "octahedron"}
        ]);
        assert_eq!(specs_from_value(suite).unwrap().len(), 2);
    }
}
