//! `qtomo` — simulate, reconstruct and grade quantum state tomography.

use clap::{Parser, Subcommand};
use qtomo::ensemble::{execute_and_write, load_spec_file, parse_method};
use qtomo::formats::{
    read_json, write_json, CountDatasetFile, DiagnosisFile, ProjectorSetFile, ReconstructionFile,
    SetDescriptorFile, StateFile,
};
use qtomo::{specs, usage, AppError};
use qtomo_core::diag::{diagnose, DiagnosisConfig};
use qtomo_core::recon::{
    linear_inversion, mle_reconstruct, OptimizerOptions, ReconstructionResult,
};
use qtomo_core::rng::stream_from_seed;
use qtomo_core::sets::{catalogue, parse_set_expr};
use qtomo_core::sim::{simulate_dataset, DriftPhase, NoiseConfig};
use qtomo_core::states::{
    haar_pure, rank_biased, werner_like, werner_two_qubit, DensityMatrix,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "qtomo",
    version,
    about = "Quantum state tomography with chi-squared reconstruction grading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a measurement set as JSON, or `list` for the catalogue
    Sets {
        /// Set expression (cube, cube^2, quditcube:3, …) or `list`
        name: String,
        /// Write JSON here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a count dataset from a target state
    Simulate {
        /// State spec (`mixed:d=2`, `werner_like:d=2,p=0.5`, `werner:p=0.3`,
        /// `haar_pure:d=3`, `rank_biased:d=4`, `basis:d=2,i=0`) or a state
        /// JSON file path
        #[arg(long)]
        state: String,
        /// Measurement set expression
        #[arg(long)]
        set: String,
        /// Mean photon flux (the brightness, trace of the scaled state)
        #[arg(long, default_value_t = 2000.0)]
        flux: f64,
        /// Relative drift-noise ratio
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        /// Drift period in count settings
        #[arg(long, default_value_t = 9.5)]
        period: f64,
        /// Fixed drift phase in radians (default: random per dataset)
        #[arg(long)]
        phase: Option<f64>,
        /// Random seed (falls back to TOMO_SEED, then entropy)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a density matrix from a dataset file
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        /// `mle` or `linear`
        #[arg(long, default_value = "mle")]
        method: String,
        #[arg(long, default_value_t = 20_000)]
        max_iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grade a reconstruction against its dataset
    Diagnose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        /// `rank`, `mc` or `naive`
        #[arg(long, default_value = "rank")]
        method: String,
        /// Two confidence levels, comma separated
        #[arg(long, default_value = "0.95,0.99")]
        confidence: String,
        #[arg(long, default_value_t = 100)]
        mc_samples: usize,
        /// Zero-eigenvalue threshold on normalised eigenvalues
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        /// Seed for the Monte-Carlo method
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a batch experiment from a spec file or bundled name
    Ensemble {
        /// Spec file path, or a bundled name (fig2a, fig3, fig5, fig6,
        /// fig7b, fig8)
        #[arg(long)]
        spec: String,
        /// Worker thread bound
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        outdir: PathBuf,
    },
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("TOMO_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or_else(rand::random)
}

/// Parses `kind:k=v,k=v` state specs or loads a state JSON file.
fn resolve_state(
    spec: &str,
    rng: &mut qtomo_core::rng::Stream,
) -> Result<DensityMatrix, AppError> {
    if spec.ends_with(".json") || Path::new(spec).exists() {
        let file: StateFile = read_json(Path::new(spec))?;
        return file.to_state();
    }
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let mut d: Option<usize> = None;
    let mut p: Option<f64> = None;
    let mut i: Option<usize> = None;
    for pair in args.split(',').filter(|s| !s.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("bad state argument '{pair}'")))?;
        match key {
            "d" => d = value.parse().ok(),
            "p" => p = value.parse().ok(),
            "i" => i = value.parse().ok(),
            other => return Err(usage(format!("unknown state argument '{other}'"))),
        }
    }
    let need_d = || d.ok_or_else(|| usage(format!("state '{kind}' needs d=<dim>")));
    let need_p = || p.ok_or_else(|| usage(format!("state '{kind}' needs p=<mix>")));
    let state = match kind {
        "mixed" => DensityMatrix::maximally_mixed(need_d()?),
        "haar_pure" => haar_pure(need_d()?, rng),
        "werner_like" => werner_like(need_d()?, need_p()?, rng),
        "werner" => werner_two_qubit(need_p()?, rng),
        "rank_biased" => rank_biased(need_d()?, rng),
        "basis" => {
            let dim = need_d()?;
            let index = i.unwrap_or(0);
            if index >= dim {
                return Err(usage(format!("basis index {index} out of range for d={dim}")));
            }
            let mut v = vec![qtomo_core::linalg::Complex64::new(0.0, 0.0); dim];
            v[index] = qtomo_core::linalg::Complex64::new(1.0, 0.0);
            DensityMatrix::from_pure(&v)
        }
        other => {
            return Err(usage(format!(
                "unknown state spec '{other}' (try mixed:d=2, werner_like:d=2,p=0.5, \
                 werner:p=0.3, haar_pure:d=2, rank_biased:d=4, basis:d=2,i=0 or a JSON file)"
            )))
        }
    };
    state.map_err(|e| usage(format!("cannot build state: {e}")))
}

fn cmd_sets(name: &str, out: Option<&Path>) -> Result<(), AppError> {
    if name == "list" {
        for expr in catalogue() {
            let set = parse_set_expr(&expr).map_err(|e| usage(e.to_string()))?;
            println!(
                "{expr}\td={} M={} {}",
                set.dim(),
                set.len(),
                set.classify_completeness().name()
            );
        }
        return Ok(());
    }
    let set = parse_set_expr(name).map_err(|e| usage(format!("{e}")))?;
    let file = ProjectorSetFile::from_set(&set);
    match out {
        Some(path) => write_json(path, &file)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&file).expect("set serialises")
        ),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    state: &str,
    set_expr: &str,
    flux: f64,
    drift: f64,
    period: f64,
    phase: Option<f64>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), AppError> {
    let seed = resolve_seed(seed);
    println!("seed={seed}");
    let set = parse_set_expr(set_expr).map_err(|e| usage(format!("bad set: {e}")))?;
    let mut rng = stream_from_seed(seed);
    let target = resolve_state(state, &mut rng)?;
    let config = NoiseConfig {
        drift_ratio: drift,
        drift_period: period,
        drift_phase: match phase {
            Some(v) => DriftPhase::Fixed(v),
            None => DriftPhase::Random,
        },
        seed,
    };
    let dataset = simulate_dataset(&target, &set, flux, &config, set_expr, &mut rng)
        .map_err(|e| qtomo::runtime(format!("simulation failed: {e}")))?;
    let file =
        CountDatasetFile::from_dataset(&dataset, SetDescriptorFile::Named(set_expr.to_string()));
    write_json(out, &file)
}

fn reconstruction_file_from_linear(
    dataset: &qtomo_core::sim::CountDataset,
    set: &qtomo_core::sets::ProjectorSet,
) -> Result<ReconstructionFile, AppError> {
    let matrix =
        linear_inversion(dataset, set).map_err(|e| usage(format!("linear inversion: {e}")))?;
    let expected = set.expected_values(&matrix);
    let floor = (1e-9 * dataset.total() as f64).max(f64::MIN_POSITIVE);
    let residuals: Vec<f64> = dataset
        .counts
        .iter()
        .zip(&expected)
        .map(|(&c, &n)| c as f64 - n)
        .collect();
    let objective = residuals
        .iter()
        .zip(&expected)
        .map(|(&delta, &n)| delta * delta / n.max(floor))
        .sum();
    Ok(ReconstructionFile {
        tool_version: qtomo::VERSION.to_string(),
        dim: set.dim(),
        estimate: matrix.entries().iter().map(|z| [z.re, z.im]).collect(),
        trace: matrix.trace().re,
        objective,
        residuals,
        iterations: 0,
        converged: true,
    })
}

fn cmd_reconstruct(
    data: &Path,
    method: &str,
    max_iterations: usize,
    out: &Path,
) -> Result<(), AppError> {
    let file: CountDatasetFile = read_json(data)?;
    let set = file.set.resolve()?;
    let dataset = file.to_dataset();
    match method {
        "linear" => {
            let recon = reconstruction_file_from_linear(&dataset, &set)?;
            write_json(out, &recon)
        }
        "mle" => {
            let options = OptimizerOptions {
                max_iterations,
                ..OptimizerOptions::default()
            };
            let result: ReconstructionResult = mle_reconstruct(&dataset, &set, &options)
                .map_err(|e| usage(format!("reconstruction: {e}")))?;
            let converged = result.converged;
            write_json(out, &ReconstructionFile::from_result(&result))?;
            if !converged {
                return Err(AppError::NonConvergence(format!(
                    "optimiser hit {max_iterations} iterations; partial result written to {}",
                    out.display()
                )));
            }
            Ok(())
        }
        other => Err(usage(format!("unknown reconstruction method '{other}'"))),
    }
}

fn parse_confidence(text: &str) -> Result<(f64, f64), AppError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(usage("confidence must be two comma-separated levels"));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| usage("bad confidence level"))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| usage("bad confidence level"))?;
    Ok((a, b))
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagnose(
    data: &Path,
    recon: &Path,
    method: &str,
    confidence: &str,
    mc_samples: usize,
    threshold: f64,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let data_file: CountDatasetFile = read_json(data)?;
    let set = data_file.set.resolve()?;
    let dataset = data_file.to_dataset();
    let recon_file: ReconstructionFile = read_json(recon)?;
    let result = recon_file.to_result()?;
    let method = parse_method(method)?;
    let mc_seed = if matches!(method, qtomo_core::diag::DiagnosisMethod::MonteCarlo) {
        let s = resolve_seed(seed);
        println!("seed={s}");
        Some(s)
    } else {
        None
    };
    let config = DiagnosisConfig {
        method,
        threshold,
        confidence: parse_confidence(confidence)?,
        mc_samples,
        mc_seed: mc_seed.unwrap_or(0),
        optimizer: OptimizerOptions::default(),
    };
    let report = diagnose(&dataset, &set, &result, &config)
        .map_err(|e| usage(format!("diagnosis: {e}")))?;
    let quality = report
        .quality
        .map(|q| format!("{q:.3}"))
        .unwrap_or_else(|| "undef".to_string());
    let flag = |f: bool| if f { "flagged" } else { "ok" };
    let mut verdict = format!(
        "X2={:.3} rank={} dof={} Q={} p95={} p99={}",
        report.chi_squared,
        report.effective_rank,
        report.dof,
        quality,
        flag(report.flagged_95),
        flag(report.flagged_99),
    );
    if let Some(mc) = &report.mc {
        verdict.push_str(&format!(
            " p={:.4} kbar={:.2}",
            mc.p_value, mc.weights.kappa_bar
        ));
    }
    println!("{verdict}");
    if let Some(path) = out {
        write_json(path, &DiagnosisFile::from_report(&report, mc_seed))?;
    }
    Ok(())
}

fn cmd_ensemble(
    spec_arg: &str,
    parallel: Option<usize>,
    seed: Option<u64>,
    outdir: &Path,
) -> Result<(), AppError> {
    let specs = if Path::new(spec_arg).exists() {
        load_spec_file(Path::new(spec_arg))?
    } else {
        specs::load_bundled(spec_arg)?
    };
    let seed = resolve_seed(seed);
    println!("seed={seed}");
    for spec in &specs {
        execute_and_write(spec, outdir, parallel, seed)?;
        println!("wrote {}", outdir.join(&spec.name).display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Sets { name, out } => cmd_sets(&name, out.as_deref()),
        Command::Simulate {
            state,
            set,
            flux,
            drift,
            period,
            phase,
            seed,
            out,
        } => cmd_simulate(&state, &set, flux, drift, period, phase, seed, &out),
        Command::Reconstruct {
            data,
            method,
            max_iterations,
            out,
        } => cmd_reconstruct(&data, &method, max_iterations, &out),
        Command::Diagnose {
            data,
            recon,
            method,
            confidence,
            mc_samples,
            threshold,
            seed,
            out,
        } => cmd_diagnose(
            &data,
            &recon,
            &method,
            &confidence,
            mc_samples,
            threshold,
            seed,
            out.as_deref(),
        ),
        Command::Ensemble {
            spec,
            parallel,
            seed,
            outdir,
        } => cmd_ensemble(&spec, parallel, seed, &outdir),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
