//! Density matrices and random-state ensembles.
//!
//! A [`DensityMatrix`] may be unnormalised: its trace then carries the
//! estimated source brightness rather than 1. The ensembles mirror the
//! standard numerical-study recipes: Haar-random pure states, Werner-like
//! mixtures, two-qubit Werner states built on maximally entangled states,
//! and a rank-biased ensemble that reaches every boundary rank.

use crate::error::Error;
use crate::linalg::{eig_hermitian, gram_schmidt, vec_norm, Complex64, ComplexMatrix};
use crate::rng::standard_complex_normal;
use crate::Result;
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// Hermiticity tolerance for state validation.
const HERMITIAN_TOL: f64 = 1e-12;
/// Positivity slack, relative to the trace.
const PSD_SLACK: f64 = 1e-9;

/// A Hermitian, positive-semidefinite matrix with positive trace.
///
/// Normalised states have trace 1; unnormalised reconstructions carry the
/// brightness estimate as their trace. Eigenvalues are computed once at
/// construction and cached in descending order.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl DensityMatrix {
    /// Validates and wraps a matrix: Hermitian within 1e-12, minimum
    /// eigenvalue ≥ −1e-9·trace, trace > 0.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::domain("density matrix must be square"));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian);
        }
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return Err(Error::domain(format!(
                "density matrix trace must be positive, got {trace}"
            )));
        }
        let eig = eig_hermitian(&matrix)?;
        let min = *eig.values.last().expect("d >= 1");
        if min < -PSD_SLACK * trace {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite: min eigenvalue {min} for trace {trace}"
            )));
        }
        Ok(Self {
            matrix,
            eigenvalues: eig.values,
        })
    }

    /// Builds |ψ⟩⟨ψ| from (not necessarily normalised) amplitudes.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm = vec_norm(amplitudes);
        if norm <= 0.0 {
            return Err(Error::domain("pure state needs a nonzero amplitude vector"));
        }
        let normed: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&normed))
    }

    /// I/d.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        Self::new(ComplexMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, descending. May include tiny negatives within the
    /// positivity slack.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The same state with trace 1.
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self {
            matrix: self.matrix.scale(1.0 / t),
            eigenvalues: self.eigenvalues.iter().map(|l| l / t).collect(),
        }
    }

    /// The state scaled by a positive factor (e.g. a brightness).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            matrix: self.matrix.scale(factor),
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
        })
    }

    /// Tr[ρ²] of the trace-normalised state, in [1/d, 1].
    pub fn purity(&self) -> f64 {
        let t = self.trace();
        let frob = self.matrix.frobenius_norm();
        (frob * frob) / (t * t)
    }

    /// Uhlmann fidelity (Tr√(√a b √a))² between trace-normalised states.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let a = self.normalized();
        let b = other.normalized();
        let ea = eig_hermitian(&a.matrix)?;
        let d = self.dim();
        // √a, with numerical negatives clipped before the square root
        let mut sqrt_a = ComplexMatrix::zeros(d, d);
        for (k, &l) in ea.values.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let col = ea.vectors.column(k);
            sqrt_a = sqrt_a.add(&ComplexMatrix::outer(&col).scale(l.sqrt()));
        }
        let inner = sqrt_a.mul(b.matrix()).mul(&sqrt_a);
        let em = eig_hermitian(&inner.hermitian_part())?;
        // eigenvalues at the rounding floor of the triple product are
        // noise: their square roots would inject ~1e-8 asymmetry
        let clip = 1e-13 * em.values.first().map(|l| l.max(0.0)).unwrap_or(0.0);
        let root_sum: f64 = em
            .values
            .iter()
            .filter(|&&l| l > clip)
            .map(|l| l.sqrt())
            .sum();
        Ok((root_sum * root_sum).min(1.0))
    }

    /// Number of eigenvalues of the trace-normalised state strictly above
    /// `threshold`.
    pub fn effective_rank(&self, threshold: f64) -> usize {
        let t = self.trace();
        self.eigenvalues.iter().filter(|&&l| l / t > threshold).count()
    }
}

// ── random states ────────────────────────────────────────────────────────

/// Haar-random pure state |ψ⟩⟨ψ| of dimension `d ≥ 2`.
pub fn haar_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::domain(format!("haar_pure needs d >= 2, got {d}")));
    }
    let v: Vec<Complex64> = (0..d).map(|_| standard_complex_normal(rng)).collect();
    DensityMatrix::from_pure(&v)
}

/// Werner-like mixture p|ψ⟩⟨ψ| + (1−p)·I/d with Haar-random |ψ⟩.
pub fn werner_like<R: Rng + ?Sized>(d: usize, p: f64, rng: &mut R) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "mixing parameter p must be in [0,1], got {p}"
        )));
    }
    let pure = haar_pure(d, rng)?;
    let mixed = pure
        .matrix()
        .scale(p)
        .add(&ComplexMatrix::identity(d).scale((1.0 - p) / d as f64));
    DensityMatrix::new(mixed)
}

/// Haar-random unitary via modified Gram–Schmidt of a Ginibre matrix.
/// MGS normalises by the real residual norm, which is exactly the phase
/// convention that makes the output Haar-distributed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    loop {
        let cols: Vec<Vec<Complex64>> = (0..d)
            .map(|_| (0..d).map(|_| standard_complex_normal(rng)).collect())
            .collect();
        match gram_schmidt(&cols) {
            Ok(q) => return Ok(ComplexMatrix::from_fn(d, d, |i, j| q[j][i])),
            Err(Error::RankDeficient) => continue, // measure-zero draw, resample
            Err(e) => return Err(e),
        }
    }
}

/// Two-qubit Werner state p|ψ⟩⟨ψ| + (1−p)·I₄/4 where |ψ⟩ is a Haar-random
/// maximally entangled state (random local unitaries on the Bell state).
pub fn werner_two_qubit<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "mixing parameter p must be in [0,1], got {p}"
        )));
    }
    let ua = haar_unitary(2, rng)?;
    let ub = haar_unitary(2, rng)?;
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let bell = [
        Complex64::new(s, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
    ];
    let psi = ua.kron(&ub).apply(&bell);
    let mixed = ComplexMatrix::outer(&psi)
        .scale(p)
        .add(&ComplexMatrix::identity(4).scale((1.0 - p) / 4.0));
    DensityMatrix::new(mixed)
}

/// Rank-biased random state: rank drawn uniformly from 1..=d, eigenvalues
/// from a flat Dirichlet, eigenvectors a Gram–Schmidt-orthonormalised
/// Haar frame. Guarantees that every rank occurs.
pub fn rank_biased<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::domain(format!("rank_biased needs d >= 2, got {d}")));
    }
    let rank = rng.gen_range(1..=d);
    // flat Dirichlet on the rank-simplex: normalised unit exponentials
    let mut weights: Vec<f64> = (0..rank)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let frame = loop {
        let cols: Vec<Vec<Complex64>> = (0..rank)
            .map(|_| (0..d).map(|_| standard_complex_normal(rng)).collect())
            .collect();
        match gram_schmidt(&cols) {
            Ok(q) => break q,
            Err(Error::RankDeficient) => continue,
            Err(e) => return Err(e),
        }
    };
    let mut m = ComplexMatrix::zeros(d, d);
    for (w, v) in weights.iter().zip(&frame) {
        m = m.add(&ComplexMatrix::outer(v).scale(*w));
    }
    DensityMatrix::new(m)
}

// ── ensembles ────────────────────────────────────────────────────────────

/// The random-state families used by the numerical studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// p|ψ⟩⟨ψ| + (1−p)I/d, |ψ⟩ Haar-random.
    WernerLike,
    /// Two-qubit Werner states on maximally entangled |ψ⟩.
    WernerTwoQubit,
    /// Uniform rank, flat Dirichlet eigenvalues (boundary-biased).
    RankBiased,
    /// Haar-random pure states.
    HaarPure,
}

/// Recipe for drawing target states.
#[derive(Debug, Clone)]
pub struct StateEnsembleSpec {
    pub kind: EnsembleKind,
    pub dim: usize,
    /// Mixing-parameter interval for the Werner families.
    pub p_range: (f64, f64),
    pub count: usize,
    pub seed: u64,
}

impl StateEnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.p_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::domain(format!(
                "p_range must be an interval within [0,1], got [{lo}, {hi}]"
            )));
        }
        if self.count < 1 {
            return Err(Error::domain("ensemble count must be at least 1"));
        }
        if self.kind == EnsembleKind::WernerTwoQubit && self.dim != 4 {
            return Err(Error::domain("werner_two_qubit requires dim = 4"));
        }
        if self.dim < 2 {
            return Err(Error::domain("ensemble dimension must be at least 2"));
        }
        Ok(())
    }

    /// Draws one target state from the ensemble.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DensityMatrix> {
        let (lo, hi) = self.p_range;
        let p = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        match self.kind {
            EnsembleKind::WernerLike => werner_like(self.dim, p, rng),
            EnsembleKind::WernerTwoQubit => werner_two_qubit(p, rng),
            EnsembleKind::RankBiased => rank_biased(self.dim, rng),
            EnsembleKind::HaarPure => haar_pure(self.dim, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;

    #[test]
    fn haar_pure_is_pure_and_normalised() {
        let mut rng = stream_from_seed(1);
        for _ in 0..100 {
            let s = haar_pure(3, &mut rng).unwrap();
            assert!((s.trace() - 1.0).abs() < 1e-12);
            assert!((s.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_pure_average_state_is_maximally_mixed() {
        // mean Bloch vector of the average qubit state ≈ 0
        let mut rng = stream_from_seed(2);
        let n = 100_000;
        let mut avg = ComplexMatrix::zeros(2, 2);
        for _ in 0..n {
            avg = avg.add(haar_pure(2, &mut rng).unwrap().matrix());
        }
        avg = avg.scale(1.0 / n as f64);
        let bx = 2.0 * avg.get(0, 1).re;
        let by = -2.0 * avg.get(0, 1).im;
        let bz = avg.get(0, 0).re - avg.get(1, 1).re;
        let mag = (bx * bx + by * by + bz * bz).sqrt();
        assert!(mag < 0.02, "Bloch magnitude {mag}");
    }

    #[test]
    fn haar_pure_component_symmetry() {
        let mut rng = stream_from_seed(3);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| haar_pure(4, &mut rng).unwrap().matrix().get(0, 0).re)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean |⟨0|ψ⟩|² = {mean}");
    }

    #[test]
    fn werner_like_limits() {
        let mut rng = stream_from_seed(4);
        let mixed = werner_like(3, 0.0, &mut rng).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((mixed.matrix().get(i, j).re - want).abs() < 1e-14);
                assert!(mixed.matrix().get(i, j).im.abs() < 1e-14);
            }
        }
        let pure = werner_like(3, 1.0, &mut rng).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn werner_like_qubit_half_mix() {
        let mut rng = stream_from_seed(5);
        let s = werner_like(2, 0.5, &mut rng).unwrap();
        let ev = s.eigenvalues();
        assert!((ev[0] - 0.75).abs() < 1e-12);
        assert!((ev[1] - 0.25).abs() < 1e-12);
        assert!((s.purity() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn werner_like_purity_analytic() {
        let mut rng = stream_from_seed(6);
        for &(d, p) in &[(2, 0.3), (3, 0.7), (4, 0.5), (5, 0.0), (4, 1.0)] {
            let s = werner_like(d, p, &mut rng).unwrap();
            let want = p * p * (1.0 - 1.0 / d as f64) + 1.0 / d as f64;
            assert!((s.purity() - want).abs() < 1e-12, "d={d} p={p}");
        }
    }

    #[test]
    fn werner_two_qubit_third_mix_eigenvalues() {
        let mut rng = stream_from_seed(7);
        let s = werner_two_qubit(1.0 / 3.0, &mut rng).unwrap();
        let ev = s.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-10);
        for &l in &ev[1..] {
            assert!((l - 1.0 / 6.0).abs() < 1e-10);
        }
    }

    #[test]
    fn werner_two_qubit_pure_is_maximally_entangled() {
        let mut rng = stream_from_seed(8);
        let s = werner_two_qubit(1.0, &mut rng).unwrap();
        // both reduced states = I/2
        let m = s.matrix();
        for (reduce_first, label) in [(false, "A"), (true, "B")] {
            let mut red = ComplexMatrix::zeros(2, 2);
            for a in 0..2 {
                for b in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..2 {
                        let (i, j) = if reduce_first {
                            (k * 2 + a, k * 2 + b)
                        } else {
                            (a * 2 + k, b * 2 + k)
                        };
                        acc += m.get(i, j);
                    }
                    red.set(a, b, acc);
                }
            }
            let diff = red.sub(&ComplexMatrix::identity(2).scale(0.5)).max_abs();
            assert!(diff < 1e-10, "subsystem {label} not maximally mixed: {diff}");
        }
    }

    #[test]
    fn rank_biased_rank_frequencies() {
        let mut rng = stream_from_seed(9);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let s = rank_biased(4, &mut rng).unwrap();
            // construction rank = eigenvalues above a robust cutoff
            let r = s.effective_rank(1e-9);
            counts[r - 1] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.01, "rank {} frequency {f}", i + 1);
        }
    }

    #[test]
    fn rank_biased_always_valid() {
        let mut rng = stream_from_seed(10);
        for _ in 0..1000 {
            let s = rank_biased(4, &mut rng).unwrap();
            assert!((s.trace() - 1.0).abs() < 1e-12);
            assert!(*s.eigenvalues().last().unwrap() > -1e-9);
        }
    }

    #[test]
    fn generators_pass_invariants_bulk() {
        // 10⁴ seeded draws across all generators
        let mut rng = stream_from_seed(11);
        for i in 0..10_000 {
            let s = match i % 4 {
                0 => haar_pure(2 + i % 3, &mut rng).unwrap(),
                1 => werner_like(2 + i % 3, (i % 101) as f64 / 100.0, &mut rng).unwrap(),
                2 => werner_two_qubit((i % 101) as f64 / 100.0, &mut rng).unwrap(),
                _ => rank_biased(2 + i % 3, &mut rng).unwrap(),
            };
            assert!((s.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn purity_of_maximally_mixed() {
        let s = DensityMatrix::maximally_mixed(4).unwrap();
        assert!((s.purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn purity_of_half_half_state() {
        // eigenvalues {1/2, 1/2, 0, 0} → purity 1/2
        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(0, 0, Complex64::new(0.5, 0.0));
        m.set(1, 1, Complex64::new(0.5, 0.0));
        let s = DensityMatrix::new(m).unwrap();
        assert!((s.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_with_self_is_one() {
        let mut rng = stream_from_seed(12);
        for _ in 0..10 {
            let s = rank_biased(3, &mut rng).unwrap();
            let f = s.fidelity(&s).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "fidelity {f}");
        }
    }

    #[test]
    fn fidelity_orthogonal_pure_states() {
        let zero =
            DensityMatrix::from_pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
                .unwrap();
        let one =
            DensityMatrix::from_pure(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
                .unwrap();
        assert!(zero.fidelity(&one).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_pure_vs_mixed() {
        let zero =
            DensityMatrix::from_pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
                .unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let f = zero.fidelity(&mixed).unwrap();
        assert!((f - 0.5).abs() < 1e-10, "fidelity {f}");
    }

    #[test]
    fn fidelity_symmetric_and_unitarily_invariant() {
        let mut rng = stream_from_seed(13);
        for _ in 0..10 {
            let a = rank_biased(3, &mut rng).unwrap();
            let b = rank_biased(3, &mut rng).unwrap();
            let fab = a.fidelity(&b).unwrap();
            let fba = b.fidelity(&a).unwrap();
            assert!((fab - fba).abs() < 1e-10);
            let u = haar_unitary(3, &mut rng).unwrap();
            let conj = |s: &DensityMatrix| {
                DensityMatrix::new(u.mul(s.matrix()).mul(&u.dagger()).hermitian_part()).unwrap()
            };
            let fuu = conj(&a).fidelity(&conj(&b)).unwrap();
            assert!((fab - fuu).abs() < 1e-8, "{fab} vs {fuu}");
        }
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let b = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(a.fidelity(&b).is_err());
    }

    #[test]
    fn effective_rank_cases() {
        assert_eq!(
            DensityMatrix::maximally_mixed(4)
                .unwrap()
                .effective_rank(1e-6),
            4
        );
        let pure =
            DensityMatrix::from_pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
                .unwrap();
        assert_eq!(pure.effective_rank(1e-6), 1);

        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(0, 0, Complex64::new(0.7, 0.0));
        m.set(1, 1, Complex64::new(0.3 - 5e-7, 0.0));
        m.set(2, 2, Complex64::new(5e-7, 0.0));
        let s = DensityMatrix::new(m).unwrap();
        assert_eq!(s.effective_rank(1e-6), 2);
    }

    #[test]
    fn effective_rank_scale_invariant() {
        let mut rng = stream_from_seed(14);
        for _ in 0..50 {
            let s = rank_biased(4, &mut rng).unwrap();
            let scaled = s.scaled(1234.5).unwrap();
            assert_eq!(s.effective_rank(1e-6), scaled.effective_rank(1e-6));
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mut rng = stream_from_seed(15);
        assert!(werner_like(2, -0.1, &mut rng).is_err());
        assert!(werner_like(2, 1.1, &mut rng).is_err());
        assert!(werner_two_qubit(2.0, &mut rng).is_err());
        assert!(haar_pure(1, &mut rng).is_err());

        // non-PSD matrix rejected
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 0, Complex64::new(1.5, 0.0));
        m.set(1, 1, Complex64::new(-0.5, 0.0));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn ensemble_spec_draw_and_validate() {
        let spec = StateEnsembleSpec {
            kind: EnsembleKind::WernerLike,
            dim: 2,
            p_range: (1.0 / 3.0, 2.0 / 3.0),
            count: 10,
            seed: 0,
        };
        spec.validate().unwrap();
        let mut rng = stream_from_seed(spec.seed);
        for _ in 0..spec.count {
            let s = spec.draw(&mut rng).unwrap();
            let p = ((s.purity() - 0.5) * 2.0).sqrt(); // invert qubit purity
            assert!((0.33..=0.67).contains(&p), "recovered p = {p}");
        }

        let bad = StateEnsembleSpec {
            kind: EnsembleKind::WernerTwoQubit,
            dim: 2,
            p_range: (0.0, 1.0),
            count: 1,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
