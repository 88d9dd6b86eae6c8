//! Dense complex linear algebra for small dimensions (d ≤ 16).
//!
//! Everything here is sized for tomography workloads: Hermitian
//! eigendecomposition by cyclic Jacobi rotations, a real Moore–Penrose
//! pseudoinverse, Gram–Schmidt orthonormalisation and the generalised
//! Gell-Mann operator basis. No BLAS, no sparsity, no cleverness — the
//! matrices are tiny and the point is deterministic, dependency-free
//! numerics.

use crate::error::Error;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

pub type Complex64 = num_complex::Complex<f64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "entry count {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Rank-1 projector |v⟩⟨v|.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + aik * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Kronecker product.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, rhs.rows, rhs.cols);
        Self::from_fn(r1 * r2, c1 * c2, |i, j| {
            self.get(i / r2, j / c2) * rhs.get(i % r2, j % c2)
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Elementwise Hermiticity check: max |A - A†| ≤ tol·(1 + max |A|).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let bound = tol * (1.0 + self.max_abs());
        for i in 0..self.rows {
            for j in i..self.cols {
                let diff = self.get(i, j) - self.get(j, i).conj();
                if diff.norm() > bound {
                    return false;
                }
            }
        }
        true
    }

    /// (A + A†)/2 — exact symmetrisation before eigendecomposition.
    pub fn hermitian_part(&self) -> Self {
        debug_assert_eq!(self.rows, self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Hilbert–Schmidt inner product Tr[A†B].
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    debug_assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Real part of Tr[A†B]; exact value of the inner product when both
/// operands are Hermitian.
pub fn hs_inner_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

// ── Hermitian eigendecomposition ─────────────────────────────────────────

/// Eigendecomposition of a Hermitian matrix: `values` sorted descending,
/// `vectors` holds the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 64;

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigendecomposition for Hermitian matrices.
///
/// Sweeps rotate out each off-diagonal pivot in turn until the
/// off-diagonal Frobenius norm falls below 1e-14 of the matrix norm.
/// Eigenvalues come back sorted descending; degenerate clusters are
/// re-orthonormalised and each eigenvector's phase is fixed so its
/// largest component is real positive, which keeps golden outputs stable.
pub fn eig_hermitian(matrix: &ComplexMatrix) -> Result<HermitianEig> {
    if matrix.rows() != matrix.cols() {
        return Err(Error::domain(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_hermitian(1e-12) {
        return Err(Error::NotHermitian);
    }
    let n = matrix.rows();
    let mut a = matrix.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale > 0.0 {
        let tol = 1e-14 * scale;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&a) <= tol {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q, tol / (n * n) as f64);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut values: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    let columns: Vec<Vec<Complex64>> = (0..n).map(|j| canonical_phase(v.column(j))).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| compare_columns(&columns[i], &columns[j]))
    });
    values = order.iter().map(|&i| values[i]).collect();
    let mut sorted: Vec<Vec<Complex64>> = order.into_iter().map(|i| columns[i].clone()).collect();

    reorthonormalise_clusters(&values, &mut sorted, scale);

    let vectors = ComplexMatrix::from_fn(n, n, |i, j| sorted[j][i]);
    Ok(HermitianEig { values, vectors })
}

/// One complex Jacobi rotation zeroing the (p, q) pivot.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, skip: f64) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag <= skip {
        return;
    }
    let phase = apq / mag; // e^{iθ}; the phased pivot becomes real
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.rows();
    // column update: A ← A·U with U = [[e^{iθ}c, e^{iθ}s], [−s, c]] on (p,q)
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * phase * c - akq * s);
        a.set(k, q, akp * phase * s + akq * c);
    }
    // row update: A ← U†·A
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, apk * phase.conj() * c - aqk * s);
        a.set(q, k, apk * phase.conj() * s + aqk * c);
    }
    a.set(p, q, ZERO);
    a.set(q, p, ZERO);
    let dp = a.get(p, p);
    let dq = a.get(q, q);
    a.set(p, p, Complex64::new(dp.re, 0.0));
    a.set(q, q, Complex64::new(dq.re, 0.0));
    // accumulate eigenvectors
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * phase * c - vkq * s);
        v.set(k, q, vkp * phase * s + vkq * c);
    }
}

/// Rotates a vector's global phase so its largest component is real
/// positive.
fn canonical_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let mut best = 0usize;
    let mut best_norm = 0.0;
    for (i, z) in v.iter().enumerate() {
        let n = z.norm();
        if n > best_norm + 1e-12 * (1.0 + best_norm) {
            best_norm = n;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let rot = v[best].conj() / best_norm;
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
    v
}

/// Deterministic ordering for ties: the column whose first differing
/// component is larger (by real part, then imaginary part) comes first.
fn compare_columns(a: &[Complex64], b: &[Complex64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.re.partial_cmp(&x.re) {
            Some(core::cmp::Ordering::Equal) | None => {}
            Some(ord) => return ord,
        }
        match y.im.partial_cmp(&x.im) {
            Some(core::cmp::Ordering::Equal) | None => {}
            Some(ord) => return ord,
        }
    }
    core::cmp::Ordering::Equal
}

/// Gram–Schmidt pass inside each degenerate eigenvalue cluster.
fn reorthonormalise_clusters(values: &[f64], columns: &mut [Vec<Complex64>], scale: f64) {
    let tol = 1e-12 * scale.max(1.0);
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            for j in start..end {
                for k in start..j {
                    let proj = vec_inner(&columns[k], &columns[j]);
                    let prior = columns[k].clone();
                    for (z, u) in columns[j].iter_mut().zip(&prior) {
                        *z -= proj * u;
                    }
                }
                let norm = vec_norm(&columns[j]);
                if norm > 0.0 {
                    for z in columns[j].iter_mut() {
                        *z /= norm;
                    }
                }
            }
        }
        start = end;
    }
}

// ── complex vector helpers ───────────────────────────────────────────────

/// ⟨a|b⟩, conjugate-linear in the first argument.
pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalises linearly independent complex vectors (modified
/// Gram–Schmidt with one re-orthogonalisation pass).
///
/// Fails with [`Error::RankDeficient`] when a residual drops below 1e-12
/// of the vector's own norm.
pub fn gram_schmidt(vectors: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::domain("gram_schmidt vectors must share a dimension"));
    }
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let norm0 = vec_norm(v);
        if norm0 < 1e-300 {
            return Err(Error::RankDeficient);
        }
        let mut w: Vec<Complex64> = v.iter().map(|z| z / norm0).collect();
        for _pass in 0..2 {
            for u in &out {
                let proj = vec_inner(u, &w);
                for (z, uz) in w.iter_mut().zip(u) {
                    *z -= proj * uz;
                }
            }
        }
        let norm = vec_norm(&w);
        if norm < 1e-12 {
            return Err(Error::RankDeficient);
        }
        for z in w.iter_mut() {
            *z /= norm;
        }
        out.push(w);
    }
    Ok(out)
}

// ── real matrices and the pseudoinverse ──────────────────────────────────

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + aik * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Symmetric eigendecomposition of the Gram matrix on the smaller
    /// side, reused for singular values and the pseudoinverse.
    fn gram_eig(&self) -> (bool, HermitianEig) {
        let use_cols = self.cols <= self.rows;
        let side = if use_cols { self.cols } else { self.rows };
        let mut gram = ComplexMatrix::zeros(side, side);
        for i in 0..side {
            for j in i..side {
                let mut acc = 0.0;
                if use_cols {
                    for k in 0..self.rows {
                        acc += self.get(k, i) * self.get(k, j);
                    }
                } else {
                    for k in 0..self.cols {
                        acc += self.get(i, k) * self.get(j, k);
                    }
                }
                gram.set(i, j, Complex64::new(acc, 0.0));
                gram.set(j, i, Complex64::new(acc, 0.0));
            }
        }
        let eig = eig_hermitian(&gram).expect("gram matrix is symmetric by construction");
        (use_cols, eig)
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let (_, eig) = self.gram_eig();
        eig.values
            .iter()
            .map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 })
            .collect()
    }

    /// Number of singular values above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.singular_values()
            .into_iter()
            .filter(|&s| s > cutoff)
            .count()
    }
}

/// Moore–Penrose pseudoinverse via eigendecomposition of the Gram matrix.
///
/// Singular values below 1e-12 of the largest are treated as zero.
pub fn pseudoinverse(a: &RealMatrix) -> RealMatrix {
    let (use_cols, eig) = a.gram_eig();
    let smax = eig.values.first().map(|&l| l.max(0.0).sqrt()).unwrap_or(0.0);
    let cutoff = 1e-12 * smax;
    let mut out = RealMatrix::zeros(a.cols(), a.rows());
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 0.0 || lambda.sqrt() <= cutoff {
            continue;
        }
        let v: Vec<f64> = eig.vectors.column(idx).iter().map(|z| z.re).collect();
        if use_cols {
            // A⁺ = Σ v (A v)ᵀ / λ over kept eigenpairs of AᵀA
            let av = a.matvec(&v);
            for i in 0..a.cols() {
                for j in 0..a.rows() {
                    let val = out.get(i, j) + v[i] * av[j] / lambda;
                    out.set(i, j, val);
                }
            }
        } else {
            // u from AAᵀ; A⁺ = Σ (Aᵀu) uᵀ / λ
            let atv: Vec<f64> = (0..a.cols())
                .map(|i| (0..a.rows()).map(|k| a.get(k, i) * v[k]).sum())
                .collect();
            for i in 0..a.cols() {
                for j in 0..a.rows() {
                    let val = out.get(i, j) + atv[i] * v[j] / lambda;
                    out.set(i, j, val);
                }
            }
        }
    }
    out
}

// ── Hermitian operator basis ─────────────────────────────────────────────

/// Trace-orthonormal Hermitian operator basis: identity/√d first, then
/// the generalised Gell-Mann construction (pair operators, then the
/// diagonal ladder).
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Coordinates of a Hermitian matrix: c_k = Tr[O_k† A] (real).
    pub fn expand(&self, matrix: &ComplexMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|o| hs_inner_re(o, matrix))
            .collect()
    }

    /// Σ_k c_k O_k.
    pub fn assemble(&self, coords: &[f64]) -> ComplexMatrix {
        debug_assert_eq!(coords.len(), self.elements.len());
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, o) in coords.iter().zip(&self.elements) {
            if *c == 0.0 {
                continue;
            }
            out = out.add(&o.scale(*c));
        }
        out
    }
}

/// Builds the orthonormal Hermitian basis for dimension `d ≥ 2`.
pub fn hermitian_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::domain(format!("operator basis needs d >= 2, got {d}")));
    }
    let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(d * d);

    let scale = 1.0 / (d as f64).sqrt();
    elements.push(ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(scale, 0.0)
        } else {
            ZERO
        }
    }));

    for j in 0..d {
        for k in j + 1..d {
            // symmetric: (|j⟩⟨k| + |k⟩⟨j|)/√2
            let mut sym = ComplexMatrix::zeros(d, d);
            sym.set(j, k, Complex64::new(inv_sqrt2, 0.0));
            sym.set(k, j, Complex64::new(inv_sqrt2, 0.0));
            elements.push(sym);
            // antisymmetric: (−i|j⟩⟨k| + i|k⟩⟨j|)/√2
            let mut asym = ComplexMatrix::zeros(d, d);
            asym.set(j, k, Complex64::new(0.0, -inv_sqrt2));
            asym.set(k, j, Complex64::new(0.0, inv_sqrt2));
            elements.push(asym);
        }
    }

    for m in 1..d {
        // (Σ_{i<m} |i⟩⟨i| − m|m⟩⟨m|)/√(m(m+1))
        let norm = 1.0 / ((m * (m + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(d, d);
        for i in 0..m {
            diag.set(i, i, Complex64::new(norm, 0.0));
        }
        diag.set(m, m, Complex64::new(-(m as f64) * norm, 0.0));
        elements.push(diag);
    }

    Ok(OperatorBasis { dim: d, elements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_complex_normal, stream_from_seed};

    fn random_hermitian(d: usize, rng: &mut crate::rng::Stream) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(d, d, |_, _| standard_complex_normal(rng));
        g.hermitian_part()
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_z_eigenvalues() {
        let mut z = ComplexMatrix::zeros(2, 2);
        z.set(0, 0, Complex64::new(1.0, 0.0));
        z.set(1, 1, Complex64::new(-1.0, 0.0));
        let eig = eig_hermitian(&z).unwrap();
        assert_eq!(eig.values.len(), 2);
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reassembles() {
        // 1000 seeded random matrices across dimensions
        let mut rng = stream_from_seed(2024);
        for case in 0..1000 {
            let d = 2 + case % 7; // 2..=8
            let h = random_hermitian(d, &mut rng);
            let eig = eig_hermitian(&h).unwrap();
            let lam_max = eig.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
            let tol = 1e-10 * lam_max.max(1.0);

            // V Λ V† = H
            let mut rebuilt = ComplexMatrix::zeros(d, d);
            for (k, &l) in eig.values.iter().enumerate() {
                let col = eig.vectors.column(k);
                rebuilt = rebuilt.add(&ComplexMatrix::outer(&col).scale(l));
            }
            assert!(
                rebuilt.sub(&h).max_abs() < tol,
                "case {case} d={d}: reassembly error {}",
                rebuilt.sub(&h).max_abs()
            );

            // V†V = I
            let vtv = eig.vectors.dagger().mul(&eig.vectors);
            assert!(vtv.sub(&ComplexMatrix::identity(d)).max_abs() < 1e-10);

            // descending order
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }

            // trace identity
            let tr: f64 = eig.values.iter().sum();
            assert!((tr - h.trace().re).abs() < 1e-10 * lam_max.max(1.0));
        }
    }

    #[test]
    fn eigenvalue_shift_by_constant() {
        let mut rng = stream_from_seed(5);
        for _ in 0..20 {
            let h = random_hermitian(4, &mut rng);
            let shifted = h.add(&ComplexMatrix::identity(4).scale(2.5));
            let a = eig_hermitian(&h).unwrap();
            let b = eig_hermitian(&shifted).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((y - x - 2.5).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian)));
    }

    #[test]
    fn pseudoinverse_of_identity() {
        let p = pseudoinverse(&RealMatrix::identity(3));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pseudoinverse_of_column_vector() {
        let a = RealMatrix::from_fn(2, 1, |_, _| 1.0);
        let p = pseudoinverse(&a);
        assert_eq!((p.rows(), p.cols()), (1, 2));
        assert!((p.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((p.get(0, 1) - 0.5).abs() < 1e-12);
    }

    fn check_penrose(a: &RealMatrix, p: &RealMatrix, tol: f64) {
        let apa = a.mul(p).mul(a);
        let pap = p.mul(a).mul(p);
        let ap = a.mul(p);
        let pa = p.mul(a);
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert!((apa.get(i, j) - a.get(i, j)).abs() < tol, "APA=A fails");
            }
        }
        for i in 0..p.rows() {
            for j in 0..p.cols() {
                assert!((pap.get(i, j) - p.get(i, j)).abs() < tol, "PAP=P fails");
            }
        }
        for i in 0..ap.rows() {
            for j in 0..ap.cols() {
                assert!((ap.get(i, j) - ap.get(j, i)).abs() < tol, "(AP)ᵀ=AP fails");
            }
        }
        for i in 0..pa.rows() {
            for j in 0..pa.cols() {
                assert!((pa.get(i, j) - pa.get(j, i)).abs() < tol, "(PA)ᵀ=PA fails");
            }
        }
    }

    #[test]
    fn pseudoinverse_random_penrose_identities() {
        let mut rng = stream_from_seed(31);
        for case in 0..50 {
            let (m, k) = if case % 2 == 0 { (36, 16) } else { (9, 12) };
            let a = RealMatrix::from_fn(m, k, |_, _| crate::rng::standard_normal(&mut rng));
            let p = pseudoinverse(&a);
            check_penrose(&a, &p, 1e-9 * a.max_abs().max(1.0));
        }
    }

    #[test]
    fn pseudoinverse_full_column_rank_is_left_inverse() {
        let mut rng = stream_from_seed(77);
        let a = RealMatrix::from_fn(36, 16, |_, _| crate::rng::standard_normal(&mut rng));
        let p = pseudoinverse(&a);
        let pa = p.mul(&a);
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((pa.get(i, j) - want).abs() < 1e-10, "PA != I at ({i},{j})");
            }
        }
    }

    #[test]
    fn pseudoinverse_of_invertible_square_equals_inverse() {
        let mut rng = stream_from_seed(123);
        let a = RealMatrix::from_fn(5, 5, |_, _| crate::rng::standard_normal(&mut rng));
        let p = pseudoinverse(&a);
        let pa = p.mul(&a);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((pa.get(i, j) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gram_schmidt_identity_case() {
        let e0 = vec![ONE, ZERO];
        let e1 = vec![ZERO, ONE];
        let out = gram_schmidt(&[e0.clone(), e1.clone()]).unwrap();
        assert!((vec_norm(&out[0]) - 1.0).abs() < 1e-14);
        assert_eq!(out[0], e0);
        assert_eq!(out[1], e1);
    }

    #[test]
    fn gram_schmidt_two_vectors() {
        let v0 = vec![ONE, ZERO];
        let v1 = vec![ONE, ONE];
        let out = gram_schmidt(&[v0, v1]).unwrap();
        // second output is (0,1) up to phase
        assert!(out[1][0].norm() < 1e-14);
        assert!((out[1][1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gram_schmidt_random_frame_is_orthonormal() {
        let mut rng = stream_from_seed(9);
        for _ in 0..100 {
            let vecs: Vec<Vec<Complex64>> = (0..4)
                .map(|_| (0..4).map(|_| standard_complex_normal(&mut rng)).collect())
                .collect();
            let out = gram_schmidt(&vecs).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let got = vec_inner(&out[i], &out[j]);
                    assert!((got.norm() - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_schmidt_detects_dependence() {
        let v0 = vec![ONE, ZERO];
        let v1 = vec![Complex64::new(2.0, 0.0), ZERO];
        assert_eq!(gram_schmidt(&[v0, v1]), Err(Error::RankDeficient));
    }

    #[test]
    fn basis_d2_is_pauli() {
        let basis = hermitian_basis(2).unwrap();
        assert_eq!(basis.len(), 4);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        // I/√2
        assert!((basis.elements()[0].get(0, 0).re - s).abs() < 1e-15);
        // X/√2
        assert!((basis.elements()[1].get(0, 1).re - s).abs() < 1e-15);
        // Y/√2
        assert!((basis.elements()[2].get(0, 1).im + s).abs() < 1e-15);
        // Z/√2
        assert!((basis.elements()[3].get(1, 1).re + s).abs() < 1e-15);
    }

    #[test]
    fn basis_orthonormal_and_spanning() {
        for d in 2..=4 {
            let basis = hermitian_basis(d).unwrap();
            assert_eq!(basis.len(), d * d);
            for (j, oj) in basis.elements().iter().enumerate() {
                assert!(oj.is_hermitian(1e-14));
                for (k, ok) in basis.elements().iter().enumerate() {
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!(
                        (hs_inner(oj, ok).norm() - want).abs() < 1e-12,
                        "d={d} ({j},{k})"
                    );
                }
            }
            // spans: Gram system has full real rank d²
            let gram = RealMatrix::from_fn(d * d, d * d, |j, k| {
                hs_inner_re(&basis.elements()[j], &basis.elements()[k])
            });
            assert_eq!(gram.rank(1e-10), d * d);
        }
    }

    #[test]
    fn basis_round_trip() {
        let mut rng = stream_from_seed(55);
        for d in 2..=5 {
            let basis = hermitian_basis(d).unwrap();
            let h = random_hermitian(d, &mut rng);
            let coords = basis.expand(&h);
            let rebuilt = basis.assemble(&coords);
            assert!(rebuilt.sub(&h).max_abs() < 1e-12 * h.max_abs().max(1.0));
        }
    }

    #[test]
    fn basis_rejects_small_dimension() {
        assert!(hermitian_basis(1).is_err());
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        let k = i2.kron(&i2);
        assert_eq!(k, ComplexMatrix::identity(4));
    }
}
