//! Informationally complete projector sets.
//!
//! Single-qubit sets take their measurement directions from the face
//! normals of the platonic solids (equivalently, the vertices of the dual
//! solid); multi-qubit sets are tensor products of those; qudits use a
//! generalised cube set probing every basis population and coherence.
//! Each set carries the coefficient matrix mapping operator-basis
//! coordinates to outcome probabilities, plus its pseudoinverse for
//! linear reconstruction.

use crate::error::Error;
use crate::linalg::{
    hermitian_basis, hs_inner_re, pseudoinverse, Complex64, ComplexMatrix, OperatorBasis,
    RealMatrix,
};
use crate::Result;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Singular-value cutoff for completeness rank decisions.
const RANK_CUTOFF: f64 = 1e-10;
/// Validation tolerance for projector idempotence and unit trace.
const PROJECTOR_TOL: f64 = 1e-10;

/// The five solids, by face count = number of measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatonicSolid {
    Tetrahedron,
    Cube,
    Octahedron,
    Dodecahedron,
    Icosahedron,
}

impl PlatonicSolid {
    pub const ALL: [PlatonicSolid; 5] = [
        PlatonicSolid::Tetrahedron,
        PlatonicSolid::Cube,
        PlatonicSolid::Octahedron,
        PlatonicSolid::Dodecahedron,
        PlatonicSolid::Icosahedron,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlatonicSolid::Tetrahedron => "tetrahedron",
            PlatonicSolid::Cube => "cube",
            PlatonicSolid::Octahedron => "octahedron",
            PlatonicSolid::Dodecahedron => "dodecahedron",
            PlatonicSolid::Icosahedron => "icosahedron",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Unit face-normal directions on the Bloch sphere.
    fn directions(&self) -> Vec<[f64; 3]> {
        let s3 = 1.0 / 3.0f64.sqrt();
        match self {
            PlatonicSolid::Tetrahedron => vec![
                [s3, s3, s3],
                [s3, -s3, -s3],
                [-s3, s3, -s3],
                [-s3, -s3, s3],
            ],
            PlatonicSolid::Cube => vec![
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0],
            ],
            PlatonicSolid::Octahedron => {
                let mut dirs = Vec::with_capacity(8);
                for &x in &[s3, -s3] {
                    for &y in &[s3, -s3] {
                        for &z in &[s3, -s3] {
                            dirs.push([x, y, z]);
                        }
                    }
                }
                dirs
            }
            PlatonicSolid::Dodecahedron => {
                // 12 icosahedron vertices: cyclic permutations of (0, ±1, ±φ)
                let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
                let n = 1.0 / (1.0 + phi * phi).sqrt();
                let mut dirs = Vec::with_capacity(12);
                for &a in &[1.0, -1.0] {
                    for &b in &[phi, -phi] {
                        dirs.push([0.0, a * n, b * n]);
                    }
                }
                for &a in &[1.0, -1.0] {
                    for &b in &[phi, -phi] {
                        dirs.push([a * n, b * n, 0.0]);
                    }
                }
                for &a in &[phi, -phi] {
                    for &b in &[1.0, -1.0] {
                        dirs.push([a * n, 0.0, b * n]);
                    }
                }
                dirs
            }
            PlatonicSolid::Icosahedron => {
                // 20 dodecahedron vertices: (±1,±1,±1) and cyclic
                // permutations of (0, ±1/φ, ±φ), all of norm √3
                let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
                let inv = 1.0 / phi;
                let mut dirs = Vec::with_capacity(20);
                for &x in &[s3, -s3] {
                    for &y in &[s3, -s3] {
                        for &z in &[s3, -s3] {
                            dirs.push([x, y, z]);
                        }
                    }
                }
                for &a in &[inv, -inv] {
                    for &b in &[phi, -phi] {
                        dirs.push([0.0, a * s3, b * s3]);
                    }
                }
                for &a in &[inv, -inv] {
                    for &b in &[phi, -phi] {
                        dirs.push([a * s3, b * s3, 0.0]);
                    }
                }
                for &a in &[phi, -phi] {
                    for &b in &[inv, -inv] {
                        dirs.push([a * s3, 0.0, b * s3]);
                    }
                }
                dirs
            }
        }
    }
}

/// Whether a set can reconstruct arbitrary states, and how redundantly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletenessClass {
    Incomplete,
    Minimal,
    Overcomplete,
}

impl CompletenessClass {
    pub fn name(&self) -> &'static str {
        match self {
            CompletenessClass::Incomplete => "incomplete",
            CompletenessClass::Minimal => "minimal",
            CompletenessClass::Overcomplete => "overcomplete",
        }
    }
}

/// An ordered list of rank-1 projectors with the machinery for linear
/// reconstruction: the coefficient matrix q (rows are projectors expanded
/// in the Hermitian operator basis) and its pseudoinverse.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
    labels: Vec<String>,
    basis: OperatorBasis,
    coefficients: RealMatrix,
    inversion: RealMatrix,
}

impl ProjectorSet {
    /// Validates projectors and derives the coefficient machinery.
    pub fn from_projectors(
        dim: usize,
        projectors: Vec<ComplexMatrix>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::domain("projector set cannot be empty"));
        }
        if labels.len() != projectors.len() {
            return Err(Error::domain("labels must match projectors one to one"));
        }
        for (i, p) in projectors.iter().enumerate() {
            if p.rows() != dim || p.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.rows(),
                });
            }
            if !p.is_hermitian(PROJECTOR_TOL) {
                return Err(Error::domain(format!("projector {i} is not Hermitian")));
            }
            if (p.trace().re - 1.0).abs() > PROJECTOR_TOL {
                return Err(Error::domain(format!("projector {i} does not have unit trace")));
            }
            // idempotence pins the eigenvalues to {1, 0, …, 0}
            if p.mul(p).sub(p).max_abs() > PROJECTOR_TOL {
                return Err(Error::domain(format!("projector {i} is not rank-1 idempotent")));
            }
        }
        let basis = hermitian_basis(dim)?;
        let m = projectors.len();
        let coefficients = RealMatrix::from_fn(m, dim * dim, |j, k| {
            hs_inner_re(&basis.elements()[k], &projectors[j])
        });
        let inversion = pseudoinverse(&coefficients);
        Ok(Self {
            dim,
            projectors,
            labels,
            basis,
            coefficients,
            inversion,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of measurement settings M.
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    /// The M×d² coefficient matrix q with rows q_j = Tr[O_k† P_j].
    pub fn coefficients(&self) -> &RealMatrix {
        &self.coefficients
    }

    /// Pseudoinverse of the coefficient matrix (d²×M), the least-squares
    /// inversion map from measured values to basis coordinates.
    pub fn inversion(&self) -> &RealMatrix {
        &self.inversion
    }

    /// Tr[P_j A] for every projector; for Hermitian A these are the
    /// expected measurement values.
    pub fn expected_values(&self, a: &ComplexMatrix) -> Vec<f64> {
        self.projectors.iter().map(|p| hs_inner_re(p, a)).collect()
    }

    pub fn classify_completeness(&self) -> CompletenessClass {
        let rank = self.coefficients.rank(RANK_CUTOFF);
        let full = self.dim * self.dim;
        if rank < full {
            CompletenessClass::Incomplete
        } else if self.len() == full {
            CompletenessClass::Minimal
        } else {
            CompletenessClass::Overcomplete
        }
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.classify_completeness() != CompletenessClass::Incomplete
    }
}

/// Qubit projector (I + r·σ)/2 pointing along a Bloch direction.
fn bloch_projector(r: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = r;
    let mut p = ComplexMatrix::zeros(2, 2);
    p.set(0, 0, Complex64::new((1.0 + z) / 2.0, 0.0));
    p.set(0, 1, Complex64::new(x / 2.0, -y / 2.0));
    p.set(1, 0, Complex64::new(x / 2.0, y / 2.0));
    p.set(1, 1, Complex64::new((1.0 - z) / 2.0, 0.0));
    p
}

/// Single-qubit measurement set from a platonic solid's face normals.
pub fn platonic_set(solid: PlatonicSolid) -> Result<ProjectorSet> {
    let dirs = solid.directions();
    let projectors: Vec<ComplexMatrix> = dirs.iter().map(|&r| bloch_projector(r)).collect();
    let labels = (0..dirs.len())
        .map(|i| format!("{}:{i}", solid.name()))
        .collect();
    ProjectorSet::from_projectors(2, projectors, labels)
}

/// Tensor product of measurement sets, projectors in lexicographic label
/// order.
pub fn tensor_product_set(sets: &[ProjectorSet]) -> Result<ProjectorSet> {
    let Some((first, rest)) = sets.split_first() else {
        return Err(Error::domain("tensor product needs at least one set"));
    };
    let mut dim = first.dim();
    let mut projectors: Vec<ComplexMatrix> = first.projectors().to_vec();
    let mut labels: Vec<String> = first.labels().to_vec();
    for set in rest {
        dim *= set.dim();
        let mut next_p = Vec::with_capacity(projectors.len() * set.len());
        let mut next_l = Vec::with_capacity(projectors.len() * set.len());
        for (p, l) in projectors.iter().zip(&labels) {
            for (q, m) in set.projectors().iter().zip(set.labels()) {
                next_p.push(p.kron(q));
                next_l.push(format!("{l}⊗{m}"));
            }
        }
        projectors = next_p;
        labels = next_l;
    }
    ProjectorSet::from_projectors(dim, projectors, labels)
}

/// Generalised cube set for a qudit: the d computational-basis projectors
/// plus four coherence probes (|i⟩±|j⟩)/√2 and (|i⟩±i|j⟩)/√2 for each
/// index pair, making M = 2d² − d settings.
pub fn qudit_cube_set(d: usize) -> Result<ProjectorSet> {
    if d < 2 {
        return Err(Error::domain(format!("qudit cube set needs d >= 2, got {d}")));
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut projectors = Vec::with_capacity(2 * d * d - d);
    let mut labels = Vec::with_capacity(2 * d * d - d);
    for i in 0..d {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[i] = Complex64::new(1.0, 0.0);
        projectors.push(ComplexMatrix::outer(&v));
        labels.push(format!("basis:{i}"));
    }
    for i in 0..d {
        for j in i + 1..d {
            let probes: [(Complex64, &str); 4] = [
                (Complex64::new(s, 0.0), "re+"),
                (Complex64::new(-s, 0.0), "re-"),
                (Complex64::new(0.0, s), "im+"),
                (Complex64::new(0.0, -s), "im-"),
            ];
            for (amp, tag) in probes {
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                v[i] = Complex64::new(s, 0.0);
                v[j] = amp;
                projectors.push(ComplexMatrix::outer(&v));
                labels.push(format!("{tag}:{i}.{j}"));
            }
        }
    }
    ProjectorSet::from_projectors(d, projectors, labels)
}

/// Parses a set expression: a solid name, a tensor power such as
/// `cube^2`, or `quditcube:d`.
pub fn parse_set_expr(expr: &str) -> Result<ProjectorSet> {
    let expr = expr.trim();
    if let Some(rest) = expr.strip_prefix("quditcube:") {
        let d: usize = rest
            .parse()
            .map_err(|_| Error::domain(format!("bad qudit dimension in '{expr}'")))?;
        if !(2..=16).contains(&d) {
            return Err(Error::domain(format!("qudit dimension must be 2..=16, got {d}")));
        }
        return qudit_cube_set(d);
    }
    let (name, power) = match expr.split_once('^') {
        Some((name, pow)) => {
            let n: u32 = pow
                .parse()
                .map_err(|_| Error::domain(format!("bad tensor power in '{expr}'")))?;
            (name, n)
        }
        None => (expr, 1),
    };
    let solid = PlatonicSolid::from_name(name)
        .ok_or_else(|| Error::domain(format!("unknown measurement set '{expr}'")))?;
    if power < 1 || power > 4 {
        return Err(Error::domain(format!(
            "tensor power must be 1..=4 to keep d <= 16, got {power}"
        )));
    }
    let single = platonic_set(solid)?;
    if power == 1 {
        return Ok(single);
    }
    let copies = vec![single; power as usize];
    tensor_product_set(&copies)
}

/// The catalogue of named sets understood by [`parse_set_expr`], with
/// sizes (qudit entries listed for d = 3..=8).
pub fn catalogue() -> Vec<String> {
    let mut names: Vec<String> = PlatonicSolid::ALL
        .iter()
        .map(|s| s.name().to_string())
        .collect();
    names.push("cube^2".to_string());
    names.push("tetrahedron^2".to_string());
    for d in 3..=8 {
        names.push(format!("quditcube:{d}"));
    }
    names
}
