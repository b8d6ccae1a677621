//! State representations and the metric that scores reconstructions.
//!
//! A qubit polarization state is carried either as a real Stokes vector
//! (4 components for one qubit, 16 for two) or as the equivalent complex
//! density matrix. The two pictures are linked by the fixed operator basis
//! below; the trace distance between density matrices is the accuracy
//! measure used throughout the crate.
//!
//! # Basis convention
//!
//! Matrices are written in the H/V product basis. The single-qubit operator
//! basis is
//!
//! ```text
//! s0 = I,   s1 = [[1,0],[0,-1]],   s2 = [[0,1],[1,0]],   s3 = [[0,-i],[i,0]]
//! ```
//!
//! so a normalized Stokes vector `(1, 1, 0, 0)` is a pure horizontal state
//! and `rho = (1/2) sum_u S_u s_u`. The triple `(s1, s2, s3)` is
//! right-handed (`s1 s2 = i s3`). Two-qubit components are indexed
//! row-major: `S[4*u + v] = tr(rho (s_u ⊗ s_v))`. All quantities derived
//! from counts and probabilities are invariant under this choice of axes.

use num_complex::Complex64;

use crate::{Error, Result};

/// Hermiticity tolerance when accepting raw matrix entries.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Hermiticity tolerance accepted by the eigensolver.
const EIGEN_HERMITICITY_TOL: f64 = 1e-10;
/// A state counts as physical when every eigenvalue clears this floor.
pub const PHYSICALITY_EIGENVALUE_FLOOR: f64 = -1e-10;
/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Single-qubit operator basis, row-major 2x2 entries.
fn basis_op(mu: usize) -> [Complex64; 4] {
    match mu {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ONE, ZERO, ZERO, -ONE],
        2 => [ZERO, ONE, ONE, ZERO],
        3 => [ZERO, -I, I, ZERO],
        _ => unreachable!("basis index out of range"),
    }
}

/// Real Stokes vector of one qubit (4 components) or two qubits (16).
///
/// Component 0 is the identity component `S0`; a normalized state has
/// `S0 = 1`. Linear reconstruction can produce unphysical vectors, so
/// physicality is always computed on demand, never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesVector {
    components: Vec<f64>,
    qubits: u8,
}

impl StokesVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let qubits = match components.len() {
            4 => 1,
            16 => 2,
            n => return Err(Error::BadStokesLength(n)),
        };
        Ok(Self { components, qubits })
    }

    pub fn one_qubit(components: [f64; 4]) -> Self {
        Self {
            components: components.to_vec(),
            qubits: 1,
        }
    }

    pub fn two_qubit(components: [f64; 16]) -> Self {
        Self {
            components: components.to_vec(),
            qubits: 2,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn qubit_count(&self) -> u8 {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Identity component `S0`; 1 for normalized states.
    pub fn s0(&self) -> f64 {
        self.components[0]
    }

    pub fn is_normalized(&self) -> bool {
        (self.s0() - 1.0).abs() <= 1e-9
    }

    /// Bloch part `(S1, S2, S3)` of a one-qubit vector.
    ///
    /// # Panics
    /// Panics on two-qubit input.
    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.qubits, 1, "bloch part is defined for one qubit only");
        [self.components[1], self.components[2], self.components[3]]
    }

    pub fn bloch_norm(&self) -> f64 {
        let [x, y, z] = self.bloch();
        (x * x + y * y + z * z).sqrt()
    }

    /// True when the corresponding density matrix is positive semidefinite
    /// (all eigenvalues at or above [`PHYSICALITY_EIGENVALUE_FLOOR`]).
    pub fn is_physical(&self) -> bool {
        stokes_to_density(self).is_physical()
    }
}

/// Labels for the test states exercised throughout the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Maximally mixed state `(1, 0, 0, 0)`.
    Unpolarized,
    /// Pure horizontal polarization `(1, 1, 0, 0)`.
    Horizontal,
    /// Pure state aligned with the first tetrahedron vertex.
    Aligned,
    /// Pure state anti-aligned with the first tetrahedron vertex.
    AntiAligned,
    /// Two-qubit Bell state `(|HV> + |VH>)/sqrt(2)`.
    BellPsiPlus,
    Custom,
}

impl StateLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateLabel::Unpolarized => "unpolarized",
            StateLabel::Horizontal => "horizontal",
            StateLabel::Aligned => "aligned",
            StateLabel::AntiAligned => "anti_aligned",
            StateLabel::BellPsiPlus => "bell_psi_plus",
            StateLabel::Custom => "custom",
        }
    }
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled input state.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    label: StateLabel,
    stokes: StokesVector,
}

impl NamedState {
    pub fn unpolarized() -> Self {
        Self {
            label: StateLabel::Unpolarized,
            stokes: StokesVector::one_qubit([1.0, 0.0, 0.0, 0.0]),
        }
    }

    pub fn horizontal() -> Self {
        Self {
            label: StateLabel::Horizontal,
            stokes: StokesVector::one_qubit([1.0, 1.0, 0.0, 0.0]),
        }
    }

    /// `(1, sqrt(1/3), sqrt(2/3), 0)`: aligned with the first measurement
    /// direction, the worst case for estimation accuracy.
    pub fn aligned() -> Self {
        Self {
            label: StateLabel::Aligned,
            stokes: StokesVector::one_qubit([
                1.0,
                (1.0f64 / 3.0).sqrt(),
                (2.0f64 / 3.0).sqrt(),
                0.0,
            ]),
        }
    }

    /// `(1, -sqrt(1/3), -sqrt(2/3), 0)`: anti-aligned with the first
    /// measurement direction, the best case.
    pub fn anti_aligned() -> Self {
        Self {
            label: StateLabel::AntiAligned,
            stokes: StokesVector::one_qubit([
                1.0,
                -(1.0f64 / 3.0).sqrt(),
                -(2.0f64 / 3.0).sqrt(),
                0.0,
            ]),
        }
    }

    /// Bell state `(|HV> + |VH>)/sqrt(2)` as a 16-component Stokes vector.
    pub fn bell_psi_plus() -> Self {
        let mut entries = vec![ZERO; 16];
        let half = Complex64::new(0.5, 0.0);
        // |HV><HV|, |HV><VH|, |VH><HV|, |VH><VH| in the HH,HV,VH,VV basis.
        entries[1 * 4 + 1] = half;
        entries[1 * 4 + 2] = half;
        entries[2 * 4 + 1] = half;
        entries[2 * 4 + 2] = half;
        let rho = DensityMatrix::from_entries(2, entries).expect("bell matrix is hermitian");
        Self {
            label: StateLabel::BellPsiPlus,
            stokes: density_to_stokes(&rho),
        }
    }

    pub fn custom(stokes: StokesVector) -> Self {
        Self {
            label: StateLabel::Custom,
            stokes,
        }
    }

    pub fn label(&self) -> StateLabel {
        self.label
    }

    pub fn stokes(&self) -> &StokesVector {
        &self.stokes
    }

    pub fn qubit_count(&self) -> u8 {
        self.stokes.qubit_count()
    }
}

/// Hermitian complex density matrix of dimension `2^n`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: u8,
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// Accepts raw entries after checking hermiticity to [`HERMITICITY_TOL`].
    pub fn from_entries(qubits: u8, entries: Vec<Complex64>) -> Result<Self> {
        let dim = match qubits {
            1 => 2,
            2 => 4,
            n => return Err(Error::BadQubitCount(n)),
        };
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(entries.len(), dim * dim));
        }
        let dev = hermiticity_deviation(&entries, dim);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            qubits,
            dim,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubit_count(&self) -> u8 {
        self.qubits
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut work = EigenWork::new(self.dim);
        jacobi_values(&self.entries, self.dim, &mut work)
            .expect("density matrix is hermitian by construction")
    }

    pub fn is_physical(&self) -> bool {
        self.eigenvalues()
            .iter()
            .all(|&l| l >= PHYSICALITY_EIGENVALUE_FLOOR)
    }
}

fn hermiticity_deviation(entries: &[Complex64], dim: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
            dev = dev.max(d);
        }
    }
    // The diagonal must be real; the loop above already covers it (i == j).
    dev
}

/// Expands a Stokes vector into its density matrix.
pub fn stokes_to_density(s: &StokesVector) -> DensityMatrix {
    match s.qubit_count() {
        1 => {
            let mut entries = vec![ZERO; 4];
            one_qubit_density_into(s.components(), &mut entries);
            DensityMatrix {
                qubits: 1,
                dim: 2,
                entries,
            }
        }
        _ => {
            let mut entries = vec![ZERO; 16];
            two_qubit_density_into(s.components(), &mut entries);
            DensityMatrix {
                qubits: 2,
                dim: 4,
                entries,
            }
        }
    }
}

/// `rho = (1/2)(S0 I + S1 s1 + S2 s2 + S3 s3)`, written without the basis
/// table so the enumeration hot loop stays allocation-free.
pub(crate) fn one_qubit_density_into(s: &[f64], out: &mut [Complex64]) {
    out[0] = Complex64::new(0.5 * (s[0] + s[1]), 0.0);
    out[1] = Complex64::new(0.5 * s[2], -0.5 * s[3]);
    out[2] = Complex64::new(0.5 * s[2], 0.5 * s[3]);
    out[3] = Complex64::new(0.5 * (s[0] - s[1]), 0.0);
}

pub(crate) fn two_qubit_density_into(s: &[f64], out: &mut [Complex64]) {
    out.fill(ZERO);
    for mu in 0..4 {
        let a = basis_op(mu);
        for nu in 0..4 {
            let coeff = 0.25 * s[4 * mu + nu];
            if coeff == 0.0 {
                continue;
            }
            let b = basis_op(nu);
            // (a ⊗ b)[(2i+k)(2j+l)] = a[i][j] b[k][l]
            for i in 0..2 {
                for j in 0..2 {
                    let aij = a[i * 2 + j];
                    if aij == ZERO {
                        continue;
                    }
                    for k in 0..2 {
                        for l in 0..2 {
                            out[(2 * i + k) * 4 + (2 * j + l)] += coeff * aij * b[k * 2 + l];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn density_from_stokes_into(s: &[f64], out: &mut [Complex64]) {
    if s.len() == 4 {
        one_qubit_density_into(s, out);
    } else {
        two_qubit_density_into(s, out);
    }
}

/// Contracts a density matrix back onto the operator basis,
/// `S_u = tr(rho s_u)`. Inverse of [`stokes_to_density`].
pub fn density_to_stokes(rho: &DensityMatrix) -> StokesVector {
    match rho.qubit_count() {
        1 => {
            let mut c = [0.0; 4];
            for (mu, slot) in c.iter_mut().enumerate() {
                let op = basis_op(mu);
                let mut tr = ZERO;
                for i in 0..2 {
                    for j in 0..2 {
                        tr += rho.entry(i, j) * op[j * 2 + i];
                    }
                }
                *slot = tr.re;
            }
            StokesVector::one_qubit(c)
        }
        _ => {
            let mut c = [0.0; 16];
            for mu in 0..4 {
                let a = basis_op(mu);
                for nu in 0..4 {
                    let b = basis_op(nu);
                    let mut tr = ZERO;
                    for i in 0..2 {
                        for k in 0..2 {
                            for j in 0..2 {
                                for l in 0..2 {
                                    // tr(rho (a ⊗ b)) walks rho[(2i+k)(2j+l)] (a⊗b)[(2j+l)(2i+k)]
                                    tr += rho.entry(2 * i + k, 2 * j + l)
                                        * a[j * 2 + i]
                                        * b[l * 2 + k];
                                }
                            }
                        }
                    }
                    c[4 * mu + nu] = tr.re;
                }
            }
            StokesVector::two_qubit(c)
        }
    }
}

/// Eigendecomposition of a Hermitian matrix: `m = V diag(values) V†`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues sorted in descending order; ties keep diagonal order.
    pub values: Vec<f64>,
    /// Row-major `dim x dim` matrix whose column `k` is the eigenvector of
    /// `values[k]`.
    pub vectors: Vec<Complex64>,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices of small dimension.
///
/// Sweeps complex Givens rotations until the off-diagonal Frobenius norm
/// drops below `1e-14` (at most 100 sweeps). Rejects inputs that deviate
/// from hermiticity by more than `1e-10`.
pub fn hermitian_eigen(entries: &[Complex64], dim: usize) -> Result<HermitianEigen> {
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch(entries.len(), dim * dim));
    }
    let dev = hermiticity_deviation(entries, dim);
    if dev > EIGEN_HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let mut mat = entries.to_vec();
    let mut vecs = vec![ZERO; dim * dim];
    for i in 0..dim {
        vecs[i * dim + i] = ONE;
    }
    jacobi_sweeps(&mut mat, dim, Some(&mut vecs))?;

    let mut order: Vec<usize> = (0..dim).collect();
    let raw: Vec<f64> = (0..dim).map(|i| mat[i * dim + i].re).collect();
    order.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).expect("finite eigenvalues"));

    let values: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = vec![ZERO; dim * dim];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..dim {
            vectors[row * dim + new_col] = vecs[row * dim + old_col];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Reusable scratch space for eigenvalue-only solves in hot loops.
pub(crate) struct EigenWork {
    mat: Vec<Complex64>,
    diff: Vec<Complex64>,
}

impl EigenWork {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            mat: vec![ZERO; dim * dim],
            diff: vec![ZERO; dim * dim],
        }
    }
}

/// Eigenvalues (descending) without accumulating eigenvectors.
fn jacobi_values(entries: &[Complex64], dim: usize, work: &mut EigenWork) -> Result<Vec<f64>> {
    work.mat.copy_from_slice(entries);
    jacobi_sweeps(&mut work.mat, dim, None)?;
    let mut values: Vec<f64> = (0..dim).map(|i| work.mat[i * dim + i].re).collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(values)
}

fn off_diagonal_norm(mat: &[Complex64], dim: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                sum += mat[i * dim + j].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn jacobi_sweeps(mat: &mut [Complex64], dim: usize, mut vecs: Option<&mut [Complex64]>) -> Result<()> {
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(mat, dim) <= JACOBI_OFF_TOL {
            return Ok(());
        }
        for p in 0..dim - 1 {
            for q in p + 1..dim {
                let g = mat[p * dim + q];
                let r = g.norm();
                if r == 0.0 {
                    continue;
                }
                let a = mat[p * dim + p].re;
                let b = mat[q * dim + q].re;
                // Phase that makes the pivot real, then a real rotation
                // with the smaller-angle root of t^2 + 2wt - 1 = 0.
                let phase = g / r;
                let w = (a - b) / (2.0 * r);
                let t = if w >= 0.0 {
                    1.0 / (w + (w * w + 1.0).sqrt())
                } else {
                    -1.0 / (-w + (w * w + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sx = s * phase;

                // Column update (right-multiply by U).
                for i in 0..dim {
                    let mip = mat[i * dim + p];
                    let miq = mat[i * dim + q];
                    mat[i * dim + p] = c * mip + sx.conj() * miq;
                    mat[i * dim + q] = -sx * mip + c * miq;
                }
                // Row update (left-multiply by U†).
                for j in 0..dim {
                    let mpj = mat[p * dim + j];
                    let mqj = mat[q * dim + j];
                    mat[p * dim + j] = c * mpj + sx * mqj;
                    mat[q * dim + j] = -sx.conj() * mpj + c * mqj;
                }
                // The rotation zeroes this pair; pin it to drop rounding residue.
                mat[p * dim + q] = ZERO;
                mat[q * dim + p] = ZERO;
                mat[p * dim + p] = Complex64::new(mat[p * dim + p].re, 0.0);
                mat[q * dim + q] = Complex64::new(mat[q * dim + q].re, 0.0);

                if let Some(v) = vecs.as_deref_mut() {
                    for i in 0..dim {
                        let vip = v[i * dim + p];
                        let viq = v[i * dim + q];
                        v[i * dim + p] = c * vip + sx.conj() * viq;
                        v[i * dim + q] = -sx * vip + c * viq;
                    }
                }
            }
        }
    }
    let off = off_diagonal_norm(mat, dim);
    if off <= JACOBI_OFF_TOL {
        Ok(())
    } else {
        Err(Error::EigenNotConverged {
            sweeps: JACOBI_MAX_SWEEPS,
            off,
        })
    }
}

/// Trace distance `D = (1/2) tr |a - b|` via the eigenvalues of the
/// difference. Inputs must share a dimension and be Hermitian; they do not
/// have to be physical.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let mut work = EigenWork::new(a.dim());
    Ok(trace_distance_with(&mut work, a.entries(), b.entries(), a.dim()))
}

/// Allocation-free trace distance for hot loops; `work` must match `dim`.
pub(crate) fn trace_distance_with(
    work: &mut EigenWork,
    a: &[Complex64],
    b: &[Complex64],
    dim: usize,
) -> f64 {
    for i in 0..dim * dim {
        work.diff[i] = a[i] - b[i];
    }
    work.mat.copy_from_slice(&work.diff);
    jacobi_sweeps(&mut work.mat, dim, None).expect("difference of hermitian matrices is hermitian");
    let mut d = 0.0;
    for i in 0..dim {
        d += work.mat[i * dim + i].re.abs();
    }
    0.5 * d
}
