//! The tetrahedron measurement and its instrument matrix.
//!
//! Four detector directions forming a regular tetrahedron on the Poincaré
//! sphere are the minimal informationally complete polarization measurement.
//! The instrument matrix `B` maps a Stokes vector to the four (or sixteen,
//! for coincidences between two polarimeters) outcome probabilities; its
//! inverse performs linear state reconstruction.

use crate::qstate::StokesVector;
use crate::{Error, Result};

const GEOMETRY_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-10;
/// Probabilities this far below zero mark the input state as unphysical.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Four unit vectors on the Poincaré sphere with pairwise overlap -1/3.
#[derive(Clone, Debug, PartialEq)]
pub struct Tetrahedron {
    vertices: [[f64; 3]; 4],
}

impl Tetrahedron {
    /// Default measurement frame: the first vertex points along
    /// `(sqrt(1/3), sqrt(2/3), 0)` and the remaining three are obtained by
    /// rotating away from it by `arccos(-1/3)` at azimuths 0, 120 and 240
    /// degrees around the frame `u = (-sqrt(2/3), sqrt(1/3), 0)`,
    /// `v = (0, 0, 1)`.
    pub fn standard() -> Self {
        let b1 = [(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt(), 0.0];
        let u = [-(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt(), 0.0];
        let v = [0.0, 0.0, 1.0];
        let cos_t = -1.0 / 3.0;
        let sin_t = (8.0f64).sqrt() / 3.0;
        let mut vertices = [[0.0; 3]; 4];
        vertices[0] = b1;
        for (j, vertex) in vertices.iter_mut().enumerate().skip(1) {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 - 1.0) / 3.0;
            let (sin_p, cos_p) = phi.sin_cos();
            for axis in 0..3 {
                vertex[axis] = cos_t * b1[axis] + sin_t * (cos_p * u[axis] + sin_p * v[axis]);
            }
        }
        Self { vertices }
    }

    /// Alternate frame on the cube corners `(±1, ±1, ±1)/sqrt(3)` (even sign
    /// products), handy for cross-checking orientation invariance.
    pub fn cube_corners() -> Self {
        let s = 1.0 / (3.0f64).sqrt();
        Self {
            vertices: [
                [s, s, s],
                [s, -s, -s],
                [-s, s, -s],
                [-s, -s, s],
            ],
        }
    }

    pub fn vertices(&self) -> &[[f64; 3]; 4] {
        &self.vertices
    }

    /// Checks unit norms, the -1/3 Gram matrix, the zero vertex sum, and
    /// frame completeness `sum_j b_j b_j^T = (4/3) I`, all to 1e-12.
    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        for j in 0..4 {
            let norm2: f64 = v[j].iter().map(|x| x * x).sum();
            if (norm2.sqrt() - 1.0).abs() > GEOMETRY_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "vertex {j} has norm {}",
                    norm2.sqrt()
                )));
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let dot: f64 = (0..3).map(|a| v[i][a] * v[j][a]).sum();
                if (dot + 1.0 / 3.0).abs() > GEOMETRY_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "vertices {i},{j} overlap {dot}"
                    )));
                }
            }
        }
        for axis in 0..3 {
            let sum: f64 = (0..4).map(|j| v[j][axis]).sum();
            if sum.abs() > GEOMETRY_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "vertex sum component {axis} is {sum}"
                )));
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 4.0 / 3.0 } else { 0.0 };
                let got: f64 = (0..4).map(|j| v[j][a] * v[j][b]).sum();
                if (got - want).abs() > GEOMETRY_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "frame completeness ({a},{b}) is {got}, want {want}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Real `m x m` matrix (`m = 4^n`) mapping Stokes vectors to outcome
/// probabilities, with its verified inverse cached.
#[derive(Clone, Debug)]
pub struct InstrumentMatrix {
    qubits: u8,
    dim: usize,
    entries: Vec<f64>,
    inverse: Vec<f64>,
}

impl InstrumentMatrix {
    /// Builds the one-qubit matrix with rows `(1/4)(1, b_j)`, or its
    /// Kronecker square for two qubits, and caches the inverse.
    pub fn new(t: &Tetrahedron, qubits: u8) -> Result<Self> {
        t.validate()?;
        let mut b1 = vec![0.0; 16];
        for (j, vertex) in t.vertices().iter().enumerate() {
            b1[j * 4] = 0.25;
            for axis in 0..3 {
                b1[j * 4 + 1 + axis] = 0.25 * vertex[axis];
            }
        }
        let (dim, entries) = match qubits {
            1 => (4, b1),
            2 => (16, kron(&b1, 4, &b1, 4)),
            n => return Err(Error::BadQubitCount(n)),
        };
        let inverse = invert(&entries, dim)?;
        let residual = product_identity_residual(&entries, &inverse, dim);
        if residual > INVERSE_TOL {
            return Err(Error::SingularMatrix(residual));
        }
        Ok(Self {
            qubits,
            dim,
            entries,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubit_count(&self) -> u8 {
        self.qubits
    }

    /// Row-major forward matrix.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Row-major cached inverse.
    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j * self.dim..(j + 1) * self.dim]
    }

    /// `B · s` for a raw component slice.
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        mat_vec(&self.entries, s, self.dim)
    }

    /// `B⁻¹ · f` for a raw frequency slice.
    pub fn apply_inverse(&self, f: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, f, self.dim)
    }
}

fn mat_vec(m: &[f64], x: &[f64], dim: usize) -> Vec<f64> {
    assert_eq!(x.len(), dim);
    let mut out = vec![0.0; dim];
    for (i, slot) in out.iter_mut().enumerate() {
        let row = &m[i * dim..(i + 1) * dim];
        *slot = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    out
}

fn kron(a: &[f64], adim: usize, b: &[f64], bdim: usize) -> Vec<f64> {
    let dim = adim * bdim;
    let mut out = vec![0.0; dim * dim];
    for i in 0..adim {
        for j in 0..adim {
            let aij = a[i * adim + j];
            for k in 0..bdim {
                for l in 0..bdim {
                    out[(i * bdim + k) * dim + (j * bdim + l)] = aij * b[k * bdim + l];
                }
            }
        }
    }
    out
}

/// Gauss-Jordan inversion with partial pivoting.
fn invert(m: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = 1.0;
    }
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| {
                a[r1 * dim + col]
                    .abs()
                    .partial_cmp(&a[r2 * dim + col].abs())
                    .unwrap()
            })
            .unwrap();
        let pivot = a[pivot_row * dim + col];
        if pivot.abs() < 1e-14 {
            return Err(Error::SingularMatrix(pivot.abs()));
        }
        if pivot_row != col {
            for j in 0..dim {
                a.swap(col * dim + j, pivot_row * dim + j);
                inv.swap(col * dim + j, pivot_row * dim + j);
            }
        }
        let inv_pivot = 1.0 / a[col * dim + col];
        for j in 0..dim {
            a[col * dim + j] *= inv_pivot;
            inv[col * dim + j] *= inv_pivot;
        }
        for row in 0..dim {
            if row == col {
                continue;
            }
            let factor = a[row * dim + col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..dim {
                a[row * dim + j] -= factor * a[col * dim + j];
                inv[row * dim + j] -= factor * inv[col * dim + j];
            }
        }
    }
    Ok(inv)
}

fn product_identity_residual(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += a[i * dim + k] * b[k * dim + j];
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - want).abs());
        }
    }
    worst
}

/// Values within tolerance of zero become exactly zero, so dark detectors
/// (an anti-aligned pure state) carry probability 0 rather than rounding
/// residue of either sign.
pub(crate) fn snap_probability(value: f64) -> f64 {
    if value.abs() <= PROBABILITY_TOL {
        0.0
    } else {
        value
    }
}

/// Outcome probabilities `p_j = (B · s)_j` of a normalized physical state.
///
/// Rejects states that are not normalized (`S0 = 1`) or that produce a
/// probability below `-1e-12`; rounding residue within tolerance of zero is
/// snapped to exactly zero.
pub fn outcome_probabilities(b: &InstrumentMatrix, s: &StokesVector) -> Result<Vec<f64>> {
    if s.len() != b.dim() {
        return Err(Error::DimensionMismatch(s.len(), b.dim()));
    }
    if (s.s0() - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(s.s0()));
    }
    let mut p = b.apply(s.components());
    for (j, value) in p.iter_mut().enumerate() {
        if *value < -PROBABILITY_TOL {
            return Err(Error::UnphysicalState {
                index: j,
                value: *value,
            });
        }
        *value = snap_probability(*value);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::NamedState;
    use crate::testkit::{assert_close, random_physical_one_qubit, test_rng};

    #[test]
    fn standard_first_vertex_is_exact() {
        let t = Tetrahedron::standard();
        assert_eq!(
            t.vertices()[0],
            [(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt(), 0.0]
        );
    }

    #[test]
    fn both_frames_satisfy_geometry_invariants() {
        Tetrahedron::standard().validate().unwrap();
        Tetrahedron::cube_corners().validate().unwrap();
    }

    #[test]
    fn pairwise_overlaps_are_minus_third() {
        let t = Tetrahedron::standard();
        for i in 0..4 {
            for j in i + 1..4 {
                let dot: f64 = (0..3).map(|a| t.vertices()[i][a] * t.vertices()[j][a]).sum();
                assert_close(dot, -1.0 / 3.0, 1e-12);
            }
        }
    }

    #[test]
    fn vertex_sum_vanishes() {
        let t = Tetrahedron::standard();
        for axis in 0..3 {
            let sum: f64 = (0..4).map(|j| t.vertices()[j][axis]).sum();
            assert_close(sum, 0.0, 1e-12);
        }
    }

    #[test]
    fn unpolarized_input_yields_uniform_distribution() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let p = outcome_probabilities(&b, NamedState::unpolarized().stokes()).unwrap();
        for value in p {
            assert_close(value, 0.25, 1e-12);
        }
    }

    #[test]
    fn aligned_state_probabilities() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let p = outcome_probabilities(&b, NamedState::aligned().stokes()).unwrap();
        assert_close(p[0], 0.5, 1e-12);
        for &value in &p[1..] {
            assert_close(value, 1.0 / 6.0, 1e-12);
        }
    }

    #[test]
    fn anti_aligned_state_has_one_dark_detector() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let p = outcome_probabilities(&b, NamedState::anti_aligned().stokes()).unwrap();
        assert_close(p[0], 0.0, 1e-12);
        for &value in &p[1..] {
            assert_close(value, 1.0 / 3.0, 1e-12);
        }
    }

    #[test]
    fn inverse_recovers_aligned_state_from_its_distribution() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let s = b.apply_inverse(&[0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        let want = NamedState::aligned();
        for (got, want) in s.iter().zip(want.stokes().components()) {
            assert_close(*got, *want, 1e-12);
        }
    }

    #[test]
    fn inverse_is_verified_against_identity() {
        for qubits in [1, 2] {
            let b = InstrumentMatrix::new(&Tetrahedron::standard(), qubits).unwrap();
            let residual = product_identity_residual(b.entries(), b.inverse(), b.dim());
            assert!(residual < 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn two_qubit_matrix_matches_manual_kronecker() {
        let t = Tetrahedron::standard();
        let b1 = InstrumentMatrix::new(&t, 1).unwrap();
        let b2 = InstrumentMatrix::new(&t, 2).unwrap();
        // Independent double loop, no shared kron helper.
        for j1 in 0..4 {
            for j2 in 0..4 {
                for c1 in 0..4 {
                    for c2 in 0..4 {
                        let want = b1.entries()[j1 * 4 + c1] * b1.entries()[j2 * 4 + c2];
                        let got = b2.entries()[(j1 * 4 + j2) * 16 + (c1 * 4 + c2)];
                        assert_close(got, want, 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn reconstruction_identity_on_random_states() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let mut rng = test_rng(3);
        for _ in 0..100 {
            let s = random_physical_one_qubit(&mut rng);
            let round = b.apply_inverse(&b.apply(s.components()));
            for (got, want) in round.iter().zip(s.components()) {
                assert_close(*got, *want, 1e-10);
            }
        }
    }

    #[test]
    fn physical_states_give_valid_distributions() {
        let b1 = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let mut rng = test_rng(17);
        for _ in 0..200 {
            let s = random_physical_one_qubit(&mut rng);
            let p = outcome_probabilities(&b1, &s).unwrap();
            let sum: f64 = p.iter().sum();
            assert_close(sum, 1.0, 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn bell_state_distribution_is_valid() {
        let b2 = InstrumentMatrix::new(&Tetrahedron::standard(), 2).unwrap();
        let p = outcome_probabilities(&b2, NamedState::bell_psi_plus().stokes()).unwrap();
        let sum: f64 = p.iter().sum();
        assert_close(sum, 1.0, 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn unphysical_state_is_rejected() {
        let b = InstrumentMatrix::new(&Tetrahedron::standard(), 1).unwrap();
        let s = crate::qstate::StokesVector::one_qubit([1.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            outcome_probabilities(&b, &s),
            Err(Error::UnphysicalState { .. })
        ));
    }
}
