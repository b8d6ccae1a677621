//! Shared helpers for unit, integration, and property tests.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::qstate::{DensityMatrix, StokesVector};

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[track_caller]
pub fn assert_close(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "expected {want} +/- {tol}, got {got} (delta {})",
        got - want
    );
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[i * dim + j] = z;
            m[j * dim + i] = z.conj();
        }
    }
    m
}

/// Uniform random normalized one-qubit state inside the Bloch ball.
pub fn random_physical_one_qubit(rng: &mut ChaCha8Rng) -> StokesVector {
    loop {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(-1.0..1.0);
        let z = rng.random_range(-1.0..1.0);
        if x * x + y * y + z * z <= 1.0 {
            return StokesVector::one_qubit([1.0, x, y, z]);
        }
    }
}

/// Random normalized two-qubit density matrix (Ginibre construction).
pub fn random_physical_two_qubit(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut g = vec![Complex64::new(0.0, 0.0); 16];
    for entry in g.iter_mut() {
        *entry = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    // rho = G G† / tr(G G†)
    let mut rho = vec![Complex64::new(0.0, 0.0); 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                acc += g[i * 4 + k] * g[j * 4 + k].conj();
            }
            rho[i * 4 + j] = acc;
        }
    }
    let trace: f64 = (0..4).map(|i| rho[i * 4 + i].re).sum();
    for entry in rho.iter_mut() {
        *entry /= trace;
    }
    // Symmetrize away the last bits of rounding so the constructor accepts it.
    for i in 0..4 {
        for j in i + 1..4 {
            let avg = 0.5 * (rho[i * 4 + j] + rho[j * 4 + i].conj());
            rho[i * 4 + j] = avg;
            rho[j * 4 + i] = avg.conj();
        }
        rho[i * 4 + i] = Complex64::new(rho[i * 4 + i].re, 0.0);
    }
    DensityMatrix::from_entries(2, rho).expect("ginibre construction is hermitian")
}
