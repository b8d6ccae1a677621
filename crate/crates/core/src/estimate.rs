//! From count vectors to state estimates.
//!
//! Linear inversion is deliberately unconstrained: it is exactly unbiased
//! but can leave the physical state space. [`project_to_physical`] supplies
//! the nearest-physical-state constraint when one is wanted, and
//! [`likelihood_region`] maps which pure states remain compatible with an
//! observed count record.

use crate::exec;
use crate::povm::{outcome_probabilities, InstrumentMatrix};
use crate::qstate::{
    density_to_stokes, hermitian_eigen, stokes_to_density, StokesVector,
};
use crate::sim::CountVector;
use crate::{Error, Result};

/// Unconstrained linear reconstruction `S = B⁻¹ (counts / total)`.
///
/// The output is normalized (`S0 = 1`) but may be unphysical.
pub fn linear_reconstruct(counts: &CountVector, b: &InstrumentMatrix) -> Result<StokesVector> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    if counts.outcome_count() != b.dim() {
        return Err(Error::DimensionMismatch(counts.outcome_count(), b.dim()));
    }
    let freq: Vec<f64> = counts
        .counts()
        .iter()
        .map(|&c| c as f64 / total as f64)
        .collect();
    let s = b.apply_inverse(&freq);
    debug_assert!((s[0] - 1.0).abs() < 1e-10, "S0 drifted to {}", s[0]);
    StokesVector::new(s)
}

/// Nearest physical state under the estimator's own geometry.
///
/// One qubit: the Bloch part is radially clipped to the unit sphere (which
/// is also the trace-distance-nearest physical state). Two qubits: negative
/// eigenvalues of the density matrix are clipped to zero and the spectrum is
/// renormalized to unit trace in the unchanged eigenbasis.
pub fn project_to_physical(s: &StokesVector) -> StokesVector {
    debug_assert!(s.is_normalized(), "projection expects S0 = 1");
    match s.qubit_count() {
        1 => {
            let norm = s.bloch_norm();
            if norm <= 1.0 {
                return s.clone();
            }
            let [x, y, z] = s.bloch();
            StokesVector::one_qubit([s.s0(), x / norm, y / norm, z / norm])
        }
        _ => {
            let rho = stokes_to_density(s);
            let eig = hermitian_eigen(rho.entries(), rho.dim()).expect("rho is hermitian");
            let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let dim = rho.dim();
            let mut rebuilt = vec![num_complex::Complex64::new(0.0, 0.0); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = num_complex::Complex64::new(0.0, 0.0);
                    for k in 0..dim {
                        acc += eig.vectors[i * dim + k]
                            * num_complex::Complex64::new(clipped[k] / total, 0.0)
                            * eig.vectors[j * dim + k].conj();
                    }
                    rebuilt[i * dim + j] = acc;
                }
            }
            let rho = crate::qstate::DensityMatrix::from_entries(s.qubit_count(), rebuilt)
                .expect("projection preserves hermiticity");
            density_to_stokes(&rho)
        }
    }
}

/// Multinomial log-likelihood `sum_j n_j ln p_j(s)` with `0 ln 0 = 0`.
///
/// Returns negative infinity when an observed outcome has zero probability
/// under `s`; rejects unphysical `s`.
pub fn log_likelihood(
    counts: &CountVector,
    s: &StokesVector,
    b: &InstrumentMatrix,
) -> Result<f64> {
    if counts.outcome_count() != b.dim() {
        return Err(Error::DimensionMismatch(counts.outcome_count(), b.dim()));
    }
    let p = outcome_probabilities(b, s)?;
    Ok(log_likelihood_from_probs(counts.counts(), &p))
}

fn log_likelihood_from_probs(counts: &[u64], p: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&n, &pj) in counts.iter().zip(p) {
        if n == 0 {
            continue;
        }
        if pj == 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += n as f64 * pj.ln();
    }
    ll
}

/// One evaluated direction on the Poincaré sphere grid.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    /// Polar angle from the +z axis, radians.
    pub polar: f64,
    /// Azimuth from the +x axis, radians in `[0, 2π)`.
    pub azimuth: f64,
    /// Unit Bloch vector of the pure state.
    pub direction: [f64; 3],
    pub log_likelihood: f64,
}

impl GridPoint {
    pub fn longitude_deg(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    pub fn latitude_deg(&self) -> f64 {
        90.0 - self.polar.to_degrees()
    }
}

/// Pure states compatible with an observed count record.
///
/// The grid covers the sphere with `resolution^2` points: uniformly spaced
/// azimuths and midpoint-spaced polar angles (which avoids duplicating the
/// poles). A point is a member when its log-likelihood is within
/// `threshold_delta` of the grid maximum.
#[derive(Clone, Debug)]
pub struct LikelihoodRegion {
    resolution: usize,
    grid: Vec<GridPoint>,
    members: Vec<bool>,
    max_index: usize,
    threshold_delta: f64,
}

impl LikelihoodRegion {
    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn threshold_delta(&self) -> f64 {
        self.threshold_delta
    }

    /// Grid point attaining the maximal log-likelihood (first in scan order
    /// on ties).
    pub fn max_point(&self) -> [f64; 3] {
        self.grid[self.max_index].direction
    }

    pub fn max_log_likelihood(&self) -> f64 {
        self.grid[self.max_index].log_likelihood
    }

    /// CSV rows `longitude,latitude,log_likelihood,member` in degrees,
    /// scan order (latitude bands from the north pole, azimuth ascending).
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "longitude,latitude,log_likelihood,member")?;
        for (point, member) in self.grid.iter().zip(&self.members) {
            writeln!(
                out,
                "{},{},{},{}",
                point.longitude_deg(),
                point.latitude_deg(),
                point.log_likelihood,
                member
            )?;
        }
        Ok(())
    }
}

/// Evaluates the likelihood of every pure state on a deterministic
/// latitude-longitude grid. One-qubit counts only.
pub fn likelihood_region(
    counts: &CountVector,
    b: &InstrumentMatrix,
    grid_resolution: usize,
    threshold_delta: f64,
) -> Result<LikelihoodRegion> {
    if b.dim() != 4 || counts.outcome_count() != 4 {
        return Err(Error::DimensionMismatch(counts.outcome_count(), 4));
    }
    if grid_resolution < 16 {
        return Err(Error::BadGridResolution(grid_resolution));
    }
    if !(threshold_delta > 0.0) {
        return Err(Error::BadThreshold(threshold_delta));
    }

    let r = grid_resolution;
    let rows = exec::map_collect(r, |i| {
        let polar = std::f64::consts::PI * (i as f64 + 0.5) / r as f64;
        let (sin_t, cos_t) = polar.sin_cos();
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            let azimuth = 2.0 * std::f64::consts::PI * j as f64 / r as f64;
            let (sin_p, cos_p) = azimuth.sin_cos();
            let direction = [sin_t * cos_p, sin_t * sin_p, cos_t];
            let s = [1.0, direction[0], direction[1], direction[2]];
            let mut p = b.apply(&s);
            for value in p.iter_mut() {
                *value = crate::povm::snap_probability(*value).max(0.0);
            }
            let log_likelihood = log_likelihood_from_probs(counts.counts(), &p);
            row.push(GridPoint {
                polar,
                azimuth,
                direction,
                log_likelihood,
            });
        }
        row
    });
    let grid: Vec<GridPoint> = rows.into_iter().flatten().collect();

    let mut max_index = 0;
    for (i, point) in grid.iter().enumerate() {
        if point.log_likelihood > grid[max_index].log_likelihood {
            max_index = i;
        }
    }
    let max_ll = grid[max_index].log_likelihood;
    let members: Vec<bool> = grid
        .iter()
        .map(|pt| pt.log_likelihood >= max_ll - threshold_delta)
        .collect();

    Ok(LikelihoodRegion {
        resolution: r,
        grid,
        members,
        max_index,
        threshold_delta,
    })
}
