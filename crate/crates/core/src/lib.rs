//! Simulation and analysis toolkit for minimal four-outcome (tetrahedron
//! POVM) qubit tomography.
//!
//! The library covers the full estimation pipeline for one- and two-qubit
//! polarization states measured with a fixed tetrahedron polarimeter:
//!
//! * [`qstate`] — Stokes-vector / density-matrix representations, a small
//!   complex Hermitian eigensolver, and the trace distance.
//! * [`povm`] — the tetrahedron measurement frame, its instrument matrix,
//!   outcome probabilities, and the two-qubit tensor extension.
//! * [`sim`] — seeded multinomial count sampling and per-copy event streams.
//! * [`estimate`] — linear inversion of count vectors, nearest-physical-state
//!   projection, and likelihood regions on the Poincaré sphere.
//! * [`accuracy`] — exact (partition-enumeration) and Monte-Carlo average
//!   trace-distance curves, power-law fits, and dimension normalization.
//!
//! With the default `parallel` feature the data-parallel inner loops
//! (pattern enumeration, Monte-Carlo runs, likelihood grids) run on rayon;
//! without it they fall back to equivalent sequential loops. Results are
//! bit-identical across both modes and across thread counts: work is split
//! into fixed chunks and partial sums are folded in a fixed order.

pub mod accuracy;
pub mod estimate;
pub mod povm;
pub mod qstate;
pub mod sim;

mod error;
mod exec;

pub use error::{Error, Result};

#[doc(hidden)]
pub mod testkit;
