//! Weighted quantum-wire embeddings of sparse MWIS and QUBO problems into
//! unit-disk Rydberg atom layouts, plus the classical machinery needed to
//! check them: exact solvers, gadget spectra, small-scale Schrödinger
//! simulation, weight-noise Monte Carlo and bitstring post-processing.
//!
//! Conventions used throughout:
//! * weights and classical energies are dimensionless;
//! * lengths are micrometres;
//! * frequencies are cyclic MHz (the value of Ω/2π), times are µs.

pub mod cli;
pub mod embed;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod manifest;
pub mod postproc;
pub mod quantum;
pub mod rng;
pub mod robustness;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{Configuration, MwisGraph, QuboProblem};
