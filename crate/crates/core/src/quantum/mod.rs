//! Small-scale Schrödinger simulation of the Rydberg Hamiltonian: spectra
//! along annealing schedules, time evolution and measurement sampling.
//!
//! Frequencies are cyclic (MHz, the value of Ω/2π); propagators are
//! `exp(−i·2π·H·t)` with `t` in µs.

pub mod evolve;
pub mod gap;
pub mod hamiltonian;
pub mod lanczos;
pub mod schedule;

pub use evolve::{evolve, evolve_system, krylov_step, EvolutionReport, QuantumState};
pub use gap::{fit_gap_scaling, gap_curve_for_system, spectral_gap_curve, GapCurve, GapScaling};
pub use hamiltonian::{build_hamiltonian, BasisKind, Hamiltonian, RydbergSystem};
pub use lanczos::{lowest_eigenpairs, lowest_eigenpairs_preconditioned, Eigenpairs, LanczosOptions};
pub use schedule::{AnnealingSchedule, Controls};

use crate::graph::Configuration;
use crate::rng::stream_rng;
use rand::Rng;

/// `shots` computational-basis measurements of `state`, deterministic for
/// a given seed.
pub fn sample_configurations(state: &QuantumState, shots: usize, seed: u64) -> Vec<Configuration> {
    let mut cumulative = Vec::with_capacity(state.amplitudes.len());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let mut rng = stream_rng(seed, 0);
    (0..shots)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            Configuration::from_mask(state.states[k], state.atoms)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn state(amps: Vec<Complex64>) -> QuantumState {
        QuantumState {
            atoms: 1,
            states: vec![0, 1],
            amplitudes: amps,
            restricted: false,
        }
    }

    #[test]
    fn basis_state_samples_are_constant() {
        let s = state(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)]);
        let shots = sample_configurations(&s, 100, 3);
        assert!(shots.iter().all(|c| c.to_string() == "1"));
    }

    #[test]
    fn uniform_superposition_is_balanced() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)]);
        let shots = sample_configurations(&s, 100_000, 11);
        let ones = shots.iter().filter(|c| c.get(0)).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01);
        assert_eq!(shots, sample_configurations(&s, 100_000, 11));
    }
}
