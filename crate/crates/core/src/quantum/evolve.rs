use crate::embed::EmbeddedInstance;
use crate::error::{Error, Result};
use crate::graph::{Configuration, RydbergParams};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

use super::hamiltonian::{BasisKind, Hamiltonian, RydbergSystem};
use super::schedule::AnnealingSchedule;

/// Default step: `dt = DEFAULT_STEP_FACTOR / E_max`.
pub const DEFAULT_STEP_FACTOR: f64 = 0.01;
/// Steps with `dt·E_max` at or above this are rejected.
pub const MAX_STEP_FACTOR: f64 = 0.1;
const KRYLOV_MAX: usize = 40;
const KRYLOV_TOL: f64 = 1e-13;

/// Amplitudes over the basis of a [`RydbergSystem`].
#[derive(Clone, Debug)]
pub struct QuantumState {
    pub atoms: usize,
    /// Basis state masks (bit `i` = atom `i` excited).
    pub states: Vec<u64>,
    pub amplitudes: Vec<Complex64>,
    /// Whether the basis is blockade-restricted.
    pub restricted: bool,
}

impl QuantumState {
    /// `|0…0⟩`.
    pub fn ground_of(system: &RydbergSystem) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); system.dim()];
        let k = system.index_of(0).expect("the empty state is always in the basis");
        amplitudes[k] = Complex64::new(1.0, 0.0);
        QuantumState {
            atoms: system.atoms(),
            states: system.states().to_vec(),
            amplitudes,
            restricted: system.is_restricted(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Born probability of one atom configuration (0 outside the basis).
    pub fn probability(&self, config: &Configuration) -> f64 {
        let Some(mask) = config.to_mask().filter(|_| config.len() == self.atoms) else {
            return 0.0;
        };
        match self.states.binary_search(&mask) {
            Ok(k) => self.amplitudes[k].norm_sqr(),
            Err(_) => 0.0,
        }
    }

    /// Total probability of a set of configurations.
    pub fn population<'a>(&self, configs: impl IntoIterator<Item = &'a Configuration>) -> f64 {
        configs.into_iter().map(|c| self.probability(c)).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionReport {
    pub steps: usize,
    pub dt: f64,
    /// Largest `|‖ψ‖ − 1|` seen at any step.
    pub max_norm_drift: f64,
    pub max_krylov_dim: usize,
    pub restricted_basis: bool,
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `ψ ← exp(−i·2π·H·dt) ψ` by a Krylov projection; returns the subspace
/// dimension used.
pub fn krylov_step(h: &Hamiltonian, psi: &mut [Complex64], dt: f64) -> Result<usize> {
    let n0 = cdot(psi, psi).re.sqrt();
    if n0 == 0.0 {
        return Ok(0);
    }
    let tau = TAU * dt;
    let dim = psi.len();
    let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|a| a / n0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let kmax = KRYLOV_MAX.min(dim);
    loop {
        let j = basis.len() - 1;
        h.apply_complex(&basis[j], &mut w);
        alpha.push(cdot(&basis[j], &w).re);
        for _ in 0..2 {
            for v in &basis {
                let c = cdot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = cdot(&w, &w).re.sqrt();
        let m = alpha.len();
        // exp(−iτT) e1 in the current subspace.
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let coeffs: Vec<Complex64> = (0..m)
            .map(|r| {
                (0..m)
                    .map(|q| {
                        let u = &eig.eigenvectors;
                        Complex64::from_polar(1.0, -tau * eig.eigenvalues[q]) * (u[(r, q)] * u[(0, q)])
                    })
                    .sum()
            })
            .collect();
        let err = b * coeffs[m - 1].norm();
        let scale = alpha.iter().fold(1.0_f64, |s, a| s.max(a.abs()));
        if err < KRYLOV_TOL || b < 1e-14 * scale || m == kmax {
            if m == kmax && err >= 1e-9 && b >= 1e-14 * scale {
                return Err(Error::Numerical(format!(
                    "Krylov propagator did not converge in {kmax} vectors (error {err:.3e}); reduce dt"
                )));
            }
            psi.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for (c, v) in coeffs.iter().zip(&basis) {
                let c = c * n0;
                psi.iter_mut().zip(v).for_each(|(x, y)| *x += c * y);
            }
            return Ok(m);
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Largest Gershgorin bound on `‖H(t)‖` over the schedule breakpoints
/// (the bound is convex in the piecewise-linear controls).
pub fn max_energy_scale(system: &RydbergSystem, schedule: &AnnealingSchedule) -> f64 {
    schedule
        .breakpoints()
        .into_iter()
        .map(|t| system.norm_bound(schedule.at(t)))
        .fold(0.0, f64::max)
}

/// Evolves `|0…0⟩` through the schedule with exponential-midpoint steps.
///
/// `dt` defaults to `0.01/E_max` with `E_max` the largest Gershgorin bound
/// on `‖H(t)‖`; a step with `dt·E_max ≥ 0.1` is rejected.
pub fn evolve_system(
    system: &RydbergSystem,
    schedule: &AnnealingSchedule,
    dt: Option<f64>,
) -> Result<(QuantumState, EvolutionReport)> {
    schedule.validate()?;
    let e_max = max_energy_scale(system, schedule).max(1e-12);
    let dt = match dt {
        Some(d) => {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::input(format!("dt = {d} must be positive")));
            }
            if d * e_max >= MAX_STEP_FACTOR {
                return Err(Error::input(format!(
                    "dt = {d} µs is too coarse: dt·E_max = {:.3} ≥ {MAX_STEP_FACTOR} (E_max = {e_max:.3} MHz)",
                    d * e_max
                )));
            }
            d
        }
        None => DEFAULT_STEP_FACTOR / e_max,
    };
    let total = schedule.total_time;
    let steps = (total / dt).ceil().max(1.0) as usize;
    let dt = total / steps as f64;
    let mut state = QuantumState::ground_of(system);
    let mut drift: f64 = 0.0;
    let mut kmax = 0;
    for s in 0..steps {
        let tm = (s as f64 + 0.5) * dt;
        let h = system.at_time(schedule, tm);
        kmax = kmax.max(krylov_step(&h, &mut state.amplitudes, dt)?);
        drift = drift.max((state.norm() - 1.0).abs());
    }
    Ok((
        state,
        EvolutionReport {
            steps,
            dt,
            max_norm_drift: drift,
            max_krylov_dim: kmax,
            restricted_basis: system.is_restricted(),
        },
    ))
}

/// [`evolve_system`] for an embedding, after checking the detuning cap.
pub fn evolve(
    embedding: &EmbeddedInstance,
    params: &RydbergParams,
    schedule: &AnnealingSchedule,
    dt: Option<f64>,
    basis: BasisKind,
) -> Result<(QuantumState, EvolutionReport)> {
    schedule.check_cap(&embedding.weights(), params, embedding.layout().radius())?;
    let system = RydbergSystem::for_embedding(embedding, params, basis)?;
    evolve_system(&system, schedule, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeometricLayout;
    use crate::quantum::schedule::Controls;

    fn single_atom() -> RydbergSystem {
        let layout = GeometricLayout::new(vec![[0.0, 0.0]], 8.0).unwrap();
        RydbergSystem::new(&layout, &[1.0], &RydbergParams::default(), BasisKind::Full).unwrap()
    }

    #[test]
    fn pi_pulse_inverts_one_atom() {
        // Cyclic Ω = 1 MHz: a π pulse lasts 1/(2Ω) = 0.5 µs.
        let sys = single_atom();
        let h = sys.at_controls(Controls {
            omega: 1.0,
            delta: 0.0,
            delta_ac: 0.0,
        });
        let mut psi = QuantumState::ground_of(&sys).amplitudes;
        for _ in 0..100 {
            krylov_step(&h, &mut psi, 0.005).unwrap();
        }
        assert!((psi[1].norm_sqr() - 1.0).abs() < 1e-10, "{psi:?}");
    }

    #[test]
    fn diagonal_schedule_keeps_vacuum() {
        let layout = GeometricLayout::new(vec![[0.0, 0.0], [6.4, 0.0], [12.8, 0.0]], 8.0).unwrap();
        let sys = RydbergSystem::new(&layout, &[0.3, 1.1, 0.7], &RydbergParams::default(), BasisKind::Full).unwrap();
        let s = AnnealingSchedule {
            total_time: 1.0,
            omega: vec![[0.0, 0.0], [1.0, 0.0]],
            delta: vec![[0.0, -2.0], [1.0, -1.0]],
            delta_ac: vec![[0.0, 0.0], [1.0, 3.0]],
        };
        let (st, rep) = evolve_system(&sys, &s, None).unwrap();
        assert!((st.amplitudes[0].norm() - 1.0).abs() < 1e-12);
        assert!(rep.max_norm_drift < 1e-10);
    }

    #[test]
    fn energy_conserved_for_constant_drive() {
        let layout = GeometricLayout::new(vec![[0.0, 0.0], [6.4, 0.0], [12.8, 0.0], [19.2, 0.0]], 8.0).unwrap();
        let sys = RydbergSystem::new(
            &layout,
            &[0.3, 1.1, 1.1, 0.7],
            &RydbergParams::default(),
            BasisKind::Full,
        )
        .unwrap();
        let h = sys.at_controls(Controls {
            omega: 1.0,
            delta: 1.5,
            delta_ac: 2.0,
        });
        // Start away from an eigenstate.
        let mut psi = vec![Complex64::new(0.0, 0.0); sys.dim()];
        psi[0] = Complex64::new(0.6, 0.0);
        psi[5] = Complex64::new(0.0, 0.8);
        let e0 = h.expectation(&psi);
        for _ in 0..400 {
            krylov_step(&h, &mut psi, 0.005).unwrap();
        }
        assert!((h.expectation(&psi) - e0).abs() < 1e-6);
        let n: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coarse_dt_rejected() {
        let sys = single_atom();
        let s = AnnealingSchedule::three_phase(1.0, 1.0, -5.0, 5.0).unwrap();
        assert!(matches!(evolve_system(&sys, &s, Some(0.5)), Err(Error::Input(_))));
    }
}
