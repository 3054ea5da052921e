use crate::embed::EmbeddedInstance;
use crate::error::{Error, Result};
use crate::graph::{Configuration, GeometricLayout, RydbergParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{AnnealingSchedule, Controls};

/// Largest atom count simulated in the full `2^N` space.
pub const FULL_SPACE_CAP: usize = 20;
/// Largest atom count simulated in the blockade-restricted subspace.
pub const BLOCKADE_SPACE_CAP: usize = 26;

/// Which computational basis states are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Full space up to the full-space cap, blockade subspace above it.
    #[default]
    Auto,
    Full,
    /// Only states with no excited pair closer than `R`; an approximation
    /// that ignores the (large) energy of blockade-violating states.
    Blockade,
}

/// Basis, interaction diagonal and flip structure of the Rydberg
/// Hamiltonian `H = (Ω/2)Σσˣ − ΣΔ_i n_i + Σ V_ij n_i n_j` for one atom
/// arrangement; drives are supplied per evaluation.
#[derive(Clone, Debug)]
pub struct RydbergSystem {
    n: usize,
    weights: Vec<f64>,
    states: Vec<u64>,
    restricted: bool,
    interaction: Vec<f64>,
    excitations: Vec<f64>,
    weighted: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// The Hamiltonian at fixed controls, in MHz.
#[derive(Clone, Debug)]
pub struct Hamiltonian<'a> {
    system: &'a RydbergSystem,
    diag: Vec<f64>,
    half_omega: f64,
}

fn independent_sets(n: usize, adj: &[u64]) -> Vec<u64> {
    fn go(i: usize, n: usize, mask: u64, blocked: u64, adj: &[u64], out: &mut Vec<u64>) {
        if i == n {
            out.push(mask);
            return;
        }
        go(i + 1, n, mask, blocked, adj, out);
        if blocked >> i & 1 == 0 {
            go(i + 1, n, mask | 1 << i, blocked | adj[i], adj, out);
        }
    }
    let mut out = Vec::new();
    go(0, n, 0, 0, adj, &mut out);
    out.sort_unstable();
    out
}

impl RydbergSystem {
    /// `weights` are the dimensionless atom weights entering `w_i·δ_ac`.
    pub fn new(layout: &GeometricLayout, weights: &[f64], params: &RydbergParams, basis: BasisKind) -> Result<Self> {
        params.validate()?;
        let n = layout.len();
        if weights.len() != n {
            return Err(Error::input(format!("{} weights for {n} atoms", weights.len())));
        }
        let restricted = match basis {
            BasisKind::Full => false,
            BasisKind::Blockade => true,
            BasisKind::Auto => n > FULL_SPACE_CAP,
        };
        let cap = if restricted { BLOCKADE_SPACE_CAP } else { FULL_SPACE_CAP };
        if n > cap {
            return Err(Error::SizeCap {
                what: format!(
                    "Hamiltonian ({} basis)",
                    if restricted { "blockade-restricted" } else { "full" }
                ),
                actual: n,
                cap,
            });
        }
        let mut v = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let x = params.interaction(layout.distance(i, j));
                v[i][j] = x;
                v[j][i] = x;
            }
        }
        let states: Vec<u64> = if restricted {
            let mut adj = vec![0u64; n];
            for (i, j) in layout.udg_edges() {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
            independent_sets(n, &adj)
        } else {
            (0..1u64 << n).collect()
        };
        let dim = states.len();
        let diag: Vec<(f64, f64, f64)> = states
            .par_iter()
            .map(|&s| {
                let mut inter = 0.0;
                let mut wsum = 0.0;
                for i in 0..n {
                    if s >> i & 1 == 1 {
                        wsum += weights[i];
                        for j in i + 1..n {
                            if s >> j & 1 == 1 {
                                inter += v[i][j];
                            }
                        }
                    }
                }
                (inter, s.count_ones() as f64, wsum)
            })
            .collect();
        let lookup = |s: u64| -> Option<u32> {
            if restricted {
                states.binary_search(&s).ok().map(|k| k as u32)
            } else {
                Some(s as u32)
            }
        };
        let rows: Vec<Vec<u32>> = states
            .par_iter()
            .map(|&s| (0..n).filter_map(|i| lookup(s ^ (1 << i))).collect())
            .collect();
        let mut offsets = Vec::with_capacity(dim + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in rows {
            targets.extend(r);
            offsets.push(targets.len());
        }
        Ok(RydbergSystem {
            n,
            weights: weights.to_vec(),
            states,
            restricted,
            interaction: diag.iter().map(|d| d.0).collect(),
            excitations: diag.iter().map(|d| d.1).collect(),
            weighted: diag.iter().map(|d| d.2).collect(),
            offsets,
            targets,
        })
    }

    /// System for an embedding, using its atom weights.
    pub fn for_embedding(embedding: &EmbeddedInstance, params: &RydbergParams, basis: BasisKind) -> Result<Self> {
        Self::new(embedding.layout(), &embedding.weights(), params, basis)
    }

    pub fn atoms(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Basis states as bit masks (bit `i` = atom `i` excited), ascending.
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        if self.restricted {
            self.states.binary_search(&mask).ok()
        } else if mask < self.states.len() as u64 {
            Some(mask as usize)
        } else {
            None
        }
    }

    pub fn index_of_config(&self, config: &Configuration) -> Option<usize> {
        if config.len() != self.n {
            return None;
        }
        self.index_of(config.to_mask()?)
    }

    pub fn configuration(&self, index: usize) -> Configuration {
        Configuration::from_mask(self.states[index], self.n)
    }

    /// `H` with per-atom detunings `Δ_i` (MHz).
    pub fn hamiltonian(&self, omega: f64, detunings: &[f64]) -> Result<Hamiltonian<'_>> {
        if detunings.len() != self.n {
            return Err(Error::input(format!(
                "{} detunings for {} atoms",
                detunings.len(),
                self.n
            )));
        }
        let diag = self
            .states
            .par_iter()
            .zip(self.interaction.par_iter())
            .map(|(&s, &v)| {
                let mut d = v;
                for (i, det) in detunings.iter().enumerate() {
                    if s >> i & 1 == 1 {
                        d -= det;
                    }
                }
                d
            })
            .collect();
        Ok(Hamiltonian {
            system: self,
            diag,
            half_omega: omega / 2.0,
        })
    }

    /// `H` with `Δ_i = Δ + w_i·δ_ac`.
    pub fn at_controls(&self, c: Controls) -> Hamiltonian<'_> {
        let diag = self
            .interaction
            .par_iter()
            .zip(self.excitations.par_iter().zip(self.weighted.par_iter()))
            .map(|(&v, (&k, &w))| v - c.delta * k - c.delta_ac * w)
            .collect();
        Hamiltonian {
            system: self,
            diag,
            half_omega: c.omega / 2.0,
        }
    }

    pub fn at_time(&self, schedule: &AnnealingSchedule, t: f64) -> Hamiltonian<'_> {
        self.at_controls(schedule.at(t))
    }

    /// Gershgorin bound on `‖H‖` at the given controls.
    pub fn norm_bound(&self, c: Controls) -> f64 {
        let h = self.at_controls(c);
        h.norm_bound()
    }
}

impl Hamiltonian<'_> {
    pub fn system(&self) -> &RydbergSystem {
        self.system
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn half_omega(&self) -> f64 {
        self.half_omega
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let s = self.system;
        (0..self.dim())
            .map(|k| self.diag[k].abs() + self.half_omega.abs() * (s.offsets[k + 1] - s.offsets[k]) as f64)
            .fold(0.0, f64::max)
    }

    /// `y = H x` for real vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = self.system;
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(k, out)| {
            let mut acc = self.diag[k] * x[k];
            if self.half_omega != 0.0 {
                let mut off = 0.0;
                for &t in &s.targets[s.offsets[k]..s.offsets[k + 1]] {
                    off += x[t as usize];
                }
                acc += self.half_omega * off;
            }
            *out = acc;
        });
    }

    /// `y = H x` for complex vectors.
    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        let s = self.system;
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(k, out)| {
            let mut acc = x[k] * self.diag[k];
            if self.half_omega != 0.0 {
                let mut off = Complex64::new(0.0, 0.0);
                for &t in &s.targets[s.offsets[k]..s.offsets[k + 1]] {
                    off += x[t as usize];
                }
                acc += off * self.half_omega;
            }
            *out = acc;
        });
    }

    /// `⟨ψ|H|ψ⟩` (real for Hermitian `H`).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply_complex(psi, &mut y);
        psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense matrix, for small cross-checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let s = self.system;
        for k in 0..d {
            m[(k, k)] = self.diag[k];
            for &t in &s.targets[s.offsets[k]..s.offsets[k + 1]] {
                m[(k, t as usize)] += self.half_omega;
            }
        }
        m
    }
}

/// Builds the Hamiltonian structure for an embedding; evaluate it with
/// [`RydbergSystem::hamiltonian`] (explicit per-atom detunings) or
/// [`RydbergSystem::at_controls`] (global detuning plus weighted light shift).
pub fn build_hamiltonian(
    embedding: &EmbeddedInstance,
    params: &RydbergParams,
    basis: BasisKind,
) -> Result<RydbergSystem> {
    RydbergSystem::for_embedding(embedding, params, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn sys(positions: Vec<[f64; 2]>, basis: BasisKind) -> RydbergSystem {
        let n = positions.len();
        let layout = GeometricLayout::new(positions, 8.0).unwrap();
        RydbergSystem::new(&layout, &vec![1.0; n], &RydbergParams::default(), basis).unwrap()
    }

    fn eig(h: &Hamiltonian) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn single_atom_rabi_splitting() {
        let s = sys(vec![[0.0, 0.0]], BasisKind::Full);
        let h = s.hamiltonian(2.0, &[0.0]).unwrap();
        let e = eig(&h);
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blockaded_pair_prefers_single_excitation() {
        let s = sys(vec![[0.0, 0.0], [5.0, 0.0]], BasisKind::Full);
        let h = s.hamiltonian(0.0, &[3.0, 3.0]).unwrap();
        let d = h.diagonal();
        let ground = (0..4).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(s.states()[ground].count_ones(), 1);
    }

    #[test]
    fn hermitian_structure() {
        let s = sys(vec![[0.0, 0.0], [6.0, 0.0], [3.0, 5.0], [9.0, 4.0]], BasisKind::Full);
        let h = s.hamiltonian(1.3, &[0.2, -0.4, 0.9, 1.1]).unwrap();
        let m = h.to_dense();
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn blockade_basis_is_independent_sets() {
        let s = sys(
            vec![[0.0, 0.0], [6.4, 0.0], [12.8, 0.0], [19.2, 0.0]],
            BasisKind::Blockade,
        );
        // Independent sets of a 4-path: 8.
        assert_eq!(s.dim(), 8);
        assert!(s.is_restricted());
        assert!(s.index_of(0b0011).is_none());
        assert_eq!(s.configuration(s.index_of(0b1001).unwrap()).to_string(), "1001");
    }

    #[test]
    fn matvec_matches_dense() {
        let s = sys(vec![[0.0, 0.0], [6.4, 0.0], [12.8, 0.0]], BasisKind::Full);
        let h = s.at_controls(Controls {
            omega: 1.0,
            delta: -0.5,
            delta_ac: 2.0,
        });
        let x: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; 8];
        h.apply(&x, &mut y);
        let yd = h.to_dense() * nalgebra::DVector::from_vec(x);
        for k in 0..8 {
            assert!((y[k] - yd[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_space_cap() {
        let layout = GeometricLayout::new((0..21).map(|i| [i as f64 * 20.0, 0.0]).collect(), 8.0).unwrap();
        let r = RydbergSystem::new(&layout, &[1.0; 21], &RydbergParams::default(), BasisKind::Full);
        assert!(matches!(r, Err(Error::SizeCap { .. })));
    }
}
