use crate::embed::EmbeddedInstance;
use crate::error::{Error, Result};
use crate::graph::RydbergParams;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{BasisKind, RydbergSystem};
use super::lanczos::{lowest_eigenpairs_preconditioned, LanczosOptions};
use super::schedule::AnnealingSchedule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    /// µs.
    pub times: Vec<f64>,
    /// Lowest `k` eigenvalues at each time, MHz.
    pub energies: Vec<Vec<f64>>,
    /// `E1 − E0`, MHz.
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub min_gap_time: f64,
    pub restricted_basis: bool,
}

/// Lowest `k_excited + 1` levels at `n_times` evenly spaced instants of the
/// schedule (both ends included).
pub fn gap_curve_for_system(
    system: &RydbergSystem,
    schedule: &AnnealingSchedule,
    n_times: usize,
    k_excited: usize,
) -> Result<GapCurve> {
    schedule.validate()?;
    if n_times < 2 {
        return Err(Error::input("a gap curve needs at least two sample times"));
    }
    let k = (k_excited.max(1) + 1).min(system.dim());
    if k < 2 {
        return Err(Error::input("the basis has a single state; no gap is defined"));
    }
    let times: Vec<f64> = (0..n_times)
        .map(|i| schedule.total_time * i as f64 / (n_times - 1) as f64)
        .collect();
    let mut energies = Vec::with_capacity(n_times);
    for &t in &times {
        let h = system.at_time(schedule, t);
        if h.half_omega() == 0.0 {
            // Undriven: H is diagonal, and a Krylov method would crawl
            // through its massive degeneracies.
            let mut d = h.diagonal().to_vec();
            d.sort_by(f64::total_cmp);
            d.truncate(k);
            energies.push(d);
            continue;
        }
        let e = lowest_eigenpairs_preconditioned(
            h.dim(),
            k,
            |x, y| h.apply(x, y),
            h.diagonal(),
            &LanczosOptions::default(),
        )
        .map_err(|e| Error::Numerical(format!("at t = {t} µs: {e}")))?;
        energies.push(e.values);
    }
    let gaps: Vec<f64> = energies.iter().map(|e| (e[1] - e[0]).max(0.0)).collect();
    let (imin, &min_gap) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least two samples");
    Ok(GapCurve {
        min_gap_time: times[imin],
        times,
        energies,
        gaps,
        min_gap,
        restricted_basis: system.is_restricted(),
    })
}

pub fn spectral_gap_curve(
    embedding: &EmbeddedInstance,
    params: &RydbergParams,
    schedule: &AnnealingSchedule,
    n_times: usize,
    k_excited: usize,
    basis: BasisKind,
) -> Result<GapCurve> {
    schedule.check_cap(&embedding.weights(), params, embedding.layout().radius())?;
    let system = RydbergSystem::for_embedding(embedding, params, basis)?;
    gap_curve_for_system(&system, schedule, n_times, k_excited)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScaling {
    /// Exponent in `ΔE_min ∼ N^{−z}`.
    pub z: f64,
    pub prefactor: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares fit of `log ΔE_min = log A − z·log N`.
pub fn fit_gap_scaling(points: &[(f64, f64)]) -> Result<GapScaling> {
    if points.len() < 3 {
        return Err(Error::input(format!(
            "gap scaling needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()))
    {
        return Err(Error::input(format!(
            "point ({}, {}) is not strictly positive",
            p.0, p.1
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("gap scaling needs at least two distinct sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(GapScaling {
        z: -slope,
        prefactor: intercept.exp(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeometricLayout;
    use crate::quantum::schedule::Controls;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&n| (n, 3.0 / n)).collect();
        let f = fit_gap_scaling(&pts).unwrap();
        assert!((f.z - 1.0).abs() < 1e-9 && f.residual < 1e-9);
        let flat: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|&n| (n, 0.2)).collect();
        assert!(fit_gap_scaling(&flat).unwrap().z.abs() < 1e-12);
        assert!(fit_gap_scaling(&pts[..2]).is_err());
        assert!(fit_gap_scaling(&[(4.0, 1.0), (8.0, 0.0), (16.0, 1.0)]).is_err());
    }

    #[test]
    fn diagonal_gap_is_classical() {
        let layout = GeometricLayout::new(vec![[0.0, 0.0], [6.4, 0.0], [12.8, 0.0]], 8.0).unwrap();
        let sys = RydbergSystem::new(&layout, &[0.3, 1.1, 0.7], &RydbergParams::default(), BasisKind::Full).unwrap();
        let s = AnnealingSchedule {
            total_time: 1.0,
            omega: vec![[0.0, 0.0], [1.0, 0.0]],
            delta: vec![[0.0, -2.0], [1.0, -1.0]],
            delta_ac: vec![[0.0, 0.0], [1.0, 3.0]],
        };
        let c = gap_curve_for_system(&sys, &s, 5, 1).unwrap();
        for (i, &t) in c.times.iter().enumerate() {
            let h = sys.at_controls(Controls { omega: 0.0, ..s.at(t) });
            let mut d = h.diagonal().to_vec();
            d.sort_by(f64::total_cmp);
            assert!((c.gaps[i] - (d[1] - d[0])).abs() < 1e-9);
        }
    }
}
