use crate::error::{Error, Result};
use crate::graph::{detuning_cap, RydbergParams};
use serde::{Deserialize, Serialize};

/// Piecewise-linear control curves over `[0, T]`.
///
/// All values are cyclic frequencies in MHz. The detuning on atom `i` is
/// `Δ_i(t) = Δ(t) + w_i·δ_ac(t)`, so `delta_ac` is in MHz per unit weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    #[serde(rename = "T_us")]
    pub total_time: f64,
    pub omega: Vec<[f64; 2]>,
    pub delta: Vec<[f64; 2]>,
    pub delta_ac: Vec<[f64; 2]>,
}

/// Control values at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls {
    pub omega: f64,
    pub delta: f64,
    pub delta_ac: f64,
}

fn interpolate(curve: &[[f64; 2]], t: f64) -> f64 {
    if t <= curve[0][0] {
        return curve[0][1];
    }
    for w in curve.windows(2) {
        let ([t0, v0], [t1, v1]) = (w[0], w[1]);
        if t <= t1 {
            if t1 == t0 {
                return v1;
            }
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    curve[curve.len() - 1][1]
}

impl AnnealingSchedule {
    /// Three-phase ramp: Ω rises over the first 10 % with `Δ = delta_start`,
    /// `Δ` is swept to zero by `T/2`, the light shift `δ_ac` ramps to
    /// `delta_ac_max` by `0.9·T`, and Ω falls to zero at `T`.
    pub fn three_phase(total_time: f64, omega: f64, delta_start: f64, delta_ac_max: f64) -> Result<Self> {
        let t = total_time;
        let s = AnnealingSchedule {
            total_time: t,
            omega: vec![[0.0, 0.0], [0.1 * t, omega], [0.9 * t, omega], [t, 0.0]],
            delta: vec![[0.0, delta_start], [0.1 * t, delta_start], [0.5 * t, 0.0], [t, 0.0]],
            delta_ac: vec![[0.0, 0.0], [0.5 * t, 0.0], [0.9 * t, delta_ac_max], [t, delta_ac_max]],
        };
        s.validate()?;
        Ok(s)
    }

    /// Default for an atom set: Ω from `params`, `Δ(0) = −5·Ω` (−5 MHz if
    /// Ω = 0), and a light shift that brings the heaviest atom to
    /// `Δ_max` (by default the blockade-preserving cap).
    pub fn default_for(total_time: f64, params: &RydbergParams, radius: f64, max_weight: f64) -> Result<Self> {
        let start = if params.omega > 0.0 { -5.0 * params.omega } else { -5.0 };
        Self::three_phase(
            total_time,
            params.omega,
            start,
            params.resolved_delta_max(radius) / max_weight,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.total_time;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::input(format!("total time {t} µs must be positive")));
        }
        for (name, curve) in [
            ("omega", &self.omega),
            ("delta", &self.delta),
            ("delta_ac", &self.delta_ac),
        ] {
            if curve.is_empty() {
                return Err(Error::input(format!("schedule curve {name} is empty")));
            }
            if curve.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(Error::input(format!("schedule curve {name} has non-finite points")));
            }
            if curve.windows(2).any(|w| w[1][0] < w[0][0]) {
                return Err(Error::input(format!(
                    "schedule curve {name} must have non-decreasing times"
                )));
            }
            let (first, last) = (curve[0][0], curve[curve.len() - 1][0]);
            if first.abs() > 1e-12 * t || (last - t).abs() > 1e-9 * t {
                return Err(Error::input(format!(
                    "schedule curve {name} must span [0, T] = [0, {t}]"
                )));
            }
        }
        if self.omega.iter().any(|p| p[1] < 0.0) {
            return Err(Error::input("Ω must be non-negative"));
        }
        if self.omega[0][1] != 0.0 {
            return Err(Error::input("Ω(0) must be 0 so the sweep starts in |0…0⟩"));
        }
        if self.delta[0][1] >= 0.0 {
            return Err(Error::input(
                "Δ(0) must be negative so |0…0⟩ is the initial ground state",
            ));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> Controls {
        Controls {
            omega: interpolate(&self.omega, t),
            delta: interpolate(&self.delta, t),
            delta_ac: interpolate(&self.delta_ac, t),
        }
    }

    /// All curve breakpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .omega
            .iter()
            .chain(&self.delta)
            .chain(&self.delta_ac)
            .map(|p| p[0])
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Largest site detuning `max_{t,i} Δ(t) + w_i·δ_ac(t)` (attained at a
    /// breakpoint since the curves are piecewise linear).
    pub fn max_site_detuning(&self, weights: &[f64]) -> f64 {
        self.breakpoints()
            .into_iter()
            .flat_map(|t| {
                let c = self.at(t);
                weights.iter().map(move |w| c.delta + w * c.delta_ac)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rejects schedules whose site detunings exceed `0.9·|C6|/R⁶`.
    pub fn check_cap(&self, weights: &[f64], params: &RydbergParams, radius: f64) -> Result<()> {
        let cap = detuning_cap(params, radius);
        let max = self.max_site_detuning(weights);
        if max > cap * (1.0 + 1e-12) {
            return Err(Error::input(format!(
                "schedule drives a site to Δ = {max:.6} MHz, above the blockade cap {cap:.6} MHz"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_phases() {
        let s = AnnealingSchedule::three_phase(2.0, 1.0, -5.0, 10.0).unwrap();
        let c = s.at(0.0);
        assert_eq!((c.omega, c.delta, c.delta_ac), (0.0, -5.0, 0.0));
        assert!((s.at(0.1).omega - 0.5).abs() < 1e-12);
        assert!((s.at(0.6).delta + 2.5).abs() < 1e-12);
        assert_eq!(s.at(1.0).delta, 0.0);
        assert!((s.at(1.4).delta_ac - 5.0).abs() < 1e-12);
        assert_eq!(s.at(2.0).omega, 0.0);
        assert_eq!(s.at(5.0).delta_ac, 10.0);
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert!(AnnealingSchedule::three_phase(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(AnnealingSchedule::three_phase(0.0, 1.0, -1.0, 1.0).is_err());
        let mut s = AnnealingSchedule::three_phase(1.0, 1.0, -1.0, 1.0).unwrap();
        s.omega[0][1] = 0.5;
        assert!(s.validate().is_err());
        let mut s = AnnealingSchedule::three_phase(1.0, 1.0, -1.0, 1.0).unwrap();
        s.delta.pop();
        assert!(s.validate().is_err());
    }

    #[test]
    fn cap_enforced() {
        let p = RydbergParams::default();
        let r = 8.0;
        let cap = detuning_cap(&p, r);
        let ok = AnnealingSchedule::default_for(1.0, &p, r, 1.1).unwrap();
        ok.check_cap(&[0.3, 0.7, 1.1], &p, r).unwrap();
        assert!((ok.max_site_detuning(&[1.1]) - cap).abs() < 1e-9);
        let bad = AnnealingSchedule::three_phase(1.0, 1.0, -1.0, 1.01 * cap / 1.1).unwrap();
        assert!(bad.check_cap(&[1.1], &p, r).is_err());
    }

    #[test]
    fn json_field_names() {
        let s = AnnealingSchedule::three_phase(1.0, 1.0, -1.0, 1.0).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert!(v.get("T_us").is_some() && v.get("delta_ac").is_some());
    }
}
