//! Geometry helpers for placing chains and crossing cores, and a small
//! penalty-relaxation layout for logical graphs that come without
//! coordinates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// One straight or bent segment of ancillas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    /// Polyline in µm from the first to the last atom of the leg.
    pub path: Vec<Point>,
    /// Atoms placed uniformly along the polyline, endpoints included.
    pub atoms: usize,
}

/// `n` points spaced uniformly (by arc length) along `poly`, including both
/// ends. A single atom sits on `poly[0]`.
pub fn place_along(poly: &[Point], n: usize) -> Result<Vec<Point>> {
    if poly.is_empty() {
        return Err(Error::input("empty routing polyline"));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![poly[0]]);
    }
    let seg: Vec<f64> = poly.windows(2).map(|w| dist(w[0], w[1])).collect();
    let total: f64 = seg.iter().sum();
    if seg.is_empty() || total <= 0.0 {
        return Err(Error::input(format!("a polyline of zero length cannot hold {n} atoms")));
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = total * k as f64 / (n - 1) as f64;
        let mut i = 0;
        while i + 1 < seg.len() && s > seg[i] {
            s -= seg[i];
            i += 1;
        }
        let t = if seg[i] > 0.0 { (s / seg[i]).min(1.0) } else { 0.0 };
        let (a, b) = (poly[i], poly[i + 1]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    Ok(out)
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn polyline_length(poly: &[Point]) -> f64 {
    poly.windows(2).map(|w| dist(w[0], w[1])).sum()
}

pub fn centroid(ps: &[Point]) -> Point {
    let n = ps.len() as f64;
    [
        ps.iter().map(|p| p[0]).sum::<f64>() / n,
        ps.iter().map(|p| p[1]).sum::<f64>() / n,
    ]
}

/// Straight chain between two end groups with an even atom count.
///
/// The `from → to` span is cut into an odd number of equal hops (even atom
/// count); among the admissible hop counts the one whose hop length is
/// closest to `spacing` wins, subject to hops staying below `0.95·radius`.
/// Parity is thus repaired by re-spacing the whole chain rather than by
/// squeezing a single gap.
pub fn straight_leg(from: Point, to: Point, spacing: f64, radius: f64) -> Result<Leg> {
    if !(spacing > 0.0 && spacing < radius) {
        return Err(Error::input(format!(
            "chain spacing {spacing} must lie in (0, R = {radius})"
        )));
    }
    let d = dist(from, to);
    let max_hop = 0.95 * radius;
    let mut best: Option<(f64, usize)> = None;
    let mut hops = 3usize;
    loop {
        let gap = d / hops as f64;
        if gap < max_hop {
            let score = (gap - spacing).abs();
            if best.is_none_or(|b| score <= b.0) {
                best = Some((score, hops));
            }
            if gap < spacing {
                break;
            }
        }
        hops += 2;
    }
    let hops = best.expect("loop always records a candidate").1;
    let (ux, uy) = ((to[0] - from[0]) / d, (to[1] - from[1]) / d);
    let gap = d / hops as f64;
    let a = [from[0] + gap * ux, from[1] + gap * uy];
    let b = [to[0] - gap * ux, to[1] - gap * uy];
    Ok(Leg {
        path: vec![a, b],
        atoms: hops - 1,
    })
}

/// Whether open segments `p1–p2` and `q1–q2` properly intersect.
pub fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    fn orient(a: Point, b: Point, c: Point) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Pair targets for [`relax_layout`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairTarget {
    /// Distance should not exceed the value.
    AtMost(f64),
    /// Distance should be at least the value.
    AtLeast(f64),
    /// Distance should sit inside the interval.
    Between(f64, f64),
}

impl PairTarget {
    fn violation(self, d: f64) -> f64 {
        match self {
            PairTarget::AtMost(x) => (d - x).max(0.0),
            PairTarget::AtLeast(x) => (x - d).max(0.0),
            PairTarget::Between(lo, hi) => (lo - d).max(0.0) + (d - hi).max(0.0),
        }
    }
}

/// Deterministic gradient relaxation of point positions under pairwise
/// targets; returns the final positions and the residual quadratic penalty.
pub fn relax_layout(
    init: Vec<Point>,
    targets: &[(usize, usize, PairTarget)],
    iterations: usize,
    step: f64,
) -> (Vec<Point>, f64) {
    let mut pos = init;
    let n = pos.len();
    let penalty = |pos: &[Point]| -> f64 {
        targets
            .iter()
            .map(|&(i, j, t)| t.violation(dist(pos[i], pos[j])).powi(2))
            .sum()
    };
    let mut lr = step;
    let mut current = penalty(&pos);
    for _ in 0..iterations {
        if current < 1e-14 {
            break;
        }
        let mut grad = vec![[0.0; 2]; n];
        for &(i, j, t) in targets {
            let d = dist(pos[i], pos[j]).max(1e-9);
            let v = t.violation(d);
            if v == 0.0 {
                continue;
            }
            let sign = match t {
                PairTarget::AtMost(_) => 1.0,
                PairTarget::AtLeast(_) => -1.0,
                PairTarget::Between(lo, _) => {
                    if d < lo {
                        -1.0
                    } else {
                        1.0
                    }
                }
            };
            let g = 2.0 * v * sign / d;
            for a in 0..2 {
                let diff = pos[i][a] - pos[j][a];
                grad[i][a] += g * diff;
                grad[j][a] -= g * diff;
            }
        }
        let trial: Vec<Point> = pos
            .iter()
            .zip(&grad)
            .map(|(p, g)| [p[0] - lr * g[0], p[1] - lr * g[1]])
            .collect();
        let next = penalty(&trial);
        if next < current {
            pos = trial;
            current = next;
            lr *= 1.1;
        } else {
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
        }
    }
    (pos, current)
}

/// Points evenly spread on a circle; used as a deterministic initial layout.
pub fn circle(n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n.max(1) as f64 + 0.1;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn place_includes_endpoints() {
        let p = place_along(&[[0.0, 0.0], [3.0, 0.0], [3.0, 3.0]], 3).unwrap();
        assert_eq!(p[0], [0.0, 0.0]);
        assert_eq!(p[1], [3.0, 0.0]);
        assert_eq!(p[2], [3.0, 3.0]);
        assert_eq!(place_along(&[[1.0, 2.0]], 1).unwrap(), vec![[1.0, 2.0]]);
        assert!(place_along(&[[1.0, 2.0]], 2).is_err());
    }

    #[test]
    fn straight_leg_is_even_and_within_spacing() {
        for d in [17.0, 19.2, 20.0, 25.0, 31.7, 40.0] {
            let leg = straight_leg([0.0, 0.0], [d, 0.0], 6.4, 8.0).unwrap();
            assert_eq!(leg.atoms % 2, 0);
            let pts = place_along(&leg.path, leg.atoms).unwrap();
            let mut chain = vec![[0.0, 0.0]];
            chain.extend(pts);
            chain.push([d, 0.0]);
            for w in chain.windows(2) {
                let hop = dist(w[0], w[1]);
                assert!(hop < 0.95 * 8.0 && 2.0 * hop > 8.0, "d={d} hop={hop}");
            }
        }
    }

    #[test]
    fn crossing_detection() {
        assert!(segments_cross([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]));
        assert!(!segments_cross([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }

    #[test]
    fn relaxation_satisfies_simple_targets() {
        let init = vec![[0.0, 0.0], [0.1, 0.0], [0.2, 0.0]];
        let t = vec![
            (0, 1, PairTarget::AtMost(1.0)),
            (1, 2, PairTarget::AtMost(1.0)),
            (0, 2, PairTarget::AtLeast(1.5)),
        ];
        let (pos, pen) = relax_layout(init, &t, 5000, 0.1);
        assert!(pen < 1e-10, "{pen}");
        assert!(dist(pos[0], pos[2]) >= 1.5 - 1e-4);
    }
}
