//! Extremal eigenpairs of real symmetric operators.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Below this dimension the operator is materialised and diagonalised
/// densely.
pub const DENSE_LIMIT: usize = 400;

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Residual tolerance relative to the largest Ritz value magnitude.
    pub tol: f64,
    pub want_vectors: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_iter: 400,
            tol: 1e-10,
            want_vectors: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Residual norms `‖H v − λ v‖`.
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dense(dim: usize, k: usize, apply: &impl Fn(&[f64], &mut [f64]), want: bool) -> Eigenpairs {
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        apply(&e, &mut col);
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    Eigenpairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: if want {
            order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
                .collect()
        } else {
            vec![]
        },
        iterations: dim,
        residuals: vec![0.0; order.len()],
    }
}

/// Lowest `k` eigenpairs of the symmetric operator `apply` on `R^dim`.
///
/// Lanczos with full reorthogonalisation, explicit restarts and locking:
/// each eigenpair is found by a fresh run restricted to the orthogonal
/// complement of those already converged, so degenerate levels are
/// resolved too. Inside near-degenerate clusters a Ritz value is accepted
/// once it is stationary across restarts with a relative residual below
/// 1e-5; the residual bounds its distance to the spectrum and is reported.
pub fn lowest_eigenpairs(
    dim: usize,
    k: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    opts: &LanczosOptions,
) -> Result<Eigenpairs> {
    if dim == 0 || k == 0 {
        return Err(Error::input("eigenproblem needs a positive dimension and k"));
    }
    let k = k.min(dim);
    if dim <= DENSE_LIMIT {
        return Ok(dense(dim, k, &apply, opts.want_vectors));
    }
    // Keep the Krylov basis under ~1.6 GB.
    let budget = (200_000_000 / dim).max(20);
    let max_iter = opts.max_iter.min(dim).min(budget).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut w = vec![0.0; dim];
    for _ in 0..k {
        let (value, vector, its) = lowest_in_complement(dim, &apply, &locked, max_iter, opts.tol, &mut rng)?;
        iterations += its;
        apply(&vector, &mut w);
        let res = w
            .iter()
            .zip(&vector)
            .map(|(hx, x)| (hx - value * x).powi(2))
            .sum::<f64>()
            .sqrt();
        values.push(value);
        residuals.push(res);
        locked.push(vector);
    }
    // Locking returns values in ascending order up to round-off; sort to be safe.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(Eigenpairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: if opts.want_vectors {
            order.iter().map(|&i| locked[i].clone()).collect()
        } else {
            vec![]
        },
        iterations,
        residuals: order.iter().map(|&i| residuals[i]).collect(),
    })
}

fn orthogonalise(w: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Explicit restarts (from the current Ritz vector) before giving up.
const MAX_RESTARTS: usize = 40;
/// Relative residual accepted once a Ritz value stops moving between
/// restarts.
const CLUSTER_TOL: f64 = 1e-5;

enum Run {
    Converged(f64, Vec<f64>),
    Stalled {
        value: f64,
        ritz: Vec<f64>,
        residual: f64,
        scale: f64,
    },
}

fn lowest_in_complement(
    dim: usize,
    apply: &impl Fn(&[f64], &mut [f64]),
    locked: &[Vec<f64>],
    max_iter: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<f64>, usize)> {
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut total = 0;
    let mut last = (f64::NAN, f64::NAN);
    let mut previous = f64::INFINITY;
    for _ in 0..=MAX_RESTARTS {
        let (run, its) = lanczos_run(dim, apply, locked, start, max_iter, tol)?;
        total += its;
        match run {
            Run::Converged(value, x) => return Ok((value, x, total)),
            Run::Stalled {
                value,
                ritz,
                residual,
                scale,
            } => {
                // Inside a tight cluster the Ritz vector wanders while the
                // value (within `residual` of an eigenvalue) has settled.
                if (value - previous).abs() <= tol * scale && residual <= CLUSTER_TOL * scale {
                    return Ok((value, ritz, total));
                }
                previous = value;
                start = ritz;
                last = (residual, scale);
            }
        }
    }
    Err(Error::Numerical(format!(
        "Lanczos did not converge within {total} iterations (dimension {dim}, residual {:.3e}, scale {:.3e})",
        last.0, last.1
    )))
}

/// One Lanczos run from `v`, with full reorthogonalisation against the
/// locked vectors and the run's own basis.
fn lanczos_run(
    dim: usize,
    apply: &impl Fn(&[f64], &mut [f64]),
    locked: &[Vec<f64>],
    mut v: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<(Run, usize)> {
    orthogonalise(&mut v, locked);
    let nv = norm(&v);
    if nv < 1e-8 {
        return Err(Error::Numerical(
            "no direction left outside the locked eigenvectors".into(),
        ));
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    for j in 0..max_iter {
        apply(&v, &mut w);
        alpha.push(dot(&v, &w));
        basis.push(std::mem::take(&mut v));
        let mut r = w.clone();
        // Locked directions go last: projecting onto the run's basis
        // re-injects a tiny locked component, which the three-term
        // recurrence would amplify exponentially.
        for _ in 0..2 {
            orthogonalise(&mut r, &basis);
            orthogonalise(&mut r, locked);
        }
        let b = norm(&r);
        let m = alpha.len();
        let last = j + 1 == max_iter;
        if m.is_multiple_of(5) || last || b < 1e-12 * (1.0 + alpha[m - 1].abs()) {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let lo = (0..m)
                .min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]))
                .unwrap();
            let scale = eig.eigenvalues.iter().fold(1e-300_f64, |s, x| s.max(x.abs()));
            let res = (b * eig.eigenvectors[(m - 1, lo)]).abs();
            let converged = res <= tol * scale || b < 1e-12 * scale;
            if converged || last {
                let mut x = vec![0.0; dim];
                for (row, bv) in basis.iter().enumerate() {
                    let c = eig.eigenvectors[(row, lo)];
                    x.iter_mut().zip(bv).for_each(|(a, y)| *a += c * y);
                }
                orthogonalise(&mut x, locked);
                let nx = norm(&x);
                x.iter_mut().for_each(|a| *a /= nx);
                let run = if converged {
                    Run::Converged(eig.eigenvalues[lo], x)
                } else {
                    Run::Stalled {
                        value: eig.eigenvalues[lo],
                        ritz: x,
                        residual: res,
                        scale,
                    }
                };
                return Ok((run, m));
            }
        }
        beta.push(b);
        r.iter_mut().for_each(|x| *x /= b);
        v = r;
    }
    unreachable!("loop returns on its last iteration")
}

/// Lowest `k` eigenpairs of a symmetric operator whose diagonal is known.
///
/// Block Davidson with the diagonal (Jacobi) preconditioner, started from
/// the unit vectors of the smallest diagonal entries. Far better than
/// Lanczos on strongly diagonally dominant operators such as Rydberg
/// Hamiltonians, whose blockade-violating states stretch the spectrum by
/// orders of magnitude beyond the low-lying gaps. The block carries a few
/// spare vectors, so degeneracies up to `k + 4` are resolved.
pub fn lowest_eigenpairs_preconditioned(
    dim: usize,
    k: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    diagonal: &[f64],
    opts: &LanczosOptions,
) -> Result<Eigenpairs> {
    if dim == 0 || k == 0 {
        return Err(Error::input("eigenproblem needs a positive dimension and k"));
    }
    if diagonal.len() != dim {
        return Err(Error::input(format!(
            "diagonal has {} entries for dimension {dim}",
            diagonal.len()
        )));
    }
    let k = k.min(dim);
    if dim <= DENSE_LIMIT {
        return Ok(dense(dim, k, &apply, opts.want_vectors));
    }
    let block = (k + 4).min(dim);
    let max_basis = (8 * block).max(48).min(dim);
    let keep = (2 * block).min(max_basis - block);
    let scale = diagonal.iter().fold(1.0_f64, |s, d| s.max(d.abs()));
    let tol = opts.tol * scale;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| diagonal[a].total_cmp(&diagonal[b]));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut gram: Vec<Vec<f64>> = Vec::new();
    let extend = |v: Vec<f64>, basis: &mut Vec<Vec<f64>>, images: &mut Vec<Vec<f64>>, gram: &mut Vec<Vec<f64>>| {
        let mut w = vec![0.0; dim];
        apply(&v, &mut w);
        let row: Vec<f64> = basis.iter().map(|b| dot(b, &w)).collect();
        for (g, &x) in gram.iter_mut().zip(&row) {
            g.push(x);
        }
        let mut row = row;
        row.push(dot(&v, &w));
        gram.push(row);
        basis.push(v);
        images.push(w);
    };
    for &i in order.iter().take(block) {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        extend(v, &mut basis, &mut images, &mut gram);
    }

    let mut iterations = 0;
    let mut worst = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let m = basis.len();
        let g = DMatrix::from_fn(m, m, |i, j| 0.5 * (gram[i][j] + gram[j][i]));
        let eig = SymmetricEigen::new(g);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let combine = |src: &[Vec<f64>], col: usize| {
            let mut x = vec![0.0; dim];
            for (row, v) in src.iter().enumerate() {
                let c = eig.eigenvectors[(row, col)];
                x.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
            x
        };
        let nb = block.min(m);
        let mut ritz = Vec::with_capacity(nb);
        let mut residuals = Vec::with_capacity(nb);
        for &col in idx.iter().take(nb) {
            let theta = eig.eigenvalues[col];
            let x = combine(&basis, col);
            let hx = combine(&images, col);
            let r: Vec<f64> = hx.iter().zip(&x).map(|(h, x)| h - theta * x).collect();
            residuals.push(norm(&r));
            ritz.push((theta, x, r));
        }
        worst = residuals[..k].iter().fold(0.0_f64, |a, &b| a.max(b));
        if worst <= tol {
            return Ok(Eigenpairs {
                values: ritz[..k].iter().map(|r| r.0).collect(),
                vectors: if opts.want_vectors {
                    ritz.into_iter().take(k).map(|r| r.1).collect()
                } else {
                    vec![]
                },
                iterations,
                residuals: residuals[..k].to_vec(),
            });
        }
        if m + nb > max_basis {
            // Thick restart from the lowest Ritz vectors.
            let kept: Vec<Vec<f64>> = idx.iter().take(keep.min(m)).map(|&col| combine(&basis, col)).collect();
            basis.clear();
            images.clear();
            gram.clear();
            for mut v in kept {
                orthogonalise(&mut v, &basis);
                let nv = norm(&v);
                if nv > 1e-10 {
                    v.iter_mut().for_each(|x| *x /= nv);
                    extend(v, &mut basis, &mut images, &mut gram);
                }
            }
        }
        let mut added = 0;
        for (i, (theta, _, r)) in ritz.iter().enumerate() {
            if residuals[i] <= tol {
                continue;
            }
            let floor = 1e-8 * scale;
            let mut t: Vec<f64> = r
                .iter()
                .zip(diagonal)
                .map(|(r, d)| {
                    let den = d - theta;
                    r / if den.abs() < floor { floor.copysign(den) } else { den }
                })
                .collect();
            for candidate in [&mut t, &mut r.clone()] {
                let before = norm(candidate);
                orthogonalise(candidate, &basis);
                let after = norm(candidate);
                if after > 1e-8 * before && after > 0.0 {
                    candidate.iter_mut().for_each(|x| *x /= after);
                    extend(std::mem::take(candidate), &mut basis, &mut images, &mut gram);
                    added += 1;
                    break;
                }
            }
        }
        if added == 0 {
            break;
        }
    }
    Err(Error::Numerical(format!(
        "Davidson did not converge within {iterations} iterations (dimension {dim}, residual {worst:.3e}, tolerance {tol:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_plus(dim: usize) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..dim {
                let mut v = (2.0 + 0.01 * i as f64) * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < dim {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let dim = 600;
        let op = laplacian_plus(dim);
        let lz = lowest_eigenpairs(dim, 3, &op, &LanczosOptions::default()).unwrap();
        let d = dense(dim, 3, &op, false);
        for i in 0..3 {
            assert!(
                (lz.values[i] - d.values[i]).abs() < 1e-8 * 6.0,
                "{:?} {:?}",
                lz.values,
                d.values
            );
            assert!(lz.residuals[i] < 1e-6);
        }
    }

    #[test]
    fn degenerate_values_are_found() {
        // Two copies of a 300-dim operator.
        let dim = 600;
        let half = laplacian_plus(300);
        let op = move |x: &[f64], y: &mut [f64]| {
            half(&x[..300], &mut y[..300]);
            half(&x[300..], &mut y[300..]);
        };
        let lz = lowest_eigenpairs(dim, 2, op, &LanczosOptions::default()).unwrap();
        assert!((lz.values[0] - lz.values[1]).abs() < 1e-8, "{:?}", lz.values);
    }

    #[test]
    fn locked_runs_survive_a_wide_spectrum() {
        // Strong, widely spread diagonal with weak hopping: the regime where
        // a locked ground state tends to leak back into later runs.
        let dim = 1024;
        let diag: Vec<f64> = (0..dim)
            .map(|i| ((i * 37) % 640) as f64 - 2.0 * ((i % 3) as f64))
            .collect();
        let op = move |x: &[f64], y: &mut [f64]| {
            for i in 0..dim {
                let mut v = diag[i] * x[i];
                for b in [1usize, 2, 8, 64] {
                    v += 0.5 * x[i ^ b];
                }
                y[i] = v;
            }
        };
        let lz = lowest_eigenpairs(dim, 3, &op, &LanczosOptions::default()).unwrap();
        let d = dense(dim, 3, &op, false);
        for i in 0..3 {
            assert!(
                (lz.values[i] - d.values[i]).abs() < 1e-6,
                "{:?} {:?}",
                lz.values,
                d.values
            );
        }
    }

    #[test]
    fn davidson_matches_dense_with_degeneracy() {
        // Diagonally dominant with a doubly degenerate bottom.
        let dim = 900;
        let diag: Vec<f64> = (0..dim)
            .map(|i| if i < 2 { -3.0 } else { ((i * 53) % 700) as f64 * 0.5 })
            .collect();
        let d2 = diag.clone();
        let op = move |x: &[f64], y: &mut [f64]| {
            for i in 0..dim {
                let mut v = d2[i] * x[i];
                if i >= 2 {
                    for b in [1usize, 4, 32] {
                        let j = i ^ b;
                        if j >= 2 && j < dim {
                            v += 0.3 * x[j];
                        }
                    }
                }
                y[i] = v;
            }
        };
        let e = lowest_eigenpairs_preconditioned(dim, 4, &op, &diag, &LanczosOptions::default()).unwrap();
        let d = dense(dim, 4, &op, false);
        for i in 0..4 {
            assert!(
                (e.values[i] - d.values[i]).abs() < 1e-8 * 350.0,
                "{:?} {:?}",
                e.values,
                d.values
            );
        }
        assert_eq!(e.values[0], -3.0);
        assert_eq!(e.values[1], -3.0);
    }

    #[test]
    fn dense_path_for_small_dims() {
        let op = |x: &[f64], y: &mut [f64]| {
            y[0] = 2.0 * x[0] + x[1];
            y[1] = x[0] + 2.0 * x[1];
        };
        let e = lowest_eigenpairs(
            2,
            2,
            op,
            &LanczosOptions {
                want_vectors: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[1] - 3.0).abs() < 1e-12);
        assert_eq!(e.vectors.len(), 2);
    }
}
