//! Smallest eigenvalues of the symmetric pencil `K u = lambda M u`.
//!
//! Small problems use a dense Cholesky reduction. Larger problems use
//! shift-invert Lanczos in the `M` inner product with full
//! reorthogonalization; converged pairs are locked and the iteration is
//! restarted in their `M`-orthogonal complement until no missing eigenvalue
//! (e.g. a second copy of a degenerate one) remains below the cutoff.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{EnvelopeCholesky, SparseSymmetricMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Problems up to this dimension are solved densely.
    pub dense_threshold: usize,
    /// Bound on the normwise backward error
    /// `||K u - lambda M u||_2 / ((||K|| + |lambda| ||M||) ||u||_2)`.
    pub residual_tol: f64,
    /// Largest Krylov basis a single Lanczos run may build.
    pub max_krylov: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_threshold: 400,
            residual_tol: 1e-10,
            max_krylov: 400,
            seed: 0x5eed,
        }
    }
}

/// How the eigenvalues were obtained; carried into the spectrum metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveInfo {
    pub method: &'static str,
    pub lanczos_runs: usize,
    pub lanczos_steps: usize,
    pub max_residual: f64,
}

pub fn smallest_eigenvalues(
    k: &SparseSymmetricMatrix,
    m: &SparseSymmetricMatrix,
    count: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::precondition("stiffness and mass dimensions differ"));
    }
    if count == 0 || count > n {
        return Err(Error::precondition(format!(
            "requested {count} eigenvalues of a dimension-{n} pencil"
        )));
    }
    if n <= opts.dense_threshold || count + 8 > n / 2 {
        dense_smallest(k, m, count)
    } else {
        lanczos_smallest(k, m, count, opts)
    }
}

fn dense_smallest(
    k: &SparseSymmetricMatrix,
    m: &SparseSymmetricMatrix,
    count: usize,
) -> Result<(Vec<f64>, SolveInfo)> {
    let kd = k.to_dense();
    let md = m.to_dense();
    let chol = md
        .cholesky()
        .ok_or_else(|| Error::Solver("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_k = l
        .solve_lower_triangular(&kd)
        .ok_or_else(|| Error::Solver("singular mass factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::Solver("singular mass factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    Ok((
        values,
        SolveInfo {
            method: "dense",
            lanczos_runs: 0,
            lanczos_steps: 0,
            max_residual: 0.0,
        },
    ))
}

struct Locked {
    value: f64,
    vec: Vec<f64>,
    mvec: Vec<f64>,
}

/// Relative Ritz residual `|beta s_last| / theta` at which a pair counts as converged.
const RITZ_TOL: f64 = 1e-10;

struct Pencil<'a> {
    k: &'a SparseSymmetricMatrix,
    m: &'a SparseSymmetricMatrix,
    shift: f64,
    shifted: SparseSymmetricMatrix,
    chol: EnvelopeCholesky,
    k_norm: f64,
    m_norm: f64,
}

impl Pencil<'_> {
    /// `(K - shift M)^{-1} b` with one step of iterative refinement, which
    /// matters on meshes with needle triangles.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(b);
        let ax = self.shifted.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.chol.solve(&r);
        axpy(1.0, &dx, &mut x);
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn lanczos_smallest(
    k: &SparseSymmetricMatrix,
    m: &SparseSymmetricMatrix,
    count: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = k.dim();
    // Negative shift keeps K - shift*M positive definite. The magnitude is a
    // crude scale of the low spectrum: median of diag(K)/diag(M) divided by
    // n. The median ignores needle elements, whose ratios are huge.
    let kd = k.diagonal();
    let md = m.diagonal();
    let mut ratios: Vec<f64> = kd.iter().zip(&md).map(|(a, b)| a / b).collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[n / 2];
    let shift = -(median / n as f64).max(f64::MIN_POSITIVE);
    let shifted = k.add_scaled(-shift, m);
    let chol = EnvelopeCholesky::factor(&shifted)?;
    let pencil = Pencil {
        k,
        m,
        shift,
        shifted,
        chol,
        k_norm: k.norm_inf(),
        m_norm: m.norm_inf(),
    };

    let mut info = SolveInfo {
        method: "shift-invert-lanczos",
        lanczos_runs: 0,
        lanczos_steps: 0,
        max_residual: 0.0,
    };
    let mut locked: Vec<Locked> = Vec::new();
    let first = lanczos_run(&pencil, &locked, count, opts, 0, &mut info)?;
    locked.extend(first);
    let max_runs = 2 * count + 8;
    for run in 1..max_runs {
        locked.sort_by(|a, b| a.value.total_cmp(&b.value));
        let cutoff = locked[count - 1].value;
        if locked.len() >= n {
            break;
        }
        let found = lanczos_run(&pencil, &locked, 1, opts, run as u64, &mut info)?;
        let mut progressed = false;
        for pair in found {
            if pair.value < cutoff {
                locked.push(pair);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
        if run + 1 == max_runs {
            return Err(Error::Solver(format!(
                "locking did not settle after {max_runs} Lanczos runs"
            )));
        }
    }
    locked.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut values = Vec::with_capacity(count);
    for pair in locked.iter().take(count) {
        let scaled = backward_error(&pencil, pair.value, &pair.vec, &pair.mvec);
        info.max_residual = info.max_residual.max(scaled);
        if scaled > opts.residual_tol {
            return Err(Error::Solver(format!(
                "residual {scaled:e} exceeds {:e} for eigenvalue {} ({} runs, {} steps)",
                opts.residual_tol, pair.value, info.lanczos_runs, info.lanczos_steps
            )));
        }
        values.push(pair.value);
    }
    Ok((values, info))
}

fn backward_error(p: &Pencil, lambda: f64, u: &[f64], mu: &[f64]) -> f64 {
    let mut r = p.k.mul_vec(u);
    axpy(-lambda, mu, &mut r);
    dot(&r, &r).sqrt() / ((p.k_norm + lambda.abs() * p.m_norm) * dot(u, u).sqrt())
}

/// One Lanczos run for `(K - shift M)^{-1} M` restricted to the `M`-orthogonal
/// complement of `locked`. Returns the `want` smallest converged pairs.
fn lanczos_run(
    p: &Pencil,
    locked: &[Locked],
    want: usize,
    opts: &SolverOptions,
    run: u64,
    info: &mut SolveInfo,
) -> Result<Vec<Locked>> {
    let n = p.k.dim();
    let room = n - locked.len();
    let max_dim = opts.max_krylov.min(room);
    let want = want.min(room);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ run.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    info.lanczos_runs += 1;

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let fresh = |rng: &mut ChaCha8Rng, basis: &[Vec<f64>], mbasis: &[Vec<f64>]| -> Option<(Vec<f64>, Vec<f64>)> {
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            orthogonalize(&mut v, basis, mbasis, locked);
            let mv = p.m.mul_vec(&v);
            let norm = dot(&v, &mv).sqrt();
            if norm > 1e-8 {
                return Some((v.iter().map(|x| x / norm).collect(), mv.iter().map(|x| x / norm).collect()));
            }
        }
        None
    };

    let (q0, mq0) = fresh(&mut rng, &basis, &mbasis)
        .ok_or_else(|| Error::Solver("could not draw a Lanczos start vector".into()))?;
    basis.push(q0);
    mbasis.push(mq0);

    loop {
        let j = basis.len() - 1;
        info.lanczos_steps += 1;
        let mut w = p.solve(&mbasis[j]);
        let a = dot(&mbasis[j], &w);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, &basis, &mbasis, locked);
        orthogonalize(&mut w, &basis, &mbasis, locked);
        let mw = p.m.mul_vec(&w);
        let b = dot(&w, &mw).max(0.0).sqrt();
        alpha.push(a);

        let size = alpha.len();
        let check = size >= want && (size % 5 == 0 || size == max_dim || b <= 1e-10 * a.abs());
        if check {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta);
            // theta ascending; the largest theta are the smallest lambda.
            let top: Vec<usize> = (0..size).rev().take(want).collect();
            let converged = top.iter().all(|&i| {
                let last = s[(size - 1, i)];
                (b * last).abs() <= RITZ_TOL * theta[i].abs()
            });
            // A full basis returns its best pairs; the explicit residual
            // check in the caller decides whether they are good enough.
            if converged || size == max_dim {
                return Ok(top
                    .into_iter()
                    .map(|i| {
                        let mut u = vec![0.0; n];
                        let mut mu = vec![0.0; n];
                        for (c, (q, mq)) in basis.iter().zip(&mbasis).enumerate() {
                            axpy(s[(c, i)], q, &mut u);
                            axpy(s[(c, i)], mq, &mut mu);
                        }
                        let norm = dot(&u, &mu).sqrt();
                        u.iter_mut().for_each(|x| *x /= norm);
                        mu.iter_mut().for_each(|x| *x /= norm);
                        Locked {
                            value: p.shift + 1.0 / theta[i],
                            vec: u,
                            mvec: mu,
                        }
                    })
                    .collect());
            }
        }

        if b <= 1e-10 * a.abs() {
            // Invariant subspace: continue from a new direction.
            let (q, mq) = fresh(&mut rng, &basis, &mbasis)
                .ok_or_else(|| Error::Solver("Krylov space exhausted".into()))?;
            beta.push(0.0);
            basis.push(q);
            mbasis.push(mq);
        } else {
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
            mbasis.push(mw.iter().map(|x| x / b).collect());
        }
    }
}

/// Classical Gram-Schmidt in the `M` inner product against the basis and
/// the locked vectors.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], mbasis: &[Vec<f64>], locked: &[Locked]) {
    let coeffs: Vec<f64> = mbasis.iter().map(|mq| dot(mq, w)).collect();
    for (c, q) in coeffs.iter().zip(basis) {
        axpy(-c, q, w);
    }
    let coeffs: Vec<f64> = locked.iter().map(|l| dot(&l.mvec, w)).collect();
    for (c, l) in coeffs.iter().zip(locked) {
        axpy(-c, &l.vec, w);
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = alpha.len();
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = alpha[i];
        if i + 1 < n {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let s = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (theta, s)
}
