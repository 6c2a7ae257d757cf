//! Symmetric sparse storage, reverse Cuthill-McKee ordering and an
//! envelope (skyline) Cholesky factorization.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric matrix in compressed-row form with both triangles stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Sums duplicate `(row, col, value)` triplets. Each triplet is mirrored
    /// unless it lies on the diagonal, so callers pass one triangle only.
    pub fn from_lower_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
        for &(r, c, v) in triplets {
            all.push((r, c, v));
            if r != c {
                all.push((c, r, v));
            }
        }
        Self::from_triplets(dim, all)
    }

    /// Builds from full (both-triangle) triplets, summing duplicates.
    pub fn from_triplets(dim: usize, mut all: Vec<(usize, usize, f64)>) -> Self {
        all.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(all.len());
        let mut vals: Vec<f64> = Vec::with_capacity(all.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in all {
            assert!(r < dim && c < dim, "triplet index out of range");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymmetricMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Coordinate-format view of every stored nonzero.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `self + alpha * other` (same dimension).
    pub fn add_scaled(&self, alpha: f64, other: &SparseSymmetricMatrix) -> SparseSymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        let all = self
            .entries()
            .chain(other.entries().map(|(i, j, v)| (i, j, alpha * v)))
            .collect();
        Self::from_triplets(self.dim, all)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries().all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            d[(i, j)] = v;
        }
        d
    }
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseSymmetricMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Last node of the deepest BFS level, iterated until eccentricity stops growing.
fn pseudo_peripheral(a: &SparseSymmetricMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    loop {
        let (far, depth) = bfs_far(a, node, degree);
        if depth <= ecc {
            return node;
        }
        ecc = depth;
        node = far;
    }
}

fn bfs_far(a: &SparseSymmetricMatrix, start: usize, degree: &[usize]) -> (usize, usize) {
    let mut level = vec![usize::MAX; a.dim()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0usize);
    while let Some(v) = queue.pop_front() {
        let l = level[v];
        if l > best.1 || (l == best.1 && degree[v] < degree[best.0]) {
            best = (v, l);
        }
        for (j, _) in a.row(v) {
            if level[j] == usize::MAX {
                level[j] = l + 1;
                queue.push_back(j);
            }
        }
    }
    best
}

/// Lower-triangular Cholesky factor stored by rows over the envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a = L L^T` after a reverse Cuthill-McKee reordering.
    pub fn factor(a: &SparseSymmetricMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.entries() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; row_start[n]];
        for (i, j, v) in a.entries() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                data[row_start[pi] + pj - first[pi]] = v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(row_start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &done[row_start[j]..row_start[j + 1]];
                let dot: f64 = row_i[lo - fi..j - fi]
                    .iter()
                    .zip(&row_j[lo - fj..j - fj])
                    .map(|(x, y)| x * y)
                    .sum();
                let ljj = row_j[j - fj];
                row_i[j - fi] = (row_i[j - fi] - dot) / ljj;
            }
            let d = row_i[i - fi] - row_i[..i - fi].iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::Solver(format!(
                    "shifted matrix is not positive definite (pivot {i}: {d:e})"
                )));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            row_start,
            data,
        })
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solves `a x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (l, v) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
