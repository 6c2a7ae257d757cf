//! P1 finite elements for the Neumann Laplacian and the resulting spectra.
//!
//! The Neumann condition is natural for the weak form, so assembly has no
//! boundary terms: the stiffness matrix has the constants in its kernel and
//! `lambda(0) = 0` up to round-off.

pub mod eigen;
pub mod sparse;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexPolygon;
use crate::mesh::{self, TriMesh};

pub use eigen::{SolveInfo, SolverOptions};
pub use sparse::SparseSymmetricMatrix;

/// Ascending eigenvalues `values[0] = 0 <= values[1] <= ...`; `lambda(k)` is
/// the k-th positive eigenvalue counted with multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub domain: String,
    /// Spatial dimension of the domain.
    pub n: usize,
    /// FEM vertex count, `None` for closed-form spectra.
    pub vertex_count: Option<usize>,
    pub values: Vec<f64>,
    /// Refinement level of the reported values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Absolute change of each value against the companion refinement level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl Spectrum {
    /// Closed-form spectrum with no discretization error.
    pub fn analytic(domain: impl Into<String>, n: usize, values: Vec<f64>) -> Self {
        Spectrum {
            domain: domain.into(),
            n,
            vertex_count: None,
            values,
            levels: None,
            deltas: None,
            method: Some("analytic".into()),
        }
    }

    /// `lambda(0) = 0`, `lambda(k)` the k-th positive eigenvalue.
    pub fn lambda(&self, k: usize) -> Result<f64> {
        self.values.get(k).copied().ok_or_else(|| {
            Error::Index(format!(
                "lambda({k}) requested but only {} values computed",
                self.values.len()
            ))
        })
    }

    /// Number of positive eigenvalues available.
    pub fn m(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Threshold below which a value counts as the constant mode.
    pub fn tol_zero(&self) -> f64 {
        self.values.get(1).map_or(0.0, |l1| 1e-8 * l1)
    }

    /// Relative discretization error proxy for `lambda(k)`; zero when analytic.
    pub fn rel_tol(&self, k: usize) -> f64 {
        match (&self.deltas, self.values.get(k)) {
            (Some(d), Some(&v)) if v > 0.0 => d.get(k).copied().unwrap_or(0.0) / v,
            _ => 0.0,
        }
    }

    /// Largest relative error proxy over `lambda(1..=k)`.
    pub fn max_rel_tol(&self, k: usize) -> f64 {
        (1..=k.min(self.m())).map(|i| self.rel_tol(i)).fold(0.0, f64::max)
    }

    pub fn is_analytic(&self) -> bool {
        self.vertex_count.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serializes")
    }
}

/// Element matrices of one P1 triangle: `(stiffness, mass)`.
pub fn element_matrices(p: [crate::geometry::Point; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let area = 0.5 * crate::geometry::cross(p[0], p[1], p[2]);
    // grad of barycentric i is the rotated opposite edge over 2*area.
    let g: Vec<(f64, f64)> = (0..3)
        .map(|i| {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            ((a.y - b.y) / (2.0 * area), (b.x - a.x) / (2.0 * area))
        })
        .collect();
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = area * (g[i].0 * g[j].0 + g[i].1 * g[j].1);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me)
}

/// Assembles the P1 stiffness and mass matrices of `mesh`.
pub fn assemble(mesh: &TriMesh) -> Result<(SparseSymmetricMatrix, SparseSymmetricMatrix)> {
    let total = mesh.area();
    let nv = mesh.vertices.len();
    let elements: Vec<_> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let area = mesh.triangle_area(t);
            if !(area >= 1e-14 * total) {
                return Err(Error::Assembly(format!(
                    "triangle {t} is degenerate (area {area:e}, domain area {total:e})"
                )));
            }
            Ok(element_matrices(mesh.triangle_points(t)))
        })
        .collect::<Result<_>>()?;
    let mut kt = Vec::with_capacity(elements.len() * 9);
    let mut mt = Vec::with_capacity(elements.len() * 9);
    for (tri, (ke, me)) in mesh.triangles.iter().zip(&elements) {
        for i in 0..3 {
            for j in 0..3 {
                kt.push((tri[i], tri[j], ke[i][j]));
                mt.push((tri[i], tri[j], me[i][j]));
            }
        }
    }
    Ok((
        SparseSymmetricMatrix::from_triplets(nv, kt),
        SparseSymmetricMatrix::from_triplets(nv, mt),
    ))
}

/// Components of the off-diagonal nonzero pattern whose rows sum to zero
/// (up to round-off), i.e. that annihilate their own constant vector.
fn null_components(a: &SparseSymmetricMatrix) -> usize {
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let n = a.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, j, v) in a.entries() {
        if i != j && v != 0.0 {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }
    let mut sums: std::collections::HashMap<usize, (f64, f64)> = std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let e = sums.entry(root).or_insert((0.0, 0.0));
        for (_, v) in a.row(i) {
            e.0 += v;
            e.1 += v.abs();
        }
    }
    sums.values().filter(|(s, abs)| s.abs() <= 1e-10 * abs).count()
}

/// The `m + 1` smallest eigenvalues of `K u = lambda M u`.
pub fn solve_smallest(
    stiffness: &SparseSymmetricMatrix,
    mass: &SparseSymmetricMatrix,
    m: usize,
) -> Result<Spectrum> {
    solve_smallest_with(stiffness, mass, m, &SolverOptions::default())
}

pub fn solve_smallest_with(
    stiffness: &SparseSymmetricMatrix,
    mass: &SparseSymmetricMatrix,
    m: usize,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    if m == 0 {
        return Err(Error::precondition("need m >= 1"));
    }
    let (values, info) = eigen::smallest_eigenvalues(stiffness, mass, m + 1, opts)?;
    // Connectivity is read off the sparsity graph of K: every component whose
    // rows sum to zero carries its own constant null mode.
    if null_components(stiffness) > 1 {
        return Err(Error::Connectivity { lambda1: values[1] });
    }
    if values[0].abs() > 1e-8 * values[1] {
        return Err(Error::Solver(format!(
            "pencil has no null mode: lambda_0 = {:e}, lambda_1 = {:e}",
            values[0], values[1]
        )));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Solver("eigenvalues are not sorted".into()));
    }
    Ok(Spectrum {
        domain: "pencil".into(),
        n: 2,
        vertex_count: Some(stiffness.dim()),
        values,
        levels: None,
        deltas: None,
        method: Some(info.method.into()),
    })
}

fn spectrum_at_level(poly: &ConvexPolygon, m: usize, levels: usize, opts: &SolverOptions) -> Result<Spectrum> {
    let mesh = mesh::refine(&mesh::triangulate(poly), levels);
    let (k, mm) = assemble(&mesh)?;
    let mut s = solve_smallest_with(&k, &mm, m, opts)?;
    s.levels = Some(levels);
    Ok(s)
}

/// Neumann spectrum of a convex polygon: fan, `levels` refinements, P1
/// assembly, generalized eigensolve. The same pipeline is run at a companion
/// level (one coarser, or one finer when the coarser mesh is too small) and
/// the per-eigenvalue differences are stored as the error proxy.
pub fn neumann_spectrum(poly: &ConvexPolygon, m: usize, levels: usize) -> Result<Spectrum> {
    neumann_spectrum_with(poly, m, levels, &SolverOptions::default())
}

pub fn neumann_spectrum_with(
    poly: &ConvexPolygon,
    m: usize,
    levels: usize,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    if m == 0 {
        return Err(Error::precondition("need m >= 1"));
    }
    let companion = if levels >= 1 && mesh::fan_vertex_count(poly.len(), levels - 1) >= 2 * (m + 1) {
        levels - 1
    } else {
        levels + 1
    };
    let (main, other) = rayon::join(
        || spectrum_at_level(poly, m, levels, opts),
        || spectrum_at_level(poly, m, companion, opts),
    );
    let mut main = main?;
    let other = other?;
    main.deltas = Some(
        main.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect(),
    );
    main.domain = format!("polygon/{}", poly.len());
    Ok(main)
}
