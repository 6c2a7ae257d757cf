//! Numerical laboratory for Neumann Laplacian eigenvalues of convex domains.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: convex polygons, set distances, Monte Carlo ball areas.
//! - [`partition`]: separated nets and Voronoi partitions of a convex domain.
//! - [`mesh`]: centroid-fan triangulation with uniform midpoint refinement.
//! - [`fem`]: P1 assembly and the generalized eigensolver producing a [`Spectrum`].
//! - [`boxspec`]: closed-form spectra of axis-aligned boxes in any dimension.
//! - [`bounds`]: evaluators that turn spectra and geometry into [`BoundReport`]s.

pub mod bounds;
pub mod boxspec;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod partition;

pub use bounds::BoundReport;
pub use boxspec::BoxDomain;
pub use error::{Error, Result};
pub use fem::Spectrum;
pub use geometry::{ConvexPolygon, Point, SubsetRegion};
pub use mesh::TriMesh;
pub use partition::{Net, VoronoiPartition};
