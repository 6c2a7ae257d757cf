//! Experiment runner for the Neumann eigenvalue laboratory: domain
//! generation, config-driven sweeps, CSV/JSON reports.

pub mod config;
pub mod domains;
pub mod sweep;

use neumann_core::boxspec::box_spectrum;
use neumann_core::fem::{neumann_spectrum, Spectrum};
use neumann_core::geometry::ConvexPolygon;
use neumann_core::mesh;

pub use config::ExperimentConfig;
pub use domains::{generate_domain, Domain, DomainSpec, GeneratorSpec, Instance};
pub use sweep::{run_sweep, SweepReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] neumann_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use neumann_core::Error as E;
        fn core(e: &E) -> i32 {
            match e {
                E::Solver(_) | E::Assembly(_) | E::Connectivity { .. } => EXIT_SOLVER,
                E::Replay { source, .. } => core(source),
                _ => EXIT_USAGE,
            }
        }
        match self {
            CliError::Core(e) => core(e),
            CliError::Config(_) | CliError::Io(_) => EXIT_USAGE,
        }
    }
}

/// Parses a domain given on the command line: a generator object such as
/// `{"kind":"rectangle","aspect":4}`, a polygon literal `[[x,y],...]`, or a
/// box literal `[a1,...,an]`.
pub fn parse_domain(text: &str) -> Result<Instance, CliError> {
    if let Ok(spec) = serde_json::from_str::<DomainSpec>(text) {
        return generate_domain(&spec, 0);
    }
    if let Ok(poly) = serde_json::from_str::<ConvexPolygon>(text) {
        return generate_domain(&DomainSpec::Polygon { vertices: poly }, 0);
    }
    if let Ok(sides) = serde_json::from_str::<Vec<f64>>(text) {
        return generate_domain(&DomainSpec::Box { sides }, 0);
    }
    Err(CliError::Config(format!("cannot parse domain {text:?}")))
}

/// `lambda(0..=m)`: closed form for boxes, FEM for polygons. `levels`
/// defaults to the smallest refinement with at least 5000 vertices.
pub fn spectrum_of(domain: &Domain, m: usize, levels: Option<usize>) -> Result<Spectrum, CliError> {
    Ok(match domain {
        Domain::Box(b) => box_spectrum(b, m)?,
        Domain::Polygon(p) => neumann_spectrum(p, m, levels.unwrap_or_else(|| mesh::default_levels(p)))?,
    })
}
