use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neumann_core::bounds::{self, BoundReport, FamilyVariant};
use neumann_core::geometry::{ConvexPolygon, Point, SubsetRegion};
use neumann_core::partition::{self, DEFAULT_GRID_RESOLUTION};
use neumann_core::fem::neumann_spectrum;
use neumann_core::mesh;
use neumann_cli::config::ExperimentConfig;
use neumann_cli::sweep::{run_sweep, write_atomic, write_outputs};
use neumann_cli::{parse_domain, spectrum_of, CliError, Domain, Instance, EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Parser)]
#[command(name = "neumann-lab", version, about = "Neumann Laplacian spectra and eigenvalue inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of one domain as JSON.
    Spectrum {
        #[command(flatten)]
        domain: DomainArg,
        /// Number of positive eigenvalues.
        #[arg(short, long, default_value_t = 5)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// One evaluator on explicit inputs.
    Bound {
        #[command(subcommand)]
        which: BoundCmd,
    },
    /// Step-by-step replay of the net/Voronoi argument on a polygon.
    Replay {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run a full experiment config.
    Sweep {
        /// Config file; the bundled default when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the CSV and JSON reports.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the FEM refinement level.
        #[arg(long)]
        levels: Option<usize>,
        /// Override the Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Args)]
struct DomainArg {
    /// Generator object, polygon literal `[[x,y],...]` or box literal `[a1,...]`.
    #[arg(long)]
    domain: String,
}

#[derive(Args)]
struct Common {
    /// FEM refinement levels (default: at least 5000 vertices).
    #[arg(long)]
    levels: Option<usize>,
    /// Write the JSON report into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundCmd {
    PayneWeinberger {
        #[command(flatten)]
        domain: DomainArg,
        #[command(flatten)]
        common: Common,
    },
    Kroger {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    Universal {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Partition bound for the Voronoi partition of the given centers.
    Partition {
        #[command(flatten)]
        domain: DomainArg,
        /// `[[x,y],...]`
        #[arg(long)]
        centers: String,
        #[command(flatten)]
        common: Common,
    },
    BishopGromov {
        #[command(flatten)]
        domain: DomainArg,
        /// `[x,y]`
        #[arg(long)]
        x: String,
        #[arg(long)]
        r: f64,
        #[arg(long = "big-r")]
        big_r: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    Cgy {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        /// JSON list of subset regions.
        #[arg(long)]
        family: String,
        #[command(flatten)]
        common: Common,
    },
    Borel {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        family: String,
        /// Use `k` subsets instead of `k + 1`.
        #[arg(long)]
        reduced: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Separation of the first `k + 1` farthest-point centers against `lambda_k`.
    SeparatedNet {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn polygon_of(inst: &Instance) -> Result<&ConvexPolygon, CliError> {
    match &inst.domain {
        Domain::Polygon(p) => Ok(p),
        Domain::Box(_) => Err(CliError::Config(format!("{} is not a polygon", inst.id))),
    }
}

fn json_arg<T: serde::de::DeserializeOwned>(name: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad --{name}: {e}")))
}

fn emit(json: &str, out: Option<&Path>, file: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            let path = dir.join(file);
            write_atomic(&path, json)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{json}").and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(CliError::Io(e.to_string())),
                _ => {}
            }
        }
    }
    Ok(())
}

fn diameter_of(inst: &Instance) -> f64 {
    match &inst.domain {
        Domain::Polygon(p) => p.diameter(),
        Domain::Box(b) => neumann_core::boxspec::box_diameter_volume(b).0,
    }
}

fn bound(cmd: BoundCmd) -> Result<i32, CliError> {
    let (report, common): (BoundReport, Common) = match cmd {
        BoundCmd::PayneWeinberger { domain, common } => {
            let inst = parse_domain(&domain.domain)?;
            let s = spectrum_of(&inst.domain, 1, common.levels)?;
            (bounds::payne_weinberger_bound(&s, diameter_of(&inst))?, common)
        }
        BoundCmd::Kroger { domain, k, common } => {
            let inst = parse_domain(&domain.domain)?;
            let s = spectrum_of(&inst.domain, k.max(1), common.levels)?;
            (bounds::kroger_ratio(&s, diameter_of(&inst), k)?, common)
        }
        BoundCmd::Universal { domain, k, common } => {
            let inst = parse_domain(&domain.domain)?;
            let s = spectrum_of(&inst.domain, k + 1, common.levels)?;
            (bounds::universal_ratio_check(&s, k)?, common)
        }
        BoundCmd::Partition { domain, centers, common } => {
            let inst = parse_domain(&domain.domain)?;
            let poly = polygon_of(&inst)?;
            let centers: Vec<Point> = json_arg("centers", &centers)?;
            let vor = partition::voronoi_partition(poly, &centers)?;
            let levels = common.levels.unwrap_or_else(|| mesh::default_levels(poly));
            let parent = neumann_spectrum(poly, centers.len(), levels)?;
            let cells = vor
                .cells
                .iter()
                .map(|c| neumann_spectrum(c, 1, levels))
                .collect::<Result<Vec<_>, _>>()?;
            (bounds::partition_lower_bound_check(&parent, &cells, centers.len() - 1)?, common)
        }
        BoundCmd::BishopGromov {
            domain,
            x,
            r,
            big_r,
            samples,
            seed,
            common,
        } => {
            let inst = parse_domain(&domain.domain)?;
            let x: Point = json_arg("x", &x)?;
            (bounds::bishop_gromov_check(polygon_of(&inst)?, x, r, big_r, samples, seed)?, common)
        }
        BoundCmd::Cgy { domain, k, family, common } => {
            let inst = parse_domain(&domain.domain)?;
            let poly = polygon_of(&inst)?;
            let fam: Vec<SubsetRegion> = json_arg("family", &family)?;
            let s = spectrum_of(&inst.domain, k.max(1), common.levels)?;
            (bounds::cgy_bound(s.lambda(k)?, &fam, poly.area(), k)?, common)
        }
        BoundCmd::Borel {
            domain,
            k,
            family,
            reduced,
            common,
        } => {
            let inst = parse_domain(&domain.domain)?;
            let poly = polygon_of(&inst)?;
            let fam: Vec<SubsetRegion> = json_arg("family", &family)?;
            let s = spectrum_of(&inst.domain, k.max(1), common.levels)?;
            let variant = if reduced { FamilyVariant::Reduced } else { FamilyVariant::Full };
            (bounds::borel_family_bound(s.lambda(k)?, &fam, poly.area(), k, 2, variant)?, common)
        }
        BoundCmd::SeparatedNet { domain, k, common } => {
            let inst = parse_domain(&domain.domain)?;
            let poly = polygon_of(&inst)?;
            let start = poly.vertices()[0];
            let centers = partition::farthest_point_centers(poly, k + 1, start, DEFAULT_GRID_RESOLUTION)?;
            let mut sep = f64::INFINITY;
            for (i, a) in centers.iter().enumerate() {
                for b in &centers[i + 1..] {
                    sep = sep.min(a.dist(*b));
                }
            }
            let s = spectrum_of(&inst.domain, k.max(1), common.levels)?;
            (bounds::separated_net_constant(sep, s.lambda(k)?, 2)?, common)
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    emit(&json, common.out.as_deref(), "bound.json")?;
    Ok(if report.ok() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Spectrum { domain, m, common } => {
            let inst = parse_domain(&domain.domain)?;
            let s = spectrum_of(&inst.domain, m, common.levels)?;
            emit(&serde_json::to_string_pretty(&s).expect("spectrum serializes"), common.out.as_deref(), "spectrum.json")?;
            Ok(EXIT_OK)
        }
        Command::Bound { which } => bound(which),
        Command::Replay { domain, k, c, common } => {
            let inst = parse_domain(&domain.domain)?;
            let poly = polygon_of(&inst)?;
            let levels = common.levels.unwrap_or_else(|| mesh::default_levels(poly));
            let rep = bounds::replay_universal_proof(poly, k, c, levels)?;
            emit(&rep.to_json(), common.out.as_deref(), "replay.json")?;
            for l in &rep.links {
                eprintln!("link {} {:<24} {}", l.index, l.name, if l.pass { "pass" } else { "fail" });
            }
            // Links (4)-(6) are proven whenever the cardinality condition holds.
            let proven_failed = rep.cardinality_holds() && (4..=6).any(|i| !rep.link(i).pass);
            Ok(if proven_failed { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Command::Sweep {
            config,
            out,
            levels,
            seed,
            jobs,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::bundled(),
            };
            if let Some(l) = levels {
                cfg.fem_levels = l;
            }
            if let Some(s) = seed {
                cfg.monte_carlo.seed = s;
            }
            let report = run_sweep(&cfg, jobs)?;
            let (csv, json) = write_outputs(&report, &cfg, &out)?;
            eprintln!(
                "{} rows, {} failed, {} errors; wrote {} and {}",
                report.rows.len(),
                report.rows.iter().filter(|r| r.failed()).count(),
                report.rows.iter().filter(|r| r.error.is_some()).count(),
                csv.display(),
                json.display()
            );
            for f in &report.flags {
                eprintln!("flag: {f}");
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
