//! Executes the net/Voronoi argument for `lambda_{k+1} <~ n^4 lambda_k` on a
//! concrete polygon and records every link of the chain with its numbers.
//!
//! 1. `lambda_{k+1}` by FEM
//! 2. `R = c n^2 / sqrt(lambda_{k+1})`
//! 3. maximal `R`-separated net, cardinality `l + 1` with `l <= k - 1`
//! 4. Voronoi cells with `Diam <= 2R`
//! 5. per-cell `lambda_1 >= pi^2 / (2R)^2`
//! 6. `lambda_k >= min_a lambda_1(cell_a)`
//! 7. chain constant `lambda_{k+1} / (n^4 lambda_k) <= 4 c^2 / pi^2`

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, Spectrum};
use crate::geometry::{ConvexPolygon, Point};
use crate::partition::{self, PartitionRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayLink {
    pub index: usize,
    pub name: String,
    pub pass: bool,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub domain: ConvexPolygon,
    pub k: usize,
    pub c: f64,
    pub n: usize,
    pub fem_levels: usize,
    pub lambda_k: f64,
    pub lambda_k_plus_1: f64,
    pub radius: f64,
    pub links: Vec<ReplayLink>,
    pub partition: PartitionRecord,
    pub cell_lambda1: Vec<f64>,
    pub chain_constant: f64,
}

impl ReplayReport {
    pub fn link(&self, index: usize) -> &ReplayLink {
        &self.links[index - 1]
    }

    /// Whether the cardinality condition of link 3 held.
    pub fn cardinality_holds(&self) -> bool {
        self.link(3).pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("replay report serializes")
    }
}

fn link(index: usize, name: &str, pass: bool, values: &[(&str, f64)], detail: impl Into<String>) -> ReplayLink {
    ReplayLink {
        index,
        name: name.to_string(),
        pass,
        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        detail: detail.into(),
    }
}

fn at(link: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Replay {
        link,
        source: Box::new(e),
    }
}

/// Lowest `(y, x)` vertex; the deterministic seed of the net.
fn net_start(poly: &ConvexPolygon) -> Point {
    *poly
        .vertices()
        .iter()
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .expect("polygon has vertices")
}

pub fn replay_universal_proof(poly: &ConvexPolygon, k: usize, c: f64, fem_levels: usize) -> Result<ReplayReport> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::precondition(format!("c must be positive, got {c}")));
    }
    let n = 2usize;
    let n2 = (n * n) as f64;
    let mut links = Vec::with_capacity(7);

    // (1)
    let spec: Spectrum = fem::neumann_spectrum(poly, k + 1, fem_levels).map_err(at(1))?;
    let lambda_k = spec.lambda(k).map_err(at(1))?;
    let lambda_k1 = spec.lambda(k + 1).map_err(at(1))?;
    let parent_tol = spec.rel_tol(k);
    links.push(link(
        1,
        "lambda_k_plus_1",
        true,
        &[
            ("lambda_k", lambda_k),
            ("lambda_k_plus_1", lambda_k1),
            ("fem_tol", parent_tol),
            ("vertex_count", spec.vertex_count.unwrap_or(0) as f64),
        ],
        "",
    ));

    // (2)
    let radius = c * n2 / lambda_k1.sqrt();
    let diam = poly.diameter();
    links.push(link(2, "radius", true, &[("R", radius), ("diameter", diam)], ""));

    // (3)
    let net = partition::greedy_maximal_net(poly, radius, net_start(poly)).map_err(at(3))?;
    let l = net.len() - 1;
    let card_ok = l + 1 <= k;
    links.push(link(
        3,
        "net_cardinality",
        card_ok,
        &[
            ("net_size", net.len() as f64),
            ("l", l as f64),
            ("k_minus_1", (k - 1) as f64),
            ("min_separation", net.min_separation()),
            ("covering_radius", net.covering_radius),
        ],
        if card_ok {
            String::new()
        } else {
            format!("maximal R-net has {} points, more than k = {k}", net.len())
        },
    ));

    // (4)
    let vor = partition::voronoi_partition(poly, &net.centers).map_err(at(4))?;
    let diams: Vec<f64> = vor.cells.iter().map(ConvexPolygon::diameter).collect();
    let max_diam = diams.iter().copied().fold(0.0, f64::max);
    links.push(link(
        4,
        "cell_diameter",
        max_diam <= 2.0 * radius,
        &[("max_cell_diameter", max_diam), ("two_R", 2.0 * radius)],
        "",
    ));

    // (5)
    let cell_spectra: Vec<Spectrum> = vor
        .cells
        .par_iter()
        .map(|cell| fem::neumann_spectrum(cell, 1, fem_levels))
        .collect::<Result<_>>()
        .map_err(at(5))?;
    let cell_lambda1: Vec<f64> = cell_spectra.iter().map(|s| s.values[1]).collect();
    let pw_floor = PI * PI / (4.0 * radius * radius);
    let mut cell_tol = 0.0f64;
    let mut pw_ok = true;
    for s in &cell_spectra {
        let t = s.rel_tol(1);
        cell_tol = cell_tol.max(t);
        pw_ok &= s.values[1] >= pw_floor * (1.0 - 2.0 * t);
    }
    let min_cell = cell_lambda1.iter().copied().fold(f64::INFINITY, f64::min);
    links.push(link(
        5,
        "cell_payne_weinberger",
        pw_ok,
        &[
            ("min_cell_lambda1", min_cell),
            ("pi2_over_4R2", pw_floor),
            ("fem_tol", cell_tol),
        ],
        "",
    ));

    // (6)
    let tol = parent_tol.max(cell_tol);
    let part_ok = lambda_k >= min_cell * (1.0 - 2.0 * tol);
    links.push(link(
        6,
        "partition_lower_bound",
        part_ok,
        &[("lambda_k", lambda_k), ("min_cell_lambda1", min_cell), ("fem_tol", tol)],
        if part_ok || card_ok {
            String::new()
        } else {
            "expected: the partition has more than k cells".to_string()
        },
    ));

    // (7)
    let chain_constant = lambda_k1 / (n2 * n2 * lambda_k);
    let chain_bound = 4.0 * c * c / (PI * PI);
    links.push(link(
        7,
        "chain_constant",
        chain_constant <= chain_bound * (1.0 + 2.0 * tol),
        &[("chain_constant", chain_constant), ("four_c2_over_pi2", chain_bound)],
        "",
    ));

    Ok(ReplayReport {
        domain: poly.clone(),
        k,
        c,
        n,
        fem_levels,
        lambda_k,
        lambda_k_plus_1: lambda_k1,
        radius,
        partition: PartitionRecord::new(&net, &vor),
        cell_lambda1,
        chain_constant,
        links,
    })
}
