//! Closed-form Neumann spectra of axis-aligned boxes.
//!
//! The eigenvalues of `prod [0, a_i]` are `sum_i (pi p_i / a_i)^2` over
//! multi-indices `p` of non-negative integers. The `m + 1` smallest are
//! extracted by a best-first walk over multi-indices.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Spectrum;

/// Axis-aligned box `prod [0, a_i]`. Serializes as the JSON array of sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BoxDomain {
    sides: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BoxDomain {
    type Error = Error;
    fn try_from(sides: Vec<f64>) -> Result<Self> {
        BoxDomain::new(sides)
    }
}

impl From<BoxDomain> for Vec<f64> {
    fn from(b: BoxDomain) -> Self {
        b.sides
    }
}

impl BoxDomain {
    pub fn new(sides: Vec<f64>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::geometry("box needs at least one side"));
        }
        if let Some(s) = sides.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::geometry(format!("box side must be positive and finite, got {s}")));
        }
        Ok(BoxDomain { sides })
    }

    pub fn cube(n: usize, side: f64) -> Result<Self> {
        Self::new(vec![side; n])
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    /// Eigenvalue of one multi-index, summed in axis order.
    pub fn mode_value(&self, index: &[u32]) -> f64 {
        index
            .iter()
            .zip(&self.sides)
            .map(|(&p, &a)| {
                let w = PI * p as f64 / a;
                w * w
            })
            .sum()
    }

    pub fn label(&self) -> String {
        let sides: Vec<String> = self.sides.iter().map(|s| format!("{s}")).collect();
        format!("box[{}]", sides.join(","))
    }
}

/// `(Diam, vol)`: `sqrt(sum a_i^2)` and `prod a_i`.
pub fn box_diameter_volume(b: &BoxDomain) -> (f64, f64) {
    let diam = b.sides.iter().map(|a| a * a).sum::<f64>().sqrt();
    let vol = b.sides.iter().product();
    (diam, vol)
}

#[derive(PartialEq)]
struct Mode {
    value: f64,
    index: Vec<u32>,
}

impl Eq for Mode {}

impl Ord for Mode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialOrd for Mode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `m + 1` smallest modes (value and multi-index) in ascending order;
/// equal values are ordered by lexicographic multi-index.
pub fn box_modes(b: &BoxDomain, m: usize) -> Vec<(f64, Vec<u32>)> {
    let n = b.dim();
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let zero = vec![0u32; n];
    seen.insert(zero.clone());
    heap.push(Reverse(Mode {
        value: 0.0,
        index: zero,
    }));
    let mut out = Vec::with_capacity(m + 1);
    while out.len() <= m {
        let Reverse(mode) = heap.pop().expect("mode lattice is infinite");
        for axis in 0..n {
            let mut next = mode.index.clone();
            next[axis] += 1;
            if seen.insert(next.clone()) {
                heap.push(Reverse(Mode {
                    value: b.mode_value(&next),
                    index: next,
                }));
            }
        }
        out.push((mode.value, mode.index));
    }
    out
}

/// Closed-form spectrum `lambda(0..=m)` of a box.
pub fn box_spectrum(b: &BoxDomain, m: usize) -> Result<Spectrum> {
    if m == 0 {
        return Err(Error::precondition("need m >= 1"));
    }
    let values = box_modes(b, m).into_iter().map(|(v, _)| v).collect();
    Ok(Spectrum::analytic(b.label(), b.dim(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PI2: f64 = PI * PI;

    #[test]
    fn interval() {
        let s = box_spectrum(&BoxDomain::new(vec![1.0]).unwrap(), 2).unwrap();
        assert_eq!(s.values, vec![0.0, PI2, 4.0 * PI2]);
    }

    #[test]
    fn rectangle_one_by_two() {
        let s = box_spectrum(&BoxDomain::new(vec![1.0, 2.0]).unwrap(), 4).unwrap();
        let expected = [0.0, PI2 / 4.0, PI2, PI2, 1.25 * PI2];
        for (a, b) in s.values.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn cube_triple_multiplicity_and_tie_order() {
        let b = BoxDomain::cube(3, 1.0).unwrap();
        let modes = box_modes(&b, 3);
        assert_eq!(modes.iter().map(|m| m.0).collect::<Vec<_>>(), vec![0.0, PI2, PI2, PI2]);
        assert_eq!(modes[1].1, vec![0, 0, 1]);
        assert_eq!(modes[3].1, vec![1, 0, 0]);
    }

    #[test]
    fn diameter_volume() {
        assert_eq!(box_diameter_volume(&BoxDomain::new(vec![3.0, 4.0]).unwrap()), (5.0, 12.0));
        let (d, v) = box_diameter_volume(&BoxDomain::new(vec![1.0, 1.0]).unwrap());
        assert_eq!((d, v), (2f64.sqrt(), 1.0));
        for n in 1..8 {
            let (d, v) = box_diameter_volume(&BoxDomain::cube(n, 1.0).unwrap());
            assert_eq!((d, v), ((n as f64).sqrt(), 1.0));
        }
    }

    #[test]
    fn invalid_boxes() {
        assert!(BoxDomain::new(vec![]).is_err());
        assert!(BoxDomain::new(vec![1.0, 0.0]).is_err());
        assert!(serde_json::from_str::<BoxDomain>("[1.0, -2.0]").is_err());
        let b: BoxDomain = serde_json::from_str("[1, 2.5]").unwrap();
        assert_eq!(b.sides(), &[1.0, 2.5]);
    }
}
