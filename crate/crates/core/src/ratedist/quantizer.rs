//! Partition of the alphabet into cells of small diameter, with one
//! representative per cell, extended coordinate-wise to configurations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spaces::{greedy_cover, Config, MetricAlphabet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub eps: f64,
    /// Cell index of each symbol.
    pub cell_of: Vec<usize>,
    /// Representative symbol of each cell; it belongs to its own cell.
    pub reps: Vec<usize>,
}

/// Greedy partition of `alphabet` into cells of diameter `< eps`, scanning
/// symbols in index order. The first symbol of a cell represents it, so
/// `d(a, P(a)) < eps` for every symbol and `P∘P = P`.
pub fn partition_map(alphabet: &MetricAlphabet, eps: f64) -> Result<Quantizer> {
    if !(eps > 0.0) {
        return invalid("mesh must be positive");
    }
    let cells = greedy_cover(alphabet.size(), |a, b| alphabet.dist(a, b), eps);
    let mut cell_of = vec![0; alphabet.size()];
    for (i, cell) in cells.iter().enumerate() {
        for &a in cell {
            cell_of[a] = i;
        }
    }
    Ok(Quantizer { eps, cell_of, reps: cells.iter().map(|c| c[0]).collect() })
}

impl Quantizer {
    pub fn apply(&self, a: usize) -> usize {
        self.reps[self.cell_of[a]]
    }

    pub fn apply_config(&self, x: &[usize]) -> Config {
        x.iter().map(|&a| self.apply(a)).collect()
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.reps.len()];
        for (a, &c) in self.cell_of.iter().enumerate() {
            out[c].push(a);
        }
        out
    }

    pub fn max_cell_diameter(&self, alphabet: &MetricAlphabet) -> f64 {
        self.cells()
            .iter()
            .flat_map(|c| c.iter().flat_map(move |&a| c.iter().map(move |&b| (a, b))))
            .map(|(a, b)| alphabet.dist(a, b))
            .fold(0.0, f64::max)
    }
}
