//! Finite tilings of a window: translates `S_j·c` of finitely many shapes.
//!
//! Only translates lying wholly inside the window are stored. Window cells
//! not covered by any stored translate form the boundary remainder.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{Elem, FiniteSubset, GroupModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteTiling {
    pub shapes: Vec<FiniteSubset>,
    /// `centers[j]` lists `c` with `shapes[j]·c` a tile.
    pub centers: Vec<Vec<Elem>>,
    pub window: FiniteSubset,
}

impl FiniteTiling {
    pub fn tile(&self, group: &GroupModel, j: usize, c: &Elem) -> FiniteSubset {
        self.shapes[j].right_translate(group, c)
    }

    /// Union of all tiles.
    pub fn covered(&self, group: &GroupModel) -> FiniteSubset {
        let mut out = BTreeSet::new();
        for (j, cs) in self.centers.iter().enumerate() {
            for c in cs {
                out.extend(self.tile(group, j, c).iter().cloned());
            }
        }
        out.into_iter().collect()
    }

    /// Fraction of the window not covered by tiles inside it.
    pub fn remainder_fraction(&self, group: &GroupModel) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        let covered = self.covered(group);
        let rest = self.window.iter().filter(|w| !covered.contains(w)).count();
        rest as f64 / self.window.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tiling serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    fn check_shape(&self, j: usize) -> Result<()> {
        if j >= self.shapes.len() {
            return invalid(format!("shape index {j} out of range ({} shapes)", self.shapes.len()));
        }
        Ok(())
    }
}

fn lattice_bounds(window: &FiniteSubset) -> Option<(Vec<i64>, Vec<i64>)> {
    let first = window.first()?;
    let mut lo = first.0.clone();
    let mut hi = first.0.clone();
    for e in window {
        for i in 0..lo.len() {
            lo[i] = lo[i].min(e.0[i]);
            hi[i] = hi[i].max(e.0[i]);
        }
    }
    Some((lo, hi))
}

/// Grid tiling of a `Z^d` window by boxes of side `side`, phase 0.
pub fn tile_boxes(group: &GroupModel, window: &FiniteSubset, side: usize) -> Result<FiniteTiling> {
    let d = group
        .lattice_dim()
        .ok_or_else(|| Error::UnsupportedGroup { group: group.name(), what: "box tiling" })?;
    tile_boxes_phased(group, window, side, &Elem(vec![0; d]))
}

/// Grid tiling with centers on `phase + side·Z^d`.
pub fn tile_boxes_phased(
    group: &GroupModel,
    window: &FiniteSubset,
    side: usize,
    phase: &Elem,
) -> Result<FiniteTiling> {
    let d = group
        .lattice_dim()
        .ok_or_else(|| Error::UnsupportedGroup { group: group.name(), what: "box tiling" })?;
    if side == 0 {
        return invalid("shape side must be >= 1");
    }
    group.check_elem(phase)?;
    let shape = FiniteSubset::lattice_box(&vec![0; d], &vec![side; d]);
    let mut centers = Vec::new();
    if let Some((lo, hi)) = lattice_bounds(window) {
        let s = side as i64;
        // first grid point at or below lo on each axis
        let start: Vec<i64> =
            lo.iter().zip(&phase.0).map(|(&l, &p)| p + (l - p).div_euclid(s) * s).collect();
        let counts: Vec<usize> =
            start.iter().zip(&hi).map(|(&st, &h)| ((h - st) / s + 1) as usize).collect();
        let grid = FiniteSubset::lattice_box(&vec![0; d], &counts);
        for k in &grid {
            let c = Elem(start.iter().zip(&k.0).map(|(st, ki)| st + ki * s).collect());
            if shape.right_translate(group, &c).is_subset(window) {
                centers.push(c);
            }
        }
    }
    Ok(FiniteTiling { shapes: vec![shape], centers: vec![centers], window: window.clone() })
}

/// Randomized first-fit tiler for arbitrary groups.
///
/// Visits window cells in a seeded random order; an uncovered cell `w` gets
/// the first shape `S_j` and first `s in S_j` for which `S_j·(s^{-1}w)` lies
/// inside the window and avoids all placed tiles. Cells admitting no tile
/// stay in the remainder. Shapes without any placed tile keep an empty
/// center list.
pub fn greedy_tiling(
    group: &GroupModel,
    window: &FiniteSubset,
    shapes: &[FiniteSubset],
    seed: u64,
) -> Result<FiniteTiling> {
    if shapes.is_empty() || shapes.iter().any(|s| s.is_empty()) {
        return invalid("greedy tiling needs nonempty shapes");
    }
    let mut order = window.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut covered: BTreeSet<Elem> = BTreeSet::new();
    let mut centers = vec![Vec::new(); shapes.len()];
    for w in &order {
        if covered.contains(w) {
            continue;
        }
        'shapes: for (j, shape) in shapes.iter().enumerate() {
            for s in shape {
                let c = group.mul(&group.inv(s), w);
                let tile = shape.right_translate(group, &c);
                if tile.is_subset(window) && tile.iter().all(|t| !covered.contains(t)) {
                    covered.extend(tile.iter().cloned());
                    centers[j].push(c);
                    break 'shapes;
                }
            }
        }
    }
    for cs in &mut centers {
        cs.sort();
    }
    Ok(FiniteTiling { shapes: shapes.to_vec(), centers, window: window.clone() })
}

/// `(1/|F|) · #{c in C_j : S_j·c ⊆ F} · |S_j|`.
pub fn density(group: &GroupModel, t: &FiniteTiling, f: &FiniteSubset, j: usize) -> Result<f64> {
    t.check_shape(j)?;
    if f.is_empty() {
        return invalid("density needs a nonempty window");
    }
    Ok(tiles_inside(group, t, f, j) as f64 * t.shapes[j].len() as f64 / f.len() as f64)
}

fn tiles_inside(group: &GroupModel, t: &FiniteTiling, f: &FiniteSubset, j: usize) -> usize {
    t.centers[j].iter().filter(|c| t.tile(group, j, c).is_subset(f)).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub window_size: usize,
    pub per_shape: Vec<f64>,
    pub total: f64,
}

pub fn density_report(group: &GroupModel, t: &FiniteTiling, f: &FiniteSubset) -> Result<DensityReport> {
    let per_shape =
        (0..t.shapes.len()).map(|j| density(group, t, f, j)).collect::<Result<Vec<_>>>()?;
    let total = per_shape.iter().sum();
    Ok(DensityReport { window_size: f.len(), per_shape, total })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    /// Largest count over the `ceil((1-eps)|H|)` cells with the smallest counts.
    pub max_mult: usize,
    /// Fraction of `H` whose count is within `threshold`.
    pub covered_fraction: f64,
    /// `(1+eps) · rho(S_j, H) · |H| / |S_j|`.
    pub threshold: f64,
}

/// Multiplicity with which the sets `C_j g^{-1} ∩ H`, `g in H`, cover each
/// `h in H`: `m(h) = #{g in H : h·g in C_j}`.
///
/// The tiling must contain every tile meeting `H·H` for the counts to see all
/// relevant centers; only stored centers are counted.
pub fn covering_multiplicity(
    group: &GroupModel,
    t: &FiniteTiling,
    h_set: &FiniteSubset,
    j: usize,
    eps: f64,
) -> Result<Multiplicity> {
    t.check_shape(j)?;
    if h_set.is_empty() {
        return invalid("covering multiplicity needs a nonempty H");
    }
    if !(0.0..1.0).contains(&eps) {
        return invalid("eps must lie in [0, 1)");
    }
    let centers: BTreeSet<&Elem> = t.centers[j].iter().collect();
    let mut counts: Vec<usize> = h_set
        .iter()
        .map(|h| h_set.iter().filter(|g| centers.contains(&group.mul(h, g))).count())
        .collect();
    // rho(S_j,H)·|H|/|S_j| is exactly the number of whole tiles inside H
    let threshold = (1.0 + eps) * tiles_inside(group, t, h_set, j) as f64;
    let ok = counts.iter().filter(|&&m| m as f64 <= threshold).count();
    counts.sort_unstable();
    let keep = (((1.0 - eps) * counts.len() as f64).ceil() as usize).clamp(1, counts.len());
    Ok(Multiplicity {
        max_mult: counts[keep - 1],
        covered_fraction: ok as f64 / counts.len() as f64,
        threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyShape { shape: usize },
    MissingIdentity { shape: usize },
    ShapesAreTranslates { a: usize, b: usize },
    CenterListMismatch { shapes: usize, center_lists: usize },
    OutsideWindow { shape: usize, center: Elem },
    Overlap { cell: Elem, first: (usize, Elem), second: (usize, Elem) },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub remainder_fraction: f64,
}

/// Checks disjointness, identity in each shape, shapes pairwise non-translates
/// and tiles inside the window. Violations are collected, not raised.
pub fn validate(group: &GroupModel, t: &FiniteTiling) -> TilingReport {
    let mut violations = Vec::new();
    let e = group.identity();
    if t.shapes.len() != t.centers.len() {
        violations.push(Violation::CenterListMismatch {
            shapes: t.shapes.len(),
            center_lists: t.centers.len(),
        });
    }
    for (j, s) in t.shapes.iter().enumerate() {
        if s.is_empty() {
            violations.push(Violation::EmptyShape { shape: j });
        } else if !s.contains(&e) {
            violations.push(Violation::MissingIdentity { shape: j });
        }
    }
    for a in 0..t.shapes.len() {
        for b in a + 1..t.shapes.len() {
            if is_translate(group, &t.shapes[a], &t.shapes[b]) {
                violations.push(Violation::ShapesAreTranslates { a, b });
            }
        }
    }
    let mut owner: BTreeMap<Elem, (usize, Elem)> = BTreeMap::new();
    for (j, cs) in t.centers.iter().enumerate().take(t.shapes.len()) {
        for c in cs {
            let tile = t.tile(group, j, c);
            if !tile.is_subset(&t.window) {
                violations.push(Violation::OutsideWindow { shape: j, center: c.clone() });
            }
            for cell in &tile {
                if let Some(prev) = owner.get(cell) {
                    violations.push(Violation::Overlap {
                        cell: cell.clone(),
                        first: prev.clone(),
                        second: (j, c.clone()),
                    });
                } else {
                    owner.insert(cell.clone(), (j, c.clone()));
                }
            }
        }
    }
    let remainder_fraction = if t.window.is_empty() {
        0.0
    } else {
        t.window.iter().filter(|w| !owner.contains_key(*w)).count() as f64 / t.window.len() as f64
    };
    TilingReport { valid: violations.is_empty(), violations, remainder_fraction }
}

/// True iff `b = a·g` for some `g`.
fn is_translate(group: &GroupModel, a: &FiniteSubset, b: &FiniteSubset) -> bool {
    if a.len() != b.len() || a.is_empty() {
        return false;
    }
    let b0 = b.first().expect("nonempty");
    a.iter().any(|x| {
        let g = group.mul(&group.inv(x), b0);
        a.right_translate(group, &g) == *b
    })
}
