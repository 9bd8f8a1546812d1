//! Shift-invariant measures with exactly computable window marginals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{BoxGeometry, FiniteSubset, GroupModel};
use crate::infotheory::{Pmf, NORM_TOL};
use crate::spaces::{checked_pow, Config};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvariantMeasureModel {
    /// i.i.d. coordinates with a common single-site law.
    Product { site: Vec<f64> },
    /// Stationary Markov chain over `Z`.
    Markov { transition: Vec<Vec<f64>>, stationary: Vec<f64> },
    /// `μ_n = (1/|F_n|) Σ_{g ∈ F_n} ν_n ∘ g⁻¹` with `ν_n` uniform on `atoms`,
    /// shifts taken periodically on the box `F_n`.
    Empirical { group: String, geometry: BoxGeometry, atoms: Vec<Config> },
}

fn check_site(site: &[f64]) -> Result<()> {
    Pmf::from_probs(site.to_vec()).map(|_| ())
}

/// Stationary law of a row-stochastic matrix, by Gaussian elimination on
/// `π(P - I) = 0, Σπ = 1`.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = transition.len();
    for row in transition {
        if row.len() != k {
            return invalid("transition matrix must be square");
        }
        check_site(row)?;
    }
    // Rows of the system: k-1 balance equations plus normalization.
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut eq: Vec<f64> = (0..k).map(|i| transition[i][j] - if i == j { 1.0 } else { 0.0 }).collect();
            eq.push(0.0);
            eq
        })
        .collect();
    a[k - 1] = vec![1.0; k + 1];
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::InvalidDistribution("chain has no unique stationary law".into()));
        }
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..k).map(|i| (a[i][k] / a[i][i]).max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|v| v / total).collect())
}

impl InvariantMeasureModel {
    pub fn product(site: Vec<f64>) -> Result<Self> {
        check_site(&site)?;
        Ok(InvariantMeasureModel::Product { site })
    }

    pub fn point_mass(symbol: usize, alphabet_size: usize) -> Result<Self> {
        if symbol >= alphabet_size {
            return invalid("symbol outside alphabet");
        }
        Self::product((0..alphabet_size).map(|a| if a == symbol { 1.0 } else { 0.0 }).collect())
    }

    pub fn markov(transition: Vec<Vec<f64>>) -> Result<Self> {
        let stationary = stationary_distribution(&transition)?;
        Ok(InvariantMeasureModel::Markov { transition, stationary })
    }

    pub fn markov_with_stationary(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        check_site(&stationary)?;
        let k = stationary.len();
        if transition.len() != k {
            return invalid("stationary law and transition matrix differ in size");
        }
        for row in &transition {
            if row.len() != k {
                return invalid("transition matrix must be square");
            }
            check_site(row)?;
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| stationary[i] * transition[i][j]).sum();
            if (v - stationary[j]).abs() > NORM_TOL {
                return Err(Error::InvalidDistribution(format!("stationary law is not invariant at state {j}")));
            }
        }
        Ok(InvariantMeasureModel::Markov { transition, stationary })
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            InvariantMeasureModel::Product { site } => Some(site.len()),
            InvariantMeasureModel::Markov { stationary, .. } => Some(stationary.len()),
            InvariantMeasureModel::Empirical { .. } => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            InvariantMeasureModel::Product { .. } => "product",
            InvariantMeasureModel::Markov { .. } => "markov",
            InvariantMeasureModel::Empirical { .. } => "empirical",
        }
    }

    /// Law of the configuration on `window` (sorted order), zero-mass
    /// configurations dropped. Errors when the support would exceed `cap`.
    pub fn marginal(&self, window: &FiniteSubset, cap: usize) -> Result<Pmf<Config>> {
        if window.is_empty() {
            return invalid("empty window");
        }
        match self {
            InvariantMeasureModel::Product { site } => product_marginal(site, window.len(), cap),
            InvariantMeasureModel::Markov { transition, stationary } => {
                let w = window.to_vec();
                let contiguous = w.iter().all(|e| e.0.len() == 1) && w.windows(2).all(|p| p[1].0[0] == p[0].0[0] + 1);
                if !contiguous {
                    return Err(Error::UnsupportedGroup {
                        group: "Z".into(),
                        what: "Markov marginals on non-interval windows",
                    });
                }
                markov_marginal(transition, stationary, w.len(), cap)
            }
            InvariantMeasureModel::Empirical { group, geometry, atoms } => {
                empirical_marginal(&GroupModel::parse(group)?, geometry, atoms, window, cap)
            }
        }
    }
}

fn product_marginal(site: &[f64], len: usize, cap: usize) -> Result<Pmf<Config>> {
    let symbols: Vec<usize> = (0..site.len()).filter(|&a| site[a] > 0.0).collect();
    let count = checked_pow(symbols.len(), len).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::BudgetExceeded { needed: count, cap });
    }
    let mut support = Vec::with_capacity(count);
    let mut probs = Vec::with_capacity(count);
    let mut idx = vec![0usize; len];
    for _ in 0..count {
        let x: Config = idx.iter().map(|&i| symbols[i]).collect();
        probs.push(x.iter().map(|&a| site[a]).product());
        support.push(x);
        for pos in (0..len).rev() {
            idx[pos] += 1;
            if idx[pos] < symbols.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    renormalized(support, probs)
}

fn markov_marginal(transition: &[Vec<f64>], stationary: &[f64], len: usize, cap: usize) -> Result<Pmf<Config>> {
    let mut layer: Vec<(Config, f64)> =
        (0..stationary.len()).filter(|&a| stationary[a] > 0.0).map(|a| (vec![a], stationary[a])).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for (x, p) in &layer {
            let last = *x.last().expect("nonempty");
            for (b, &t) in transition[last].iter().enumerate() {
                if t > 0.0 {
                    let mut y = x.clone();
                    y.push(b);
                    next.push((y, p * t));
                }
            }
            if next.len() > cap {
                return Err(Error::BudgetExceeded { needed: next.len(), cap });
            }
        }
        layer = next;
    }
    if layer.len() > cap {
        return Err(Error::BudgetExceeded { needed: layer.len(), cap });
    }
    let (support, probs) = layer.into_iter().unzip();
    renormalized(support, probs)
}

fn empirical_marginal(
    group: &GroupModel,
    geom: &BoxGeometry,
    atoms: &[Config],
    window: &FiniteSubset,
    cap: usize,
) -> Result<Pmf<Config>> {
    let cells = geom.to_set().to_vec();
    let w = window.to_vec();
    for h in &w {
        group.check_elem(h)?;
    }
    // Index into the atom for coordinate h of g·x: x_{hg} wrapped into the box.
    let mut counts: BTreeMap<Config, usize> = BTreeMap::new();
    for g in &cells {
        let idx: Vec<usize> = w
            .iter()
            .map(|h| geom.index_of(&geom.wrap(&group.mul(h, g))).expect("wrapped into box"))
            .collect();
        for x in atoms {
            *counts.entry(idx.iter().map(|&i| x[i]).collect()).or_insert(0) += 1;
            if counts.len() > cap {
                return Err(Error::BudgetExceeded { needed: counts.len(), cap });
            }
        }
    }
    let total = (atoms.len() * cells.len()) as f64;
    let (support, probs) = counts.into_iter().map(|(x, c)| (x, c as f64 / total)).unzip();
    renormalized(support, probs)
}

fn renormalized(support: Vec<Config>, mut probs: Vec<f64>) -> Result<Pmf<Config>> {
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(Pmf::new(support, probs)?.trimmed())
}

/// The averaged empirical measure `μ_n` of a point set on the box window.
pub fn empirical_measure(group: &GroupModel, window: &FiniteSubset, atoms: Vec<Config>) -> Result<InvariantMeasureModel> {
    if atoms.is_empty() {
        return invalid("empirical measure needs at least one configuration");
    }
    let geometry = BoxGeometry::detect(window).ok_or_else(|| Error::UnsupportedGroup {
        group: group.name(),
        what: "empirical measures on non-box windows",
    })?;
    if group.lattice_dim() != Some(geometry.dims.len()) {
        return Err(Error::UnsupportedGroup { group: group.name(), what: "empirical measures off the lattice" });
    }
    if let Some(x) = atoms.iter().find(|x| x.len() != window.len()) {
        return Err(Error::WindowMismatch { expected: window.len(), got: x.len() });
    }
    Ok(InvariantMeasureModel::Empirical { group: group.name(), geometry, atoms })
}
