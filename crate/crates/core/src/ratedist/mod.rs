//! Rate-distortion functions of window marginals under the L¹, Lᵖ and
//! counting (L∞) distortion constraints.

mod measures;
mod quantizer;
mod solver;

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use measures::{empirical_measure, stationary_distribution, InvariantMeasureModel};
pub use quantizer::{partition_map, Quantizer};
pub use solver::{solve, RDResult, RdSolution, SolveStatus, SolverOptions};

use crate::error::{invalid, Error, Result};
use crate::groups::FolnerSequence;
use crate::infotheory::Pmf;
use crate::spaces::{Config, MetricAlphabet};

/// Default cap on `|support| × |codebook|` per solve.
pub const DEFAULT_BUDGET_CELLS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    /// `E (1/|F|) Σ d(x_g, y_g) < ε`.
    L1,
    /// `E (1/|F|) Σ d(x_g, y_g)^p < ε^p`.
    Lp { p: f64 },
    /// `E (1/|F|) #{g : d(x_g, y_g) ≥ ε} < α`.
    Linf { alpha: f64 },
}

impl Distortion {
    pub fn validate(&self, eps: f64) -> Result<()> {
        if !(eps > 0.0) || !eps.is_finite() {
            return invalid(format!("eps must be positive, got {eps}"));
        }
        match *self {
            Distortion::Lp { p } if !(p >= 1.0) || !p.is_finite() => invalid(format!("p must be at least 1, got {p}")),
            Distortion::Linf { alpha } if !(alpha > 0.0) || !alpha.is_finite() => {
                invalid(format!("alpha must be positive, got {alpha}"))
            }
            _ => Ok(()),
        }
    }

    /// Budget enforced by the solver for the strict constraint.
    pub fn target(&self, eps: f64, margin: f64) -> f64 {
        match *self {
            Distortion::L1 => eps * (1.0 - margin),
            Distortion::Lp { p } => (eps * (1.0 - margin)).powf(p),
            Distortion::Linf { alpha } => alpha * (1.0 - margin),
        }
    }

    /// Per-pair cost whose expectation the constraint bounds.
    pub fn cost(&self, alphabet: &MetricAlphabet, eps: f64, x: &[usize], y: &[usize]) -> f64 {
        let n = x.len() as f64;
        let d = x.iter().zip(y).map(|(&a, &b)| alphabet.dist(a, b));
        match *self {
            Distortion::L1 => d.sum::<f64>() / n,
            Distortion::Lp { p } => d.map(|v| v.powf(p)).sum::<f64>() / n,
            Distortion::Linf { .. } => d.filter(|&v| v >= eps).count() as f64 / n,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Distortion::L1 => "L1".into(),
            Distortion::Lp { p } => format!("L{p}"),
            Distortion::Linf { alpha } => format!("Linf(alpha={alpha})"),
        }
    }
}

/// Row-major cost matrix between source support and codebook.
pub fn cost_matrix(
    alphabet: &MetricAlphabet,
    support: &[Config],
    codebook: &[Config],
    distortion: &Distortion,
    eps: f64,
) -> Result<Vec<f64>> {
    let len = support.first().map_or(0, Vec::len);
    if let Some(bad) = support.iter().chain(codebook).find(|x| x.len() != len) {
        return Err(Error::WindowMismatch { expected: len, got: bad.len() });
    }
    if support.iter().chain(codebook).flatten().any(|&a| a >= alphabet.size()) {
        return invalid("configuration uses a symbol outside the alphabet");
    }
    Ok(support
        .iter()
        .flat_map(|x| codebook.iter().map(move |y| distortion.cost(alphabet, eps, x, y)))
        .collect())
}

/// `R_μ(ε, F)` (or its Lᵖ / L∞ variant) for a window marginal, with the
/// reproduction restricted to `codebook` (default: the support of `source`).
pub fn rd_window(
    alphabet: &MetricAlphabet,
    source: &Pmf<Config>,
    distortion: &Distortion,
    eps: f64,
    codebook: Option<&[Config]>,
    opts: &SolverOptions,
) -> Result<RdSolution> {
    distortion.validate(eps)?;
    let codebook = codebook.unwrap_or(source.support());
    if codebook.is_empty() {
        return invalid("empty reproduction codebook");
    }
    let cost = cost_matrix(alphabet, source.support(), codebook, distortion, eps)?;
    solve(source.probs(), &cost, codebook.len(), eps, distortion.target(eps, opts.strict_margin), opts)
}

/// `R_{μ,∞}(ε, α, F)`: counting distortion with threshold `ε` and budget `α`.
pub fn rd_window_linf(
    alphabet: &MetricAlphabet,
    source: &Pmf<Config>,
    eps: f64,
    alpha: f64,
    codebook: Option<&[Config]>,
    opts: &SolverOptions,
) -> Result<RdSolution> {
    rd_window(alphabet, source, &Distortion::Linf { alpha }, eps, codebook, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRow {
    pub n: usize,
    pub window_size: usize,
    pub support: usize,
    pub rate_per_symbol: f64,
    pub result: RDResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRd {
    pub rows: Vec<NormalizedRow>,
    /// First `n` skipped for budget reasons, with the reason.
    pub truncated: Option<(usize, String)>,
    /// Change in the per-symbol rate between the last two rows.
    pub tail_change: Option<f64>,
}

/// `R(ε, F_n)/|F_n|` along `n_range`, stopping at the first window whose
/// support squared exceeds `budget_cells`.
pub fn rd_normalized(
    measure: &InvariantMeasureModel,
    alphabet: &MetricAlphabet,
    distortion: &Distortion,
    eps: f64,
    folner: &FolnerSequence,
    n_range: RangeInclusive<usize>,
    budget_cells: usize,
    opts: &SolverOptions,
) -> Result<NormalizedRd> {
    distortion.validate(eps)?;
    let mut sources = Vec::new();
    let mut truncated = None;
    for n in n_range {
        if n == 0 {
            return invalid("window index starts at 1");
        }
        let window = folner.set(n);
        let cap = (budget_cells as f64).sqrt() as usize;
        match measure.marginal(&window, cap) {
            Ok(m) if m.len().saturating_mul(m.len()) <= budget_cells => sources.push((n, window.len(), m)),
            Ok(m) => {
                truncated = Some((n, format!("{} cells exceed the budget of {budget_cells}", m.len() * m.len())));
                break;
            }
            Err(Error::BudgetExceeded { needed, cap }) => {
                truncated = Some((n, format!("support of at least {needed} exceeds {cap}")));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let rows = sources
        .par_iter()
        .map(|(n, size, m)| {
            let sol = rd_window(alphabet, m, distortion, eps, None, opts)?;
            Ok(NormalizedRow {
                n: *n,
                window_size: *size,
                support: m.len(),
                rate_per_symbol: sol.result.rate / *size as f64,
                result: sol.result,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_change = match rows.as_slice() {
        [.., a, b] => Some(b.rate_per_symbol - a.rate_per_symbol),
        _ => None,
    };
    Ok(NormalizedRd { rows, truncated, tail_change })
}

/// `R_{μ,∞}(ε, α, F_n)/|F_n|` along a decreasing `α` grid at a fixed window.
pub fn linf_alpha_path(
    measure: &InvariantMeasureModel,
    alphabet: &MetricAlphabet,
    eps: f64,
    alphas: &[f64],
    folner: &FolnerSequence,
    n: usize,
    budget_cells: usize,
    opts: &SolverOptions,
) -> Result<Vec<NormalizedRow>> {
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("alpha grid must be strictly decreasing");
    }
    let window = folner.set(n);
    let cap = (budget_cells as f64).sqrt() as usize;
    let source = measure.marginal(&window, cap)?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let sol = rd_window_linf(alphabet, &source, eps, alpha, None, opts)?;
            Ok(NormalizedRow {
                n,
                window_size: window.len(),
                support: source.len(),
                rate_per_symbol: sol.result.rate / window.len() as f64,
                result: sol.result,
            })
        })
        .collect()
}
