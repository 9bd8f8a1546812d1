//! Covering-growth estimates `S` and `S̃`, metric mean dimension slopes, and
//! the comparisons between rate distortion and covering growth.
//!
//! All quantities are computed on full configuration spaces `A^{F_n}` of
//! finite windows. Limits in `n` and `ε` are reported as finite-grid tails,
//! never asserted.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{FiniteSubset, FolnerSequence};
use crate::infotheory::{empirical_fano_check, fano_bound, FanoOutcome, JointPmf, Pmf};
use crate::ratedist::{
    cost_matrix, empirical_measure, partition_map, rd_window, Distortion, InvariantMeasureModel, RDResult,
    SolveStatus, SolverOptions, DEFAULT_BUDGET_CELLS,
};
use crate::spaces::{
    all_configs, alphabet_covering, exact_max_separated, exact_min_cover_cells, greedy_cover, separated_set,
    separated_set_ordered, tame_growth_profile, Config, CoverBracket, MetricAlphabet, OrbitKind, OrbitMetric,
    TameGrowthRow, EXACT_SEARCH_LIMIT,
};

/// Default cap on `|A|^{|F_n|}` for covering computations.
pub const DEFAULT_BUDGET_POINTS: usize = 5000;
/// Slack on comparisons that involve a solver output.
pub const SOLVER_SLACK: f64 = 1e-6;

/// All configurations on `F_n`, lexicographic.
#[derive(Clone, Debug)]
pub struct WindowSpace {
    pub n: usize,
    pub window: FiniteSubset,
    pub configs: Vec<Config>,
    k: usize,
}

impl WindowSpace {
    pub fn new(alphabet: &MetricAlphabet, folner: &FolnerSequence, n: usize, budget_points: usize) -> Result<Self> {
        if n == 0 {
            return invalid("window index starts at 1");
        }
        let window = folner.set(n);
        let configs = all_configs(alphabet.size(), window.len(), budget_points)?;
        Ok(WindowSpace { n, window, configs, k: alphabet.size() })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.window.len()
    }

    pub fn index_of(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &a| acc * self.k + a)
    }
}

/// Metric used for a cover of `A^F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMetric {
    Max,
    Average,
    /// `((1/|F|) Σ d^p)^{1/p}`
    PowerMean(f64),
}

impl CoverMetric {
    pub fn dist(&self, alphabet: &MetricAlphabet, x: &[usize], y: &[usize]) -> f64 {
        match *self {
            CoverMetric::Max => OrbitMetric::new(OrbitKind::Max, x.len(), alphabet).d(x, y),
            CoverMetric::Average => OrbitMetric::new(OrbitKind::Average, x.len(), alphabet).d(x, y),
            CoverMetric::PowerMean(p) => {
                let s: f64 = x.iter().zip(y).map(|(&a, &b)| alphabet.dist(a, b).powf(p)).sum();
                (s / x.len() as f64).powf(1.0 / p)
            }
        }
    }
}

/// A cover of `A^F` by cells of diameter `< eps`, with a separated-set lower
/// bound on the covering number.
#[derive(Clone, Debug)]
pub struct Cover {
    pub bracket: CoverBracket,
    pub cells: Vec<Vec<usize>>,
}

pub fn cover_space(alphabet: &MetricAlphabet, space: &WindowSpace, metric: CoverMetric, eps: f64) -> Result<Cover> {
    let pts = &space.configs;
    let dist = |i: usize, j: usize| metric.dist(alphabet, &pts[i], &pts[j]);
    if pts.len() <= EXACT_SEARCH_LIMIT {
        let cells = exact_min_cover_cells(pts.len(), dist, eps)?;
        let v = cells.len();
        return Ok(Cover { bracket: CoverBracket { lower: v, upper: v, exact: true }, cells });
    }
    let lower = separated_set(pts.len(), dist, eps)?.members.len();
    let cells = greedy_cover(pts.len(), dist, eps);
    Ok(Cover { bracket: CoverBracket { lower, upper: cells.len(), exact: lower == cells.len() }, cells })
}

/// Largest known `eps`-separated subset size (exact for small spaces).
pub fn packing_lower(alphabet: &MetricAlphabet, space: &WindowSpace, metric: CoverMetric, eps: f64) -> Result<usize> {
    let pts = &space.configs;
    let dist = |i: usize, j: usize| metric.dist(alphabet, &pts[i], &pts[j]);
    if pts.len() <= EXACT_SEARCH_LIMIT {
        exact_max_separated(pts.len(), dist, eps)
    } else {
        Ok(separated_set(pts.len(), dist, eps)?.members.len())
    }
}

/// Normalized log-covering brackets at one `(ε, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SRow {
    pub eps: f64,
    pub n: usize,
    pub window_size: usize,
    pub points: usize,
    /// Raw bracket on `#(A^F, d_F, ε)`.
    pub max_cover: CoverBracket,
    /// Raw bracket on `#(A^F, d̄_F, ε)`.
    pub avg_cover: CoverBracket,
    pub s_lower: f64,
    pub s_upper: f64,
    pub stilde_lower: f64,
    pub stilde_upper: f64,
}

impl SRow {
    /// Combines raw brackets. Since `d̄_F ≤ d_F`, a `d_F` cover is a `d̄_F`
    /// cover and a `d̄_F`-separated set is `d_F`-separated, which tightens
    /// both brackets and makes `S̃ ≤ S` hold bracket-wise.
    fn new(eps: f64, space: &WindowSpace, max_cover: CoverBracket, avg_cover: CoverBracket) -> Self {
        let f = space.window_size() as f64;
        let ln = |v: usize| (v.max(1) as f64).ln() / f;
        SRow {
            eps,
            n: space.n,
            window_size: space.window_size(),
            points: space.len(),
            max_cover,
            avg_cover,
            s_lower: ln(max_cover.lower.max(avg_cover.lower)),
            s_upper: ln(max_cover.upper),
            stilde_lower: ln(avg_cover.lower),
            stilde_upper: ln(avg_cover.upper.min(max_cover.upper)),
        }
    }

    /// `S̃ ≤ S` consistency of the raw brackets and of the combined ones.
    pub fn ordering_holds(&self) -> bool {
        self.avg_cover.lower <= self.max_cover.upper
            && self.stilde_lower <= self.s_lower
            && self.stilde_upper <= self.s_upper
            && self.s_lower <= self.s_upper
            && self.stilde_lower <= self.stilde_upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdimEstimate {
    pub rows: Vec<SRow>,
    pub truncated: Vec<String>,
    /// No bracket contradicts monotonicity in `ε` at a fixed window.
    pub monotone_consistent: bool,
}

struct WindowCovers {
    row: SRow,
    max: Cover,
    avg: Cover,
}

fn window_covers(alphabet: &MetricAlphabet, space: &WindowSpace, eps: f64) -> Result<WindowCovers> {
    let max = cover_space(alphabet, space, CoverMetric::Max, eps)?;
    let avg = cover_space(alphabet, space, CoverMetric::Average, eps)?;
    Ok(WindowCovers { row: SRow::new(eps, space, max.bracket, avg.bracket), max, avg })
}

fn spaces_for(
    alphabet: &MetricAlphabet,
    folner: &FolnerSequence,
    n_range: std::ops::RangeInclusive<usize>,
    budget_points: usize,
    truncated: &mut Vec<String>,
) -> Result<Vec<WindowSpace>> {
    let mut out = Vec::new();
    for n in n_range {
        match WindowSpace::new(alphabet, folner, n, budget_points) {
            Ok(s) => out.push(s),
            Err(Error::BudgetExceeded { needed, cap }) => {
                truncated.push(format!("n={n}: {needed} configurations exceed the point budget {cap}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return invalid("empty eps grid");
    }
    if eps_grid.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return invalid("eps values must be positive");
    }
    Ok(())
}

fn monotone_consistent(rows: &[SRow]) -> bool {
    rows.iter().all(|a| {
        rows.iter().filter(|b| b.n == a.n && b.eps > a.eps).all(|b| {
            b.max_cover.lower <= a.max_cover.upper && b.avg_cover.lower <= a.avg_cover.upper
        })
    })
}

/// `(1/|F_n|) log #(A^{F_n}, ·, ε)` brackets under both orbit metrics.
pub fn s_profile(
    alphabet: &MetricAlphabet,
    folner: &FolnerSequence,
    eps_grid: &[f64],
    n_range: std::ops::RangeInclusive<usize>,
    budget_points: usize,
) -> Result<MdimEstimate> {
    check_eps_grid(eps_grid)?;
    let mut truncated = Vec::new();
    let spaces = spaces_for(alphabet, folner, n_range, budget_points, &mut truncated)?;
    let tasks: Vec<(&WindowSpace, f64)> = spaces.iter().flat_map(|s| eps_grid.iter().map(move |&e| (s, e))).collect();
    let rows = tasks
        .par_iter()
        .map(|(s, e)| Ok(window_covers(alphabet, s, *e)?.row))
        .collect::<Result<Vec<_>>>()?;
    let monotone_consistent = monotone_consistent(&rows);
    Ok(MdimEstimate { rows, truncated, monotone_consistent })
}

/// Profile of grid-quantized `[0,1]` shifts: at each `ε` the alphabet is
/// `A_m` with `m = round(1/ε)`.
pub fn quantized_profile(
    folner: &FolnerSequence,
    eps_grid: &[f64],
    n_range: std::ops::RangeInclusive<usize>,
    budget_points: usize,
) -> Result<MdimEstimate> {
    check_eps_grid(eps_grid)?;
    let mut rows = Vec::new();
    let mut truncated = Vec::new();
    for &eps in eps_grid {
        let alphabet = MetricAlphabet::grid((1.0 / eps).round().max(1.0) as usize)?;
        let est = s_profile(&alphabet, folner, &[eps], n_range.clone(), budget_points)?;
        rows.extend(est.rows);
        truncated.extend(est.truncated.into_iter().map(|t| format!("eps={eps}: {t}")));
    }
    Ok(MdimEstimate { monotone_consistent: true, rows, truncated })
}

/// Tail statistics of `S(ε)/|log ε|` over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    /// `ε` values used (those below 1), finest last.
    pub eps: Vec<f64>,
    /// Largest `S_upper/|log ε|` over the finest half of the grid.
    pub upper_slope: f64,
    /// Smallest `S_lower/|log ε|` over the finest half of the grid.
    pub lower_slope: f64,
    pub stilde_upper_slope: f64,
    pub stilde_lower_slope: f64,
    /// Least-squares slope of `S_upper` against `|log ε|`.
    pub lsq_slope: f64,
    pub note: String,
}

/// Per-`ε` summary taken at the largest computed window.
pub fn finest_rows(est: &MdimEstimate) -> Vec<SRow> {
    let eps: BTreeSet<u64> = est.rows.iter().map(|r| r.eps.to_bits()).collect();
    let mut out: Vec<SRow> = eps
        .into_iter()
        .filter_map(|e| est.rows.iter().filter(|r| r.eps.to_bits() == e).max_by_key(|r| r.n).cloned())
        .collect();
    out.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    out
}

pub fn mdim_slopes(est: &MdimEstimate) -> Result<Slopes> {
    let rows: Vec<SRow> = finest_rows(est).into_iter().filter(|r| r.eps < 1.0).collect();
    if rows.len() < 3 {
        return invalid("slope estimates need at least three eps values below 1");
    }
    let tail = &rows[rows.len() / 2..];
    let ratio = |v: f64, e: f64| v / e.ln().abs();
    let fold_max = |f: &dyn Fn(&SRow) -> f64| tail.iter().map(|r| ratio(f(r), r.eps)).fold(f64::NEG_INFINITY, f64::max);
    let fold_min = |f: &dyn Fn(&SRow) -> f64| tail.iter().map(|r| ratio(f(r), r.eps)).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln().abs()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.s_upper).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(Slopes {
        eps: rows.iter().map(|r| r.eps).collect(),
        upper_slope: fold_max(&|r| r.s_upper),
        lower_slope: fold_min(&|r| r.s_lower),
        stilde_upper_slope: fold_max(&|r| r.stilde_upper),
        stilde_lower_slope: fold_min(&|r| r.stilde_lower),
        lsq_slope: if sxx > 0.0 { sxy / sxx } else { 0.0 },
        note: "finite-grid tail statistics; limits as eps -> 0 are extrapolations".into(),
    })
}

/// Candidate invariant measures for the supremum over measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureFamily {
    Product { name: String, site: Vec<f64> },
    Markov { name: String, transition: Vec<Vec<f64>> },
    /// Averaged empirical measure of a maximal `factor·ε`-separated set of
    /// `A^{F_n}` under `metric`, scanned in a seeded random order.
    Empirical { factor: f64, metric: OrbitKind },
    PointMass { symbol: usize },
}

impl MeasureFamily {
    pub fn label(&self) -> String {
        match self {
            MeasureFamily::Product { name, .. } | MeasureFamily::Markov { name, .. } => name.clone(),
            MeasureFamily::Empirical { factor, metric } => {
                format!("empirical({factor}eps,{})", if *metric == OrbitKind::Max { "max" } else { "avg" })
            }
            MeasureFamily::PointMass { symbol } => format!("point({symbol})"),
        }
    }

    pub fn instantiate(
        &self,
        alphabet: &MetricAlphabet,
        folner: &FolnerSequence,
        space: &WindowSpace,
        eps: f64,
        seed: u64,
    ) -> Result<InvariantMeasureModel> {
        match self {
            MeasureFamily::Product { site, .. } => InvariantMeasureModel::product(site.clone()),
            MeasureFamily::Markov { transition, .. } => InvariantMeasureModel::markov(transition.clone()),
            MeasureFamily::PointMass { symbol } => InvariantMeasureModel::point_mass(*symbol, alphabet.size()),
            MeasureFamily::Empirical { factor, metric } => {
                let atoms = seeded_separated_set(alphabet, space, *metric, factor * eps, seed, eps)?;
                empirical_measure(folner.group(), &space.window, atoms)
            }
        }
    }
}

fn sweep_stream(seed: u64, eps: f64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(eps.to_bits() ^ ((n as u64) << 1));
    rng
}

/// Maximal `sep`-separated subset of `A^F`, first-fit over a seeded shuffle.
pub fn seeded_separated_set(
    alphabet: &MetricAlphabet,
    space: &WindowSpace,
    metric: OrbitKind,
    sep: f64,
    seed: u64,
    eps: f64,
) -> Result<Vec<Config>> {
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.shuffle(&mut sweep_stream(seed, eps, space.n));
    let m = OrbitMetric::new(metric, space.window_size(), alphabet);
    let pts = &space.configs;
    let set = separated_set_ordered(&order, |i, j| m.d(&pts[i], &pts[j]), sep)?;
    Ok(set.members.iter().map(|&i| pts[i].clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpConfig {
    pub eps_grid: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub families: Vec<MeasureFamily>,
    /// Modes whose rate is compared against a covering bound.
    pub modes: Vec<Distortion>,
    /// Exponents for `R_1 ≤ R_p`.
    pub ordering_p: Vec<f64>,
    /// Budgets for `R_1(ε + α·diam) ≤ R_∞(ε, α)`.
    pub ordering_alpha: Vec<f64>,
    /// Exponent in the covering comparison `S(2ε^{1-δ})` vs `S̃(ε)`.
    pub delta: f64,
    pub seed: u64,
    pub budget_points: usize,
    pub budget_cells: usize,
    pub slack: f64,
    pub solver: SolverOptions,
}

impl Default for VpConfig {
    fn default() -> Self {
        VpConfig {
            eps_grid: vec![0.25, 0.125],
            n_min: 1,
            n_max: 2,
            families: vec![MeasureFamily::Empirical { factor: 2.0, metric: OrbitKind::Average }],
            modes: vec![Distortion::L1, Distortion::Lp { p: 2.0 }, Distortion::Linf { alpha: 0.1 }],
            ordering_p: vec![1.0, 2.0, 4.0],
            ordering_alpha: vec![0.1, 0.01],
            delta: 0.5,
            seed: 0,
            budget_points: DEFAULT_BUDGET_POINTS,
            budget_cells: DEFAULT_BUDGET_CELLS,
            slack: SOLVER_SLACK,
            solver: SolverOptions::default(),
        }
    }
}

/// Rate against covering bound at one `(ε, n, μ, mode)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub eps: f64,
    pub n: usize,
    pub window_size: usize,
    pub family: String,
    pub mode: String,
    pub support: usize,
    pub codebook: usize,
    pub rate_per_symbol: f64,
    pub gap: f64,
    pub status: SolveStatus,
    /// Metric of the cover in the bound.
    pub bound_metric: CoverMetric,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingRow {
    pub eps: f64,
    pub n: usize,
    pub family: String,
    /// `"lp"` for `R_1(ε) ≤ R_p(ε)`, `"linf"` for `R_1(ε') ≤ R_∞(ε, α)`.
    pub relation: String,
    pub parameter: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `(1/|F|) log #(d_F, 2ε^{1-δ}) ≤ log 2 + ε^δ log #(A, ε) + (1/|F|) log #(d̄_F, ε)`,
/// checked with the left side's lower bracket against the right side's upper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverComparisonRow {
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
    pub lhs_lower: f64,
    pub lhs_upper: f64,
    pub rhs_upper: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub eps: f64,
    pub n: usize,
    pub best_rate: f64,
    pub family: String,
    pub ratio: f64,
    pub stilde_ratio: f64,
    pub s_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpReport {
    pub alphabet_size: usize,
    pub group: String,
    pub folner: String,
    pub brackets: Vec<SRow>,
    pub bounds: Vec<BoundRow>,
    pub orderings: Vec<OrderingRow>,
    pub cover_comparisons: Vec<CoverComparisonRow>,
    pub ratios: Vec<RatioRow>,
    pub tame_growth: Vec<TameGrowthRow>,
    pub truncated: Vec<String>,
    /// Every failed exact inequality, human readable.
    pub failures: Vec<String>,
}

impl VpReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Solved {
    distortion: Distortion,
    eps: f64,
    result: RDResult,
}

struct TaskOut {
    bounds: Vec<BoundRow>,
    orderings: Vec<OrderingRow>,
    truncated: Option<String>,
}

fn cover_reps_meeting(cells: &[Vec<usize>], support: &BTreeSet<usize>) -> Vec<usize> {
    cells.iter().filter(|c| c.iter().any(|i| support.contains(i))).map(|c| c[0]).collect()
}

/// Runs every configured comparison between rates and covering growth.
/// Exact one-sided inequalities land in `failures` when violated; ratios
/// and tails are reported without a verdict.
pub fn verify_vp(alphabet: &MetricAlphabet, folner: &FolnerSequence, cfg: &VpConfig) -> Result<VpReport> {
    check_eps_grid(&cfg.eps_grid)?;
    if cfg.n_min == 0 || cfg.n_min > cfg.n_max {
        return invalid("window range must satisfy 1 <= n_min <= n_max");
    }
    for m in &cfg.modes {
        m.validate(cfg.eps_grid[0])?;
    }
    let mut truncated = Vec::new();
    let spaces = spaces_for(alphabet, folner, cfg.n_min..=cfg.n_max, cfg.budget_points, &mut truncated)?;

    let p_values: Vec<f64> = cfg
        .modes
        .iter()
        .filter_map(|m| match m {
            Distortion::Lp { p } if *p != 1.0 => Some(*p),
            _ => None,
        })
        .collect();

    // Covers per (n, ε).
    let cover_tasks: Vec<(usize, f64)> =
        (0..spaces.len()).flat_map(|s| cfg.eps_grid.iter().map(move |&e| (s, e))).collect();
    let covers = cover_tasks
        .par_iter()
        .map(|&(s, eps)| {
            let wc = window_covers(alphabet, &spaces[s], eps)?;
            let pcovers = p_values
                .iter()
                .map(|&p| Ok((p, cover_space(alphabet, &spaces[s], CoverMetric::PowerMean(p), eps)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((wc, pcovers))
        })
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize)> =
        (0..cover_tasks.len()).flat_map(|c| (0..cfg.families.len()).map(move |f| (c, f))).collect();
    let outs = tasks
        .par_iter()
        .map(|&(c, f)| {
            let (s, eps) = cover_tasks[c];
            let (wc, pcovers) = &covers[c];
            verify_task(alphabet, folner, cfg, &spaces[s], eps, wc, pcovers, &cfg.families[f])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = VpReport {
        alphabet_size: alphabet.size(),
        group: folner.group().name(),
        folner: folner.name().to_string(),
        brackets: covers.iter().map(|(wc, _)| wc.row.clone()).collect(),
        bounds: Vec::new(),
        orderings: Vec::new(),
        cover_comparisons: Vec::new(),
        ratios: Vec::new(),
        tame_growth: tame_growth_profile(alphabet, &sorted_desc(&cfg.eps_grid), &[cfg.delta])?,
        truncated,
        failures: Vec::new(),
    };
    for out in outs {
        report.bounds.extend(out.bounds);
        report.orderings.extend(out.orderings);
        report.truncated.extend(out.truncated);
    }

    report.cover_comparisons = cover_tasks
        .par_iter()
        .zip(&covers)
        .map(|(&(s, eps), (wc, _))| cover_comparison(alphabet, &spaces[s], eps, cfg.delta, &wc.row))
        .collect::<Result<Vec<_>>>()?;

    for row in &report.brackets {
        if !row.ordering_holds() {
            report.failures.push(format!("bracket ordering S~ <= S fails at eps={} n={}", row.eps, row.n));
        }
    }
    for b in report.bounds.iter().filter(|b| !b.holds) {
        report.failures.push(format!(
            "rate {} exceeds covering bound {} ({}, {}, eps={}, n={})",
            b.rate_per_symbol, b.bound, b.family, b.mode, b.eps, b.n
        ));
    }
    for o in report.orderings.iter().filter(|o| !o.holds) {
        report.failures.push(format!(
            "ordering {}({}) fails: {} > {} ({}, eps={}, n={})",
            o.relation, o.parameter, o.lhs, o.rhs, o.family, o.eps, o.n
        ));
    }
    for c in report.cover_comparisons.iter().filter(|c| !c.holds) {
        report.failures.push(format!(
            "covering comparison fails: {} > {} (eps={}, n={})",
            c.lhs_lower, c.rhs_upper, c.eps, c.n
        ));
    }
    if !monotone_consistent(&report.brackets) {
        report.failures.push("covering brackets contradict monotonicity in eps".into());
    }
    report.ratios = ratio_rows(&report);
    Ok(report)
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    out
}

#[allow(clippy::too_many_arguments)]
fn verify_task(
    alphabet: &MetricAlphabet,
    folner: &FolnerSequence,
    cfg: &VpConfig,
    space: &WindowSpace,
    eps: f64,
    wc: &WindowCovers,
    pcovers: &[(f64, Cover)],
    family: &MeasureFamily,
) -> Result<TaskOut> {
    let label = family.label();
    let f = space.window_size() as f64;
    let cap = (cfg.budget_cells as f64).sqrt() as usize;
    let measure = family.instantiate(alphabet, folner, space, eps, cfg.seed)?;
    let skip = |why: String| Ok(TaskOut { bounds: vec![], orderings: vec![], truncated: Some(why) });
    let source: Pmf<Config> = match measure.marginal(&space.window, cap) {
        Ok(m) => m,
        Err(Error::BudgetExceeded { needed, cap }) => {
            return skip(format!("{label} eps={eps} n={}: support {needed} exceeds {cap}", space.n))
        }
        Err(e) => return Err(e),
    };

    // Shared codebook: the support plus one representative of every cover
    // cell meeting it, for each cover that enters a bound.
    let support_idx: BTreeSet<usize> = source.support().iter().map(|x| space.index_of(x)).collect();
    let mut book: BTreeSet<usize> = support_idx.clone();
    book.extend(cover_reps_meeting(&wc.max.cells, &support_idx));
    book.extend(cover_reps_meeting(&wc.avg.cells, &support_idx));
    for (_, c) in pcovers {
        book.extend(cover_reps_meeting(&c.cells, &support_idx));
    }
    let codebook: Vec<Config> = book.iter().map(|&i| space.configs[i].clone()).collect();
    if source.len() * codebook.len() > cfg.budget_cells {
        return skip(format!(
            "{label} eps={eps} n={}: {}x{} cells exceed {}",
            space.n,
            source.len(),
            codebook.len(),
            cfg.budget_cells
        ));
    }

    let mut wanted: Vec<(Distortion, f64)> = cfg.modes.iter().map(|m| (*m, eps)).collect();
    for &p in &cfg.ordering_p {
        wanted.push((if p == 1.0 { Distortion::L1 } else { Distortion::Lp { p } }, eps));
    }
    for &alpha in &cfg.ordering_alpha {
        wanted.push((Distortion::Linf { alpha }, eps));
        wanted.push((Distortion::L1, eps + alpha * alphabet.diam() + cfg.slack));
    }
    let mut solved: Vec<Solved> = Vec::new();
    for (d, e) in wanted {
        if solved.iter().any(|s| s.distortion == d && s.eps == e) {
            continue;
        }
        let sol = rd_window(alphabet, &source, &d, e, Some(&codebook), &cfg.solver)?;
        solved.push(Solved { distortion: d, eps: e, result: sol.result });
    }
    let rate = |d: Distortion, e: f64| {
        solved.iter().find(|s| s.distortion == d && s.eps == e).map(|s| s.result.rate).expect("solved")
    };

    let ln_f = |count: usize| (count.max(1) as f64).ln() / f;
    let mut bounds = Vec::new();
    for mode in &cfg.modes {
        let s = solved.iter().find(|s| s.distortion == *mode && s.eps == eps).expect("solved");
        let (metric, count) = match mode {
            Distortion::L1 => (CoverMetric::Average, wc.avg.bracket.upper.min(wc.max.bracket.upper)),
            Distortion::Lp { p } if *p == 1.0 => (CoverMetric::Average, wc.avg.bracket.upper.min(wc.max.bracket.upper)),
            Distortion::Lp { p } => {
                let c = &pcovers.iter().find(|(q, _)| q == p).expect("cover computed").1;
                (CoverMetric::PowerMean(*p), c.bracket.upper.min(wc.max.bracket.upper))
            }
            Distortion::Linf { .. } => (CoverMetric::Max, wc.max.bracket.upper),
        };
        let per = s.result.rate / f;
        let bound = ln_f(count);
        bounds.push(BoundRow {
            eps,
            n: space.n,
            window_size: space.window_size(),
            family: label.clone(),
            mode: mode.label(),
            support: source.len(),
            codebook: codebook.len(),
            rate_per_symbol: per,
            gap: s.result.gap,
            status: s.result.status,
            bound_metric: metric,
            bound,
            holds: per <= bound + cfg.slack,
        });
    }

    let mut orderings = Vec::new();
    let r1 = rate(Distortion::L1, eps);
    for &p in &cfg.ordering_p {
        let rp = rate(if p == 1.0 { Distortion::L1 } else { Distortion::Lp { p } }, eps);
        orderings.push(OrderingRow {
            eps,
            n: space.n,
            family: label.clone(),
            relation: "lp".into(),
            parameter: p,
            lhs: r1 / f,
            rhs: rp / f,
            holds: r1 / f <= rp / f + cfg.slack,
        });
    }
    for &alpha in &cfg.ordering_alpha {
        let lhs = rate(Distortion::L1, eps + alpha * alphabet.diam() + cfg.slack) / f;
        let rhs = rate(Distortion::Linf { alpha }, eps) / f;
        orderings.push(OrderingRow {
            eps,
            n: space.n,
            family: label.clone(),
            relation: "linf".into(),
            parameter: alpha,
            lhs,
            rhs,
            holds: lhs <= rhs + cfg.slack,
        });
    }
    Ok(TaskOut { bounds, orderings, truncated: None })
}

fn cover_comparison(
    alphabet: &MetricAlphabet,
    space: &WindowSpace,
    eps: f64,
    delta: f64,
    row: &SRow,
) -> Result<CoverComparisonRow> {
    let f = space.window_size() as f64;
    let radius = 2.0 * eps.powf(1.0 - delta);
    let lhs_lower = (packing_lower(alphabet, space, CoverMetric::Max, radius)?.max(1) as f64).ln() / f;
    let lhs_upper = (cover_space(alphabet, space, CoverMetric::Max, radius)?.bracket.upper as f64).ln() / f;
    let site = alphabet_covering(alphabet, eps)?.upper as f64;
    let rhs_upper = std::f64::consts::LN_2 + eps.powf(delta) * site.ln() + row.stilde_upper;
    Ok(CoverComparisonRow { eps, delta, n: space.n, lhs_lower, lhs_upper, rhs_upper, holds: lhs_lower <= rhs_upper })
}

fn ratio_rows(report: &VpReport) -> Vec<RatioRow> {
    let brackets = finest_rows(&MdimEstimate {
        rows: report.brackets.clone(),
        truncated: vec![],
        monotone_consistent: true,
    });
    brackets
        .iter()
        .filter_map(|b| {
            let l1 = Distortion::L1.label();
            let rows: Vec<&BoundRow> = report
                .bounds
                .iter()
                .filter(|r| r.eps == b.eps && r.mode == l1 && r.rate_per_symbol.is_finite())
                .collect();
            // Largest window at which a non-degenerate measure was solved.
            let n = rows.iter().filter(|r| r.support > 1).map(|r| r.n).max().or(rows.iter().map(|r| r.n).max())?;
            let best = rows
                .iter()
                .filter(|r| r.n == n)
                .max_by(|a, c| a.rate_per_symbol.total_cmp(&c.rate_per_symbol))?;
            let log = b.eps.ln().abs();
            Some(RatioRow {
                eps: b.eps,
                n,
                best_rate: best.rate_per_symbol,
                family: best.family.clone(),
                ratio: best.rate_per_symbol / log,
                stilde_ratio: b.stilde_upper / log,
                s_ratio: b.s_upper / log,
            })
        })
        .collect()
}

/// Rates of one measure along two Følner sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckRow {
    pub n: usize,
    pub rate_a: f64,
    pub rate_b: f64,
    pub discrepancy: f64,
}

pub fn folner_cross_check(
    measure: &InvariantMeasureModel,
    alphabet: &MetricAlphabet,
    distortion: &Distortion,
    eps: f64,
    a: &FolnerSequence,
    b: &FolnerSequence,
    n_range: std::ops::RangeInclusive<usize>,
    budget_cells: usize,
    opts: &SolverOptions,
) -> Result<Vec<CrossCheckRow>> {
    let ra = crate::ratedist::rd_normalized(measure, alphabet, distortion, eps, a, n_range.clone(), budget_cells, opts)?;
    let rb = crate::ratedist::rd_normalized(measure, alphabet, distortion, eps, b, n_range, budget_cells, opts)?;
    Ok(ra
        .rows
        .iter()
        .zip(&rb.rows)
        .map(|(x, y)| CrossCheckRow {
            n: x.n,
            rate_a: x.rate_per_symbol,
            rate_b: y.rate_per_symbol,
            discrepancy: (x.rate_per_symbol - y.rate_per_symbol).abs(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoSweepConfig {
    pub eps: f64,
    pub d: f64,
    /// Separation of the point sets as multiples of `ε`.
    pub separation_factors: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub seeds: Vec<u64>,
    pub budget_points: usize,
    pub budget_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoRow {
    pub n: usize,
    pub seed: u64,
    pub separation_factor: f64,
    pub set_size: usize,
    /// `"quantized"` or `"optimal"`.
    pub channel: String,
    pub codebook: usize,
    pub bound: f64,
    pub outcome: FanoOutcome,
}

/// Uniform inputs on maximal separated sets of `A^{F_n}` under `d̄_{F_n}`,
/// passed through (a) the coordinate-wise quantizer of mesh `ε` and (b) the
/// rate-optimal channel with mean distortion below `ε`; each channel is
/// checked against the Fano-type lower bound.
pub fn fano_sweep(
    alphabet: &MetricAlphabet,
    folner: &FolnerSequence,
    cfg: &FanoSweepConfig,
    opts: &SolverOptions,
) -> Result<Vec<FanoRow>> {
    let mut truncated = Vec::new();
    let spaces = spaces_for(alphabet, folner, cfg.n_min..=cfg.n_max, cfg.budget_points, &mut truncated)?;
    let quantizer = partition_map(alphabet, cfg.eps)?;
    let tasks: Vec<(usize, u64, f64)> = (0..spaces.len())
        .flat_map(|s| cfg.seeds.iter().flat_map(move |&seed| cfg.separation_factors.iter().map(move |&f| (s, seed, f))))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(si, seed, factor)| {
            let space = &spaces[si];
            let metric = OrbitMetric::new(OrbitKind::Average, space.window_size(), alphabet);
            let set = seeded_separated_set(alphabet, space, OrbitKind::Average, factor * cfg.eps, seed, cfg.eps)?;
            let k = set.len();
            let bound = fano_bound(cfg.d, k)?;
            let mut out = Vec::new();

            let ys: Vec<Config> = set.iter().map(|x| quantizer.apply_config(x)).collect::<BTreeSet<_>>().into_iter().collect();
            let mut p = vec![0.0; k * ys.len()];
            for (i, x) in set.iter().enumerate() {
                let j = ys.binary_search(&quantizer.apply_config(x)).expect("present");
                p[i * ys.len() + j] = 1.0 / k as f64;
            }
            let joint = JointPmf::new(k, ys.len(), p)?;
            out.push(FanoRow {
                n: space.n,
                seed,
                separation_factor: factor,
                set_size: k,
                channel: "quantized".into(),
                codebook: ys.len(),
                bound,
                outcome: empirical_fano_check(&set, &ys, &joint, &metric, cfg.eps, cfg.d)?,
            });

            let codebook: Vec<Config> = if k * space.len() <= cfg.budget_cells {
                space.configs.clone()
            } else {
                set.iter().cloned().chain(ys.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect()
            };
            let cost = cost_matrix(alphabet, &set, &codebook, &Distortion::L1, cfg.eps)?;
            let uniform = vec![1.0 / k as f64; k];
            let sol = crate::ratedist::solve(
                &uniform,
                &cost,
                codebook.len(),
                cfg.eps,
                Distortion::L1.target(cfg.eps, opts.strict_margin),
                opts,
            )?;
            let outcome = match sol.kernel {
                Some(kernel) => empirical_fano_check(&set, &codebook, &kernel.joint(&uniform)?, &metric, cfg.eps, cfg.d)?,
                None => FanoOutcome::NotApplicable { reason: "distortion budget infeasible".into() },
            };
            out.push(FanoRow {
                n: space.n,
                seed,
                separation_factor: factor,
                set_size: k,
                channel: "optimal".into(),
                codebook: codebook.len(),
                bound,
                outcome,
            });
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{folner_boxes, GroupModel};

    #[test]
    fn full_binary_shift_has_entropy_log2() {
        let a = MetricAlphabet::binary();
        let f = folner_boxes(&GroupModel::z()).unwrap();
        let est = s_profile(&a, &f, &[0.5, 0.9], 1..=4, DEFAULT_BUDGET_POINTS).unwrap();
        for r in &est.rows {
            assert!((r.s_lower - std::f64::consts::LN_2).abs() < 1e-12, "{r:?}");
            assert!((r.s_upper - std::f64::consts::LN_2).abs() < 1e-12);
            assert!(r.ordering_holds());
        }
        let coarse = s_profile(&a, &f, &[1.5], 1..=3, DEFAULT_BUDGET_POINTS).unwrap();
        assert!(coarse.rows.iter().all(|r| r.s_upper == 0.0));
    }

    #[test]
    fn single_site_grid_is_alphabet_cover() {
        let a = MetricAlphabet::grid(16).unwrap();
        let f = folner_boxes(&GroupModel::z()).unwrap();
        let est = s_profile(&a, &f, &[0.2], 1..=1, DEFAULT_BUDGET_POINTS).unwrap();
        let exact = alphabet_covering(&a, 0.2).unwrap();
        assert!(exact.exact);
        assert!((est.rows[0].s_upper - (exact.upper as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn slopes_need_three_points() {
        let a = MetricAlphabet::binary();
        let f = folner_boxes(&GroupModel::z()).unwrap();
        let est = s_profile(&a, &f, &[0.5, 0.25], 1..=2, DEFAULT_BUDGET_POINTS).unwrap();
        assert!(mdim_slopes(&est).is_err());
        let est = s_profile(&a, &f, &[0.5, 0.25, 0.1, 0.05], 1..=3, DEFAULT_BUDGET_POINTS).unwrap();
        let s = mdim_slopes(&est).unwrap();
        assert!(s.upper_slope <= std::f64::consts::LN_2 / 0.1f64.ln().abs() + 1e-12);
    }

    #[test]
    fn quantized_slope_near_one() {
        let f = folner_boxes(&GroupModel::z()).unwrap();
        let est = quantized_profile(&f, &[0.25, 0.125, 1.0 / 16.0, 1.0 / 32.0], 1..=1, DEFAULT_BUDGET_POINTS).unwrap();
        let s = mdim_slopes(&est).unwrap();
        assert!((s.lower_slope - 1.0).abs() < 0.2, "{s:?}");
        assert!((s.lsq_slope - 1.0).abs() < 0.2, "{s:?}");
    }
}
