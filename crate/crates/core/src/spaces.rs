//! Finite metric models of a shift system, orbit metrics, separated sets and
//! covering numbers.
//!
//! A configuration is a vector of symbol indices, one per window element in
//! the window's sorted order. The shift acts by `(g·x)_h = x_{hg}` with
//! periodic extension over box windows.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{BoxGeometry, Elem, FiniteSubset, GroupModel};

pub type Config = Vec<usize>;

const TRIANGLE_SLACK: f64 = 1e-12;

/// Largest point count handled by exhaustive cover/packing search.
pub const EXACT_SEARCH_LIMIT: usize = 20;

/// Finite alphabet `A` with a metric `d_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetSpec", into = "AlphabetSpec")]
pub struct MetricAlphabet {
    labels: Vec<String>,
    dist: Vec<f64>,
    diam: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphabetSpec {
    pub labels: Vec<String>,
    pub metric: Vec<Vec<f64>>,
}

impl TryFrom<AlphabetSpec> for MetricAlphabet {
    type Error = Error;

    fn try_from(spec: AlphabetSpec) -> Result<Self> {
        MetricAlphabet::new(spec.labels, &spec.metric)
    }
}

impl From<MetricAlphabet> for AlphabetSpec {
    fn from(a: MetricAlphabet) -> Self {
        let metric = (0..a.size()).map(|i| a.row(i).to_vec()).collect();
        AlphabetSpec { labels: a.labels, metric }
    }
}

/// Checks symmetry, zero diagonal, positivity off the diagonal and the
/// triangle inequality on every triple.
pub fn validate_metric(matrix: &[Vec<f64>]) -> Result<()> {
    let k = matrix.len();
    if k == 0 {
        return Err(Error::InvalidMetric("empty alphabet".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidMetric(format!("row {i} has {} entries, expected {k}", row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{j}) = {v} is not a finite nonnegative number")));
            }
            if (i == j) != (v == 0.0) {
                return Err(Error::InvalidMetric(format!("d({i},{j}) = {v} violates identity of indiscernibles")));
            }
            if matrix[j][i] != v {
                return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                if matrix[i][l] > matrix[i][j] + matrix[j][l] + TRIANGLE_SLACK {
                    return Err(Error::InvalidMetric(format!("triangle inequality fails on ({i},{j},{l})")));
                }
            }
        }
    }
    Ok(())
}

impl MetricAlphabet {
    pub fn new(labels: Vec<String>, matrix: &[Vec<f64>]) -> Result<Self> {
        validate_metric(matrix)?;
        if labels.len() != matrix.len() {
            return Err(Error::InvalidMetric(format!(
                "{} labels for a {}x{} metric",
                labels.len(),
                matrix.len(),
                matrix.len()
            )));
        }
        let dist: Vec<f64> = matrix.iter().flatten().copied().collect();
        let diam = dist.iter().copied().fold(0.0, f64::max);
        Ok(MetricAlphabet { labels, dist, diam })
    }

    /// Discrete metric on `k` symbols.
    pub fn hamming(k: usize) -> Result<Self> {
        let matrix: Vec<Vec<f64>> =
            (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        Self::new((0..k).map(|i| i.to_string()).collect(), &matrix)
    }

    pub fn binary() -> Self {
        Self::hamming(2).expect("valid")
    }

    /// `A_m = {0, 1/m, ..., 1}` with `|x - y|`.
    pub fn grid(m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("grid alphabet needs m >= 1");
        }
        let matrix: Vec<Vec<f64>> = (0..=m)
            .map(|i| (0..=m).map(|j| i.abs_diff(j) as f64 / m as f64).collect())
            .collect();
        Self::new((0..=m).map(|i| format!("{i}/{m}")).collect(), &matrix)
    }

    /// Real points with `|x - y|`.
    pub fn from_points(values: &[f64]) -> Result<Self> {
        let matrix: Vec<Vec<f64>> =
            values.iter().map(|x| values.iter().map(|y| (x - y).abs()).collect()).collect();
        Self::new(values.iter().map(|v| v.to_string()).collect(), &matrix)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.size() + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let k = self.size();
        &self.dist[a * k..(a + 1) * k]
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }
}

/// Finite-alphabet shift over `group` restricted to `window`.
#[derive(Clone, Debug)]
pub struct SystemModel {
    pub alphabet: MetricAlphabet,
    pub group: GroupModel,
    pub window: FiniteSubset,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SystemModelSpec {
    alphabet: Vec<String>,
    metric: Vec<Vec<f64>>,
    group: String,
    window: FiniteSubset,
}

impl SystemModel {
    pub fn new(alphabet: MetricAlphabet, group: GroupModel, window: FiniteSubset) -> Result<Self> {
        if window.is_empty() {
            return invalid("empty window");
        }
        for e in &window {
            group.check_elem(e)?;
        }
        Ok(SystemModel { alphabet, group, window })
    }

    /// Loads `{alphabet, metric, group, window}`; the metric is validated.
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SystemModelSpec = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let alphabet = MetricAlphabet::new(spec.alphabet, &spec.metric)?;
        Self::new(alphabet, GroupModel::parse(&spec.group)?, spec.window)
    }

    pub fn to_json(&self) -> String {
        let spec = SystemModelSpec {
            alphabet: self.alphabet.labels().to_vec(),
            metric: (0..self.alphabet.size()).map(|i| self.alphabet.row(i).to_vec()).collect(),
            group: self.group.name(),
            window: self.window.clone(),
        };
        serde_json::to_string(&spec).expect("model serializes")
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// `(g·x)_h = x_{hg}`, indices wrapped periodically into the box window.
    pub fn shift(&self, x: &[usize], g: &Elem) -> Result<Config> {
        if x.len() != self.window.len() {
            return Err(Error::WindowMismatch { expected: self.window.len(), got: x.len() });
        }
        let geom = BoxGeometry::detect(&self.window).ok_or_else(|| Error::UnsupportedGroup {
            group: self.group.name(),
            what: "periodic shift on a non-box window",
        })?;
        shift_in_box(&self.group, &geom, x, g)
    }
}

/// Periodic right shift of a configuration on a box window.
pub fn shift_in_box(group: &GroupModel, geom: &BoxGeometry, x: &[usize], g: &Elem) -> Result<Config> {
    if x.len() != geom.len() {
        return Err(Error::WindowMismatch { expected: geom.len(), got: x.len() });
    }
    geom.to_set()
        .iter()
        .map(|h| {
            let idx = geom.index_of(&geom.wrap(&group.mul(h, g))).expect("wrapped into box");
            Ok(x[idx])
        })
        .collect()
}

/// All `k^len` configurations in lexicographic order.
pub fn all_configs(k: usize, len: usize, cap: usize) -> Result<Vec<Config>> {
    let total = checked_pow(k, len).filter(|&t| t <= cap).ok_or(Error::BudgetExceeded {
        needed: checked_pow(k, len).unwrap_or(usize::MAX),
        cap,
    })?;
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; len];
    for _ in 0..total {
        out.push(cur.clone());
        for pos in (0..len).rev() {
            cur[pos] += 1;
            if cur[pos] < k {
                break;
            }
            cur[pos] = 0;
        }
    }
    Ok(out)
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    /// `d_F = max_g d(x_g, y_g)`
    Max,
    /// `d̄_F = (1/|F|) Σ_g d(x_g, y_g)`
    Average,
}

#[derive(Clone, Copy, Debug)]
pub struct OrbitMetric<'a> {
    pub kind: OrbitKind,
    pub window_size: usize,
    pub base: &'a MetricAlphabet,
}

impl<'a> OrbitMetric<'a> {
    pub fn new(kind: OrbitKind, window_size: usize, base: &'a MetricAlphabet) -> Self {
        OrbitMetric { kind, window_size, base }
    }

    pub fn dist(&self, x: &[usize], y: &[usize]) -> Result<f64> {
        for c in [x, y] {
            if c.len() != self.window_size {
                return Err(Error::WindowMismatch { expected: self.window_size, got: c.len() });
            }
        }
        Ok(self.d(x, y))
    }

    #[inline]
    pub fn d(&self, x: &[usize], y: &[usize]) -> f64 {
        let it = x.iter().zip(y).map(|(&a, &b)| self.base.dist(a, b));
        match self.kind {
            OrbitKind::Max => it.fold(0.0, f64::max),
            OrbitKind::Average => it.sum::<f64>() / self.window_size as f64,
        }
    }
}

/// Greedy maximal `eps`-separated subset in index order, with certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub members: Vec<usize>,
    /// Every excluded point lies within `eps` of a member.
    pub maximal: bool,
}

pub fn separated_set(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<SeparatedSet> {
    separated_set_ordered(&(0..n).collect::<Vec<_>>(), dist, eps)
}

/// First-fit over `order`: a point is kept when it is at distance `>= eps`
/// from every point kept so far.
pub fn separated_set_ordered(
    order: &[usize],
    dist: impl Fn(usize, usize) -> f64,
    eps: f64,
) -> Result<SeparatedSet> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let mut members: Vec<usize> = Vec::new();
    for &p in order {
        if members.iter().all(|&m| dist(m, p) >= eps) {
            members.push(p);
        }
    }
    let maximal = order
        .iter()
        .all(|p| members.contains(p) || members.iter().any(|&m| dist(m, *p) < eps));
    Ok(SeparatedSet { members, maximal })
}

/// Greedy partition into cells of diameter `< eps`, seeded in index order.
/// The first point of each cell is its representative.
pub fn greedy_cover(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Vec<Vec<usize>> {
    let mut covered = vec![false; n];
    let mut cells = Vec::new();
    for i in 0..n {
        if covered[i] {
            continue;
        }
        covered[i] = true;
        let mut cell = vec![i];
        for j in i + 1..n {
            if !covered[j] && cell.iter().all(|&c| dist(c, j) < eps) {
                covered[j] = true;
                cell.push(j);
            }
        }
        cells.push(cell);
    }
    cells
}

fn closeness_masks(n: usize, dist: &impl Fn(usize, usize) -> f64, eps: f64) -> Vec<u32> {
    (0..n)
        .map(|i| (0..n).filter(|&j| dist(i, j) < eps).fold(0u32, |m, j| m | (1 << j)))
        .collect()
}

/// Exhaustive minimum number of sets of diameter `< eps` covering `n <= 20` points.
pub fn exact_min_cover(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<usize> {
    Ok(exact_min_cover_cells(n, dist, eps)?.len())
}

/// A minimum partition into cells of diameter `< eps`, for `n <= 20` points.
/// Cells list their points in increasing order.
pub fn exact_min_cover_cells(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<Vec<Vec<usize>>> {
    if n > EXACT_SEARCH_LIMIT {
        return invalid(format!("exhaustive cover limited to {EXACT_SEARCH_LIMIT} points"));
    }
    let adj = closeness_masks(n, &dist, eps);
    let mut memo = HashMap::new();
    let mut mask = if n == 0 { 0 } else { (1u32 << n) - 1 };
    min_partition(mask, &adj, &mut memo);
    let mut cells = Vec::new();
    while mask != 0 {
        let (_, clique) = memo[&mask];
        cells.push((0..n).filter(|&i| clique & (1 << i) != 0).collect());
        mask &= !clique;
    }
    Ok(cells)
}

fn min_partition(mask: u32, adj: &[u32], memo: &mut HashMap<u32, (usize, u32)>) -> usize {
    if mask == 0 {
        return 0;
    }
    if let Some(&(v, _)) = memo.get(&mask) {
        return v;
    }
    let p = mask.trailing_zeros() as usize;
    let mut cliques = Vec::new();
    maximal_cliques(1 << p, (mask & adj[p]) & !(1 << p), 0, adj, &mut cliques);
    let best = cliques
        .into_iter()
        .map(|c| (1 + min_partition(mask & !c, adj, memo), c))
        .min()
        .expect("p alone is a clique");
    memo.insert(mask, best);
    best.0
}

/// Bron–Kerbosch on bitmasks.
fn maximal_cliques(r: u32, mut p: u32, mut x: u32, adj: &[u32], out: &mut Vec<u32>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    while p != 0 {
        let v = p.trailing_zeros() as usize;
        let bit = 1u32 << v;
        maximal_cliques(r | bit, p & adj[v] & !bit, x & adj[v] & !bit, adj, out);
        p &= !bit;
        x |= bit;
    }
}

/// Exhaustive maximum `eps`-separated subset size for `n <= 20` points.
pub fn exact_max_separated(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<usize> {
    if n > EXACT_SEARCH_LIMIT {
        return invalid(format!("exhaustive packing limited to {EXACT_SEARCH_LIMIT} points"));
    }
    let adj = closeness_masks(n, &dist, eps);
    let mut memo = HashMap::new();
    Ok(max_independent(if n == 0 { 0 } else { (1u32 << n) - 1 }, &adj, &mut memo))
}

fn max_independent(mask: u32, adj: &[u32], memo: &mut HashMap<u32, usize>) -> usize {
    if mask == 0 {
        return 0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let p = mask.trailing_zeros() as usize;
    let without = max_independent(mask & !(1 << p), adj, memo);
    let with = 1 + max_independent(mask & !adj[p], adj, memo);
    let best = without.max(with);
    memo.insert(mask, best);
    best
}

/// Bracket on the covering number `#(points, d, eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverBracket {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
}

/// Greedy bracket: `lower` is a maximal separated set (each set of diameter
/// `< eps` holds at most one of its points), `upper` a greedy partition.
pub fn covering_bracket(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<CoverBracket> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if n == 0 {
        return Ok(CoverBracket { lower: 0, upper: 0, exact: true });
    }
    let lower = separated_set(n, &dist, eps)?.members.len();
    let upper = greedy_cover(n, &dist, eps).len();
    Ok(CoverBracket { lower, upper, exact: lower == upper })
}

/// Covering number; exhaustive for at most [`EXACT_SEARCH_LIMIT`] points,
/// greedy bracket otherwise.
pub fn covering_number(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Result<CoverBracket> {
    if n <= EXACT_SEARCH_LIMIT {
        if !(eps > 0.0) {
            return invalid("eps must be positive");
        }
        let v = exact_min_cover(n, dist, eps)?;
        return Ok(CoverBracket { lower: v, upper: v, exact: true });
    }
    covering_bracket(n, dist, eps)
}

/// `#(A, d_A, eps)` for the alphabet itself.
pub fn alphabet_covering(alphabet: &MetricAlphabet, eps: f64) -> Result<CoverBracket> {
    covering_number(alphabet.size(), |a, b| alphabet.dist(a, b), eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TameGrowthRow {
    pub eps: f64,
    pub delta: f64,
    pub covering: usize,
    /// `eps^delta · log #(A, d_A, eps)`, using the upper covering bound.
    pub value: f64,
}

/// Diagnostic table of `eps^delta · log #(A, d_A, eps)`. No verdict: tame
/// growth is a limit statement.
pub fn tame_growth_profile(
    alphabet: &MetricAlphabet,
    eps_grid: &[f64],
    delta_grid: &[f64],
) -> Result<Vec<TameGrowthRow>> {
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("eps grid must be strictly decreasing");
    }
    let mut rows = Vec::new();
    for &eps in eps_grid {
        let cover = alphabet_covering(alphabet, eps)?.upper;
        for &delta in delta_grid {
            rows.push(TameGrowthRow { eps, delta, covering: cover, value: eps.powf(delta) * (cover as f64).ln() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_metric_examples() {
        let a = MetricAlphabet::from_points(&[0.0, 0.5, 1.0]).unwrap();
        let x = [0usize, 2];
        let y = [1usize, 2];
        let max = OrbitMetric::new(OrbitKind::Max, 2, &a);
        let avg = OrbitMetric::new(OrbitKind::Average, 2, &a);
        assert_eq!(max.dist(&x, &y).unwrap(), 0.5);
        assert_eq!(avg.dist(&x, &y).unwrap(), 0.25);
        assert_eq!(max.dist(&x, &x).unwrap(), 0.0);
        assert!(matches!(max.dist(&x, &[0]), Err(Error::WindowMismatch { .. })));

        let single_max = OrbitMetric::new(OrbitKind::Max, 1, &a);
        let single_avg = OrbitMetric::new(OrbitKind::Average, 1, &a);
        assert_eq!(single_max.d(&[0], &[2]), 1.0);
        assert_eq!(single_avg.d(&[0], &[2]), 1.0);
    }

    #[test]
    fn metric_validation() {
        assert!(validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(validate_metric(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(validate_metric(&[vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        let bad_triangle = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(validate_metric(&bad_triangle).is_err());
        assert!(validate_metric(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn separated_examples() {
        let pts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let d = |i: usize, j: usize| (pts[i] - pts[j]).abs();
        let s = separated_set(11, d, 0.25).unwrap();
        assert_eq!(s.members, vec![0, 3, 6, 9]);
        assert!(s.maximal);

        let one = separated_set(1, |_, _| 0.0, 0.5).unwrap();
        assert_eq!(one.members, vec![0]);
        let wide = separated_set(11, d, 2.0).unwrap();
        assert_eq!(wide.members.len(), 1);
        assert!(separated_set(3, d, 0.0).is_err());
    }

    #[test]
    fn covering_examples() {
        let unit = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
        assert_eq!(covering_number(3, unit, 0.5).unwrap(), CoverBracket { lower: 3, upper: 3, exact: true });
        assert_eq!(covering_number(3, unit, 1.5).unwrap().upper, 1);
        let b = covering_bracket(3, unit, 0.5).unwrap();
        assert_eq!((b.lower, b.upper), (3, 3));
    }

    #[test]
    fn all_configs_order_and_budget() {
        let c = all_configs(2, 2, 100).unwrap();
        assert_eq!(c, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert!(matches!(all_configs(17, 3, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn shift_is_periodic() {
        let m = SystemModel::new(MetricAlphabet::binary(), GroupModel::z(), FiniteSubset::interval(0, 3)).unwrap();
        assert_eq!(m.shift(&[0, 1, 1], &Elem::from(1)).unwrap(), vec![1, 1, 0]);
        assert_eq!(m.shift(&[0, 1, 1], &Elem::from(3)).unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn model_json_validates_metric() {
        let good = r#"{"alphabet":["a","b"],"metric":[[0,1],[1,0]],"group":"Z","window":[[0],[1]]}"#;
        let m = SystemModel::from_json(good).unwrap();
        assert_eq!(m.window_len(), 2);
        let back = SystemModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.alphabet, m.alphabet);
        let bad = r#"{"alphabet":["a","b"],"metric":[[0,1],[0.5,0]],"group":"Z","window":[[0]]}"#;
        assert!(matches!(SystemModel::from_json(bad), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn tame_growth_rows() {
        let single = MetricAlphabet::hamming(1).unwrap();
        let rows = tame_growth_profile(&single, &[1.0], &[1.0]).unwrap();
        assert_eq!(rows[0].value, 0.0);
        let bin = MetricAlphabet::binary();
        let rows = tame_growth_profile(&bin, &[0.5, 0.25, 0.125], &[0.5]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].value < w[0].value));
        assert!(tame_growth_profile(&bin, &[0.1, 0.2], &[0.5]).is_err());
    }
}
