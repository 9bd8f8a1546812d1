//! Entropy and mutual information of finite distributions, in nats, and the
//! standard inequalities as checkable predicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spaces::OrbitMetric;

/// Normalization tolerance for probability tables.
pub const NORM_TOL: f64 = 1e-12;
/// Slack allowed on every information inequality.
pub const INEQ_SLACK: f64 = 1e-9;

/// `-Σ p log p` with `0 log 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// `H(p) = -p log p - (1-p) log (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {p} is not a finite nonnegative number")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidDistribution(format!("mass sums to {total}")));
    }
    Ok(())
}

/// Probability mass function over a finite support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pmf<T = usize> {
    support: Vec<T>,
    probs: Vec<f64>,
}

impl<T> Pmf<T> {
    pub fn new(support: Vec<T>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return invalid(format!("{} outcomes but {} probabilities", support.len(), probs.len()));
        }
        check_probs(&probs)?;
        Ok(Pmf { support, probs })
    }

    pub fn uniform(support: Vec<T>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn point(x: T) -> Self {
        Pmf { support: vec![x], probs: vec![1.0] }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    /// Drops zero-mass outcomes.
    pub fn trimmed(self) -> Self {
        let (support, probs) = self.support.into_iter().zip(self.probs).filter(|(_, p)| *p > 0.0).unzip();
        Pmf { support, probs }
    }
}

impl Pmf<usize> {
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Self::new((0..probs.len()).collect(), probs)
    }
}

/// Row-stochastic matrix `ν(y|x)`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub rows: usize,
    pub cols: usize,
    pub k: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, k: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || k.len() != rows * cols {
            return invalid(format!("kernel of {} entries for shape {rows}x{cols}", k.len()));
        }
        for r in 0..rows {
            check_probs(&k[r * cols..(r + 1) * cols])
                .map_err(|e| Error::InvalidDistribution(format!("kernel row {r}: {e}")))?;
        }
        Ok(Kernel { rows, cols, k })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.k[r * self.cols..(r + 1) * self.cols]
    }

    /// `(1-t) self + t other`.
    pub fn mix(&self, other: &Kernel, t: f64) -> Result<Kernel> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return invalid("kernel shapes differ");
        }
        let k = self.k.iter().zip(&other.k).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        Ok(Kernel { rows: self.rows, cols: self.cols, k })
    }

    /// Joint `μ(x) ν(y|x)`.
    pub fn joint(&self, mu: &[f64]) -> Result<JointPmf> {
        if mu.len() != self.rows {
            return invalid(format!("input of size {} for a kernel with {} rows", mu.len(), self.rows));
        }
        let p = (0..self.rows)
            .flat_map(|r| self.row(r).iter().map(move |v| mu[r] * v))
            .collect::<Vec<_>>();
        JointPmf::new(self.rows, self.cols, p)
    }
}

/// `I(μ, ν)` for input pmf `μ` and kernel `ν`.
pub fn mutual_information_of(mu: &[f64], nu: &Kernel) -> Result<f64> {
    Ok(nu.joint(mu)?.mutual_information())
}

/// Joint distribution of `(X, Y)` as a row-major `rows × cols` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for JointPmf {
    type Error = Error;

    fn try_from(m: Vec<Vec<f64>>) -> Result<Self> {
        JointPmf::from_matrix(&m)
    }
}

impl From<JointPmf> for Vec<Vec<f64>> {
    fn from(j: JointPmf) -> Self {
        (0..j.rows).map(|r| j.row(r).to_vec()).collect()
    }
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p.len() != rows * cols {
            return invalid(format!("joint of {} entries for shape {rows}x{cols}", p.len()));
        }
        check_probs(&p)?;
        Ok(JointPmf { rows, cols, p })
    }

    pub fn from_matrix(m: &[Vec<f64>]) -> Result<Self> {
        let cols = m.first().map_or(0, Vec::len);
        if m.iter().any(|r| r.len() != cols) {
            return invalid("ragged joint matrix");
        }
        Self::new(m.len(), cols, m.iter().flatten().copied().collect())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("joint serializes")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.p[x * self.cols..(x + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|x| self.row(x).iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for x in 0..self.rows {
            for (acc, v) in m.iter_mut().zip(self.row(x)) {
                *acc += v;
            }
        }
        m
    }

    pub fn transpose(&self) -> JointPmf {
        let p = (0..self.cols).flat_map(|y| (0..self.rows).map(move |x| (x, y))).map(|(x, y)| self.get(x, y)).collect();
        JointPmf { rows: self.cols, cols: self.rows, p }
    }

    pub fn joint_entropy(&self) -> f64 {
        entropy(&self.p)
    }

    /// `H(X|Y)`.
    pub fn conditional_entropy_rows_given_cols(&self) -> f64 {
        self.joint_entropy() - entropy(&self.col_marginal())
    }

    /// `Σ p(x,y) log [p(x,y) / (p(x) p(y))]`.
    pub fn mutual_information(&self) -> f64 {
        let px = self.row_marginal();
        let py = self.col_marginal();
        let mut total = 0.0;
        for (x, &pxv) in px.iter().enumerate() {
            for (y, &pyv) in py.iter().enumerate() {
                let v = self.get(x, y);
                if v > 0.0 {
                    total += v * (v / (pxv * pyv)).ln();
                }
            }
        }
        total
    }

    /// Joint of `(X, f(Y))` with `f: Y → {0..out}`.
    pub fn map_cols(&self, f: &[usize], out: usize) -> Result<JointPmf> {
        if f.len() != self.cols || f.iter().any(|&z| z >= out) {
            return invalid("map must send every column into 0..out");
        }
        let mut p = vec![0.0; self.rows * out];
        for x in 0..self.rows {
            for (y, &z) in f.iter().enumerate() {
                p[x * out + z] += self.get(x, y);
            }
        }
        Ok(JointPmf { rows: self.rows, cols: out, p })
    }

    /// Total-variation distance to another joint of the same shape.
    pub fn tv_distance(&self, other: &JointPmf) -> f64 {
        0.5 * self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Outcome of a one-sided inequality check `lhs ≤ rhs + slack`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn le(lhs: f64, rhs: f64, slack: f64) -> Self {
        InequalityCheck { lhs, rhs, holds: lhs <= rhs + slack }
    }

    /// `lhs - rhs`, positive when the inequality is violated.
    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// `I(X; f(Y)) ≤ I(X; Y)`.
pub fn check_data_processing(j: &JointPmf, f: &[usize], out: usize) -> Result<InequalityCheck> {
    let processed = j.map_cols(f, out)?;
    Ok(InequalityCheck::le(processed.mutual_information(), j.mutual_information(), INEQ_SLACK))
}

/// Fano: `H(X|Y) ≤ H(P_e) + P_e log |X|` for the decoder `f: Y → X`.
pub fn check_fano(j: &JointPmf, decoder: &[usize]) -> Result<InequalityCheck> {
    if decoder.len() != j.cols() || decoder.iter().any(|&x| x >= j.rows()) {
        return invalid("decoder must map every column to a row");
    }
    let correct: f64 = decoder.iter().enumerate().map(|(y, &x)| j.get(x, y)).sum();
    let pe = (1.0 - correct).max(0.0);
    let rhs = binary_entropy(pe) + pe * (j.rows() as f64).ln();
    Ok(InequalityCheck::le(j.conditional_entropy_rows_given_cols(), rhs, INEQ_SLACK))
}

/// Maximum-a-posteriori decoder: each column maps to its heaviest row.
pub fn argmax_decoder(j: &JointPmf) -> Vec<usize> {
    (0..j.cols())
        .map(|y| {
            (0..j.rows()).fold(0, |best, x| if j.get(x, y) > j.get(best, y) { x } else { best })
        })
        .collect()
}

/// Joint distribution of `(X, Y, Z)`, indexed `((x·ny)+y)·nz+z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleJoint {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    p: Vec<f64>,
}

impl TripleJoint {
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        if nx * ny * nz == 0 || p.len() != nx * ny * nz {
            return invalid(format!("triple joint of {} entries for shape {nx}x{ny}x{nz}", p.len()));
        }
        check_probs(&p)?;
        Ok(TripleJoint { nx, ny, nz, p })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }

    fn pair<F: Fn(usize, usize, usize) -> (usize, usize)>(&self, rows: usize, cols: usize, key: F) -> JointPmf {
        let mut p = vec![0.0; rows * cols];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    let (r, c) = key(x, y, z);
                    p[r * cols + c] += self.get(x, y, z);
                }
            }
        }
        JointPmf { rows, cols, p }
    }

    /// `(X, Y)` marginal.
    pub fn xy(&self) -> JointPmf {
        self.pair(self.nx, self.ny, |x, y, _| (x, y))
    }

    /// `(Y, X)` marginal.
    pub fn yx(&self) -> JointPmf {
        self.pair(self.ny, self.nx, |x, y, _| (y, x))
    }

    /// `(Y, Z)` marginal.
    pub fn yz(&self) -> JointPmf {
        self.pair(self.ny, self.nz, |_, y, z| (y, z))
    }

    /// `(X, Z)` marginal.
    pub fn xz(&self) -> JointPmf {
        self.pair(self.nx, self.nz, |x, _, z| (x, z))
    }

    /// `(Y, (X, Z))` joint.
    pub fn y_xz(&self) -> JointPmf {
        let nz = self.nz;
        self.pair(self.ny, self.nx * nz, |x, y, z| (y, x * nz + z))
    }

    /// `P(x,z|y) = P(x|y) P(z|y)` for every `y` of positive mass, within `tol`.
    pub fn conditionally_independent_given_y(&self, tol: f64) -> bool {
        let xy = self.xy();
        let yz = self.yz();
        let py = xy.col_marginal();
        (0..self.ny).filter(|&y| py[y] > 0.0).all(|y| {
            (0..self.nx).all(|x| {
                (0..self.nz).all(|z| {
                    let lhs = self.get(x, y, z) / py[y];
                    let rhs = (xy.get(x, y) / py[y]) * (yz.get(y, z) / py[y]);
                    (lhs - rhs).abs() <= tol
                })
            })
        })
    }

    /// `P(x,z) = P(x) P(z)` within `tol`.
    pub fn x_z_independent(&self, tol: f64) -> bool {
        let xz = self.xz();
        let px = xz.row_marginal();
        let pz = xz.col_marginal();
        (0..self.nx).all(|x| (0..self.nz).all(|z| (xz.get(x, z) - px[x] * pz[z]).abs() <= tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditivityCheck {
    pub i_y_xz: f64,
    pub i_y_x: f64,
    pub i_y_z: f64,
    /// `X` and `Z` conditionally independent given `Y`.
    pub sub_applicable: bool,
    /// `I(Y; X,Z) ≤ I(Y;X) + I(Y;Z)`.
    pub sub_ok: bool,
    /// `X` and `Z` independent.
    pub super_applicable: bool,
    /// `I(Y; X,Z) ≥ I(Y;X) + I(Y;Z)`.
    pub super_ok: bool,
}

pub fn check_sub_super_additivity(t: &TripleJoint) -> AdditivityCheck {
    let i_y_xz = t.y_xz().mutual_information();
    let i_y_x = t.yx().mutual_information();
    let i_y_z = t.yz().mutual_information();
    AdditivityCheck {
        i_y_xz,
        i_y_x,
        i_y_z,
        sub_applicable: t.conditionally_independent_given_y(NORM_TOL),
        sub_ok: i_y_xz <= i_y_x + i_y_z + INEQ_SLACK,
        super_applicable: t.x_z_independent(NORM_TOL),
        super_ok: i_y_xz + INEQ_SLACK >= i_y_x + i_y_z,
    }
}

/// `(1 - 1/D) log |S| - H(1/D)`: the mutual information lower bound for a
/// uniform input on a `2Dε`-separated set reproduced with mean distortion `< ε`.
pub fn fano_bound(d: f64, set_size: usize) -> Result<f64> {
    if !(d > 2.0) {
        return invalid(format!("D must exceed 2, got {d}"));
    }
    if set_size == 0 {
        return invalid("separated set must be nonempty");
    }
    Ok((1.0 - 1.0 / d) * (set_size as f64).ln() - binary_entropy(1.0 / d))
}

/// `log |S| - |F| H(α) - α |F| log |A|` for the counting distortion.
pub fn fano_bound_linf(set_size: usize, f_size: usize, alpha: f64, a_size: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&alpha) {
        return invalid(format!("alpha must lie in [0, 1/2], got {alpha}"));
    }
    if set_size == 0 || f_size == 0 || a_size == 0 {
        return invalid("sizes must be positive");
    }
    let f = f_size as f64;
    Ok((set_size as f64).ln() - f * binary_entropy(alpha) - alpha * f * (a_size as f64).ln())
}

fn mix(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
}

/// Concavity in the input: `I((1-t)μ₁+tμ₂, ν) ≥ (1-t)I(μ₁,ν) + tI(μ₂,ν)`.
/// Returns the worst excess over `ts`.
pub fn check_concavity(mu1: &[f64], mu2: &[f64], nu: &Kernel, ts: &[f64]) -> Result<InequalityCheck> {
    let i1 = mutual_information_of(mu1, nu)?;
    let i2 = mutual_information_of(mu2, nu)?;
    worst(ts, |t| {
        Ok(InequalityCheck::le((1.0 - t) * i1 + t * i2, mutual_information_of(&mix(mu1, mu2, t), nu)?, INEQ_SLACK))
    })
}

/// Convexity in the kernel: `I(μ, (1-t)ν₁+tν₂) ≤ (1-t)I(μ,ν₁) + tI(μ,ν₂)`.
pub fn check_convexity(mu: &[f64], nu1: &Kernel, nu2: &Kernel, ts: &[f64]) -> Result<InequalityCheck> {
    let i1 = mutual_information_of(mu, nu1)?;
    let i2 = mutual_information_of(mu, nu2)?;
    worst(ts, |t| {
        Ok(InequalityCheck::le(mutual_information_of(mu, &nu1.mix(nu2, t)?)?, (1.0 - t) * i1 + t * i2, INEQ_SLACK))
    })
}

fn worst(ts: &[f64], f: impl Fn(f64) -> Result<InequalityCheck>) -> Result<InequalityCheck> {
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return invalid("mixing weights must lie in [0, 1]");
    }
    let mut out: Option<InequalityCheck> = None;
    for &t in ts {
        let c = f(t)?;
        if out.is_none_or(|o| c.excess() > o.excess()) {
            out = Some(c);
        }
    }
    out.ok_or_else(|| Error::InvalidArgument("empty t grid".into()))
}

/// Both halves of the concavity/convexity statement over a t-grid.
pub fn check_concavity_convexity(
    mu1: &[f64],
    mu2: &[f64],
    nu: &Kernel,
    mu: &[f64],
    nu1: &Kernel,
    nu2: &Kernel,
    ts: &[f64],
) -> Result<bool> {
    Ok(check_concavity(mu1, mu2, nu, ts)?.holds && check_convexity(mu, nu1, nu2, ts)?.holds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FanoOutcome {
    NotApplicable { reason: String },
    Holds { mutual_information: f64, bound: f64 },
    Violated { mutual_information: f64, bound: f64 },
}

impl FanoOutcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, FanoOutcome::Violated { .. })
    }
}

/// Checks `I(X;Y) ≥ (1-1/D) log|S| - H(1/D)` for a joint on `S × Y` after
/// verifying its hypotheses: uniform `X` on `S`, `S` pairwise `2Dε`-separated
/// under `metric`, and `E d(X,Y) < ε`.
pub fn empirical_fano_check(
    s: &[Vec<usize>],
    ys: &[Vec<usize>],
    joint: &JointPmf,
    metric: &OrbitMetric<'_>,
    eps: f64,
    d: f64,
) -> Result<FanoOutcome> {
    let bound = fano_bound(d, s.len().max(1))?;
    if joint.rows() != s.len() || joint.cols() != ys.len() {
        return invalid("joint shape does not match the point lists");
    }
    let na = |reason: String| Ok(FanoOutcome::NotApplicable { reason });
    let target = 1.0 / s.len() as f64;
    if joint.row_marginal().iter().any(|p| (p - target).abs() > NORM_TOL) {
        return na("input marginal is not uniform on S".into());
    }
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let dist = metric.dist(&s[i], &s[j])?;
            if dist < 2.0 * d * eps {
                return na(format!("points {i},{j} at distance {dist} < 2Dε"));
            }
        }
    }
    let mut expected = 0.0;
    for (i, x) in s.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            let p = joint.get(i, j);
            if p > 0.0 {
                expected += p * metric.dist(x, y)?;
            }
        }
    }
    if expected >= eps {
        return na(format!("expected distortion {expected} is not below {eps}"));
    }
    let mi = joint.mutual_information();
    Ok(if mi >= bound - INEQ_SLACK {
        FanoOutcome::Holds { mutual_information: mi, bound }
    } else {
        FanoOutcome::Violated { mutual_information: mi, bound }
    })
}

/// Randomized trial suite over seeded random joints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertySuiteConfig {
    pub trials: usize,
    pub seed: u64,
    /// Largest alphabet size per coordinate.
    pub max_dim: usize,
    /// Total-variation size of the continuity perturbation.
    pub continuity_eta: f64,
    pub continuity_slack: f64,
}

impl Default for PropertySuiteConfig {
    fn default() -> Self {
        PropertySuiteConfig { trials: 10_000, seed: 0, max_dim: 6, continuity_eta: 1e-6, continuity_slack: 1e-4 }
    }
}

pub const PROPERTY_NAMES: [&str; 10] = [
    "nonnegativity",
    "symmetry",
    "entropy_identity",
    "data_processing",
    "fano",
    "subadditivity",
    "superadditivity",
    "concavity",
    "convexity",
    "continuity",
];

/// One property's tally, laid out like a JUnit test case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCase {
    pub name: String,
    pub classname: String,
    pub trials: usize,
    pub applicable: usize,
    pub failures: usize,
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertySuiteReport {
    pub name: String,
    pub tests: usize,
    pub failures: usize,
    pub seed: u64,
    pub testcases: Vec<PropertyCase>,
}

impl PropertySuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    applicable: bool,
    excess: f64,
    failed: bool,
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { -rng.random::<f64>().max(1e-300).ln() })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn random_kernel(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Kernel {
    let k = (0..rows).flat_map(|_| random_probs(rng, cols)).collect();
    Kernel { rows, cols, k }
}

/// Random triple of one of three kinds: unconstrained, `X - Y - Z` Markov,
/// or `X ⫫ Z`.
fn random_triple(rng: &mut ChaCha8Rng, kind: usize, max_dim: usize) -> TripleJoint {
    let nx = rng.random_range(2..=max_dim);
    let ny = rng.random_range(2..=max_dim);
    let nz = rng.random_range(2..=max_dim);
    let mut p = vec![0.0; nx * ny * nz];
    let idx = |x: usize, y: usize, z: usize| (x * ny + y) * nz + z;
    match kind {
        0 => p = random_probs(rng, nx * ny * nz),
        1 => {
            let py = random_probs(rng, ny);
            let x_given_y = random_kernel(rng, ny, nx);
            let z_given_y = random_kernel(rng, ny, nz);
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        p[idx(x, y, z)] = py[y] * x_given_y.row(y)[x] * z_given_y.row(y)[z];
                    }
                }
            }
        }
        _ => {
            let px = random_probs(rng, nx);
            let pz = random_probs(rng, nz);
            let y_given_xz = random_kernel(rng, nx * nz, ny);
            for x in 0..nx {
                for z in 0..nz {
                    for y in 0..ny {
                        p[idx(x, y, z)] = px[x] * pz[z] * y_given_xz.row(x * nz + z)[y];
                    }
                }
            }
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    TripleJoint { nx, ny, nz, p }
}

fn run_trial(cfg: &PropertySuiteConfig, trial: usize) -> [Tally; 10] {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let triple = random_triple(&mut rng, trial % 3, cfg.max_dim.max(2));
    let j = triple.xy();
    let mut out = [Tally::default(); 10];
    let ineq = |c: InequalityCheck| Tally { applicable: true, excess: c.excess(), failed: !c.holds };

    let i_xy = j.mutual_information();
    let i_yx = j.transpose().mutual_information();
    out[0] = Tally { applicable: true, excess: -i_xy, failed: i_xy < -INEQ_SLACK };
    let asym = (i_xy - i_yx).abs();
    out[1] = Tally { applicable: true, excess: asym, failed: asym > INEQ_SLACK };
    let h_x = entropy(&j.row_marginal());
    let h_y = entropy(&j.col_marginal());
    let gap = (i_xy - (h_x + h_y - j.joint_entropy()))
        .abs()
        .max((i_xy - (h_x - j.conditional_entropy_rows_given_cols())).abs());
    out[2] = Tally { applicable: true, excess: gap, failed: gap > INEQ_SLACK };

    let out_size = rng.random_range(1..=j.cols());
    let f: Vec<usize> = (0..j.cols()).map(|_| rng.random_range(0..out_size)).collect();
    out[3] = ineq(check_data_processing(&j, &f, out_size).expect("valid map"));
    out[4] = ineq(check_fano(&j, &argmax_decoder(&j)).expect("valid decoder"));

    let add = check_sub_super_additivity(&triple);
    if add.sub_applicable {
        out[5] = Tally { applicable: true, excess: add.i_y_xz - add.i_y_x - add.i_y_z, failed: !add.sub_ok };
    }
    if add.super_applicable {
        out[6] = Tally { applicable: true, excess: add.i_y_x + add.i_y_z - add.i_y_xz, failed: !add.super_ok };
    }

    let (nx, ny) = (j.rows(), j.cols());
    let ts = [0.0, 0.25, 0.5, 0.75, 1.0, rng.random::<f64>()];
    let mu1 = random_probs(&mut rng, nx);
    let mu2 = random_probs(&mut rng, nx);
    let nu = random_kernel(&mut rng, nx, ny);
    out[7] = ineq(check_concavity(&mu1, &mu2, &nu, &ts).expect("shapes agree"));
    let nu2 = random_kernel(&mut rng, nx, ny);
    out[8] = ineq(check_convexity(&mu1, &nu, &nu2, &ts).expect("shapes agree"));

    let eta = cfg.continuity_eta;
    let mut p = j.entries().to_vec();
    let from = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
    let to = (from + 1 + rng.random_range(0..p.len() - 1)) % p.len();
    p[from] -= eta;
    p[to] += eta;
    let moved = JointPmf { rows: nx, cols: ny, p };
    let change = (moved.mutual_information() - i_xy).abs();
    out[9] = Tally { applicable: true, excess: change, failed: change > cfg.continuity_slack };
    out
}

/// Runs every property over `cfg.trials` seeded random instances. Each
/// trial owns an independent generator stream, so results do not depend on
/// thread scheduling.
pub fn run_property_suite(cfg: &PropertySuiteConfig) -> PropertySuiteReport {
    let tallies: Vec<[Tally; 10]> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    let testcases: Vec<PropertyCase> = PROPERTY_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut case = PropertyCase {
                name: name.to_string(),
                classname: "infotheory".into(),
                trials: cfg.trials,
                applicable: 0,
                failures: 0,
                max_excess: f64::NEG_INFINITY,
            };
            for t in tallies.iter().map(|t| t[k]).filter(|t| t.applicable) {
                case.applicable += 1;
                case.failures += t.failed as usize;
                case.max_excess = case.max_excess.max(t.excess);
            }
            if case.applicable == 0 {
                case.max_excess = 0.0;
            }
            case
        })
        .collect();
    PropertySuiteReport {
        name: "information_properties".into(),
        tests: testcases.len(),
        failures: testcases.iter().filter(|c| c.failures > 0).count(),
        seed: cfg.seed,
        testcases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{MetricAlphabet, OrbitKind};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.5, 0.5]) - LN2).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        let direct = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((Pmf::from_probs(vec![0.25, 0.75]).unwrap().entropy() - direct).abs() < 1e-15);
        assert!(Pmf::from_probs(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let diag = JointPmf::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((diag.mutual_information() - LN2).abs() < 1e-15);
        let prod = JointPmf::from_matrix(&[vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        assert!(prod.mutual_information().abs() < 1e-15);
        let bsc = JointPmf::from_matrix(&[vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        assert!((bsc.mutual_information() - (LN2 - binary_entropy(0.1))).abs() < 1e-14);
    }

    #[test]
    fn data_processing_examples() {
        let j = JointPmf::from_matrix(&[vec![0.3, 0.1, 0.0], vec![0.1, 0.2, 0.3]]).unwrap();
        let inj = check_data_processing(&j, &[2, 0, 1], 3).unwrap();
        assert!(inj.holds && (inj.lhs - inj.rhs).abs() < 1e-15);
        let constant = check_data_processing(&j, &[0, 0, 0], 1).unwrap();
        assert!(constant.holds && constant.lhs.abs() < 1e-15);
    }

    #[test]
    fn additivity_examples() {
        // X = Y = Z uniform on two symbols
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[7] = 0.5;
        let t = TripleJoint::new(2, 2, 2, p).unwrap();
        let c = check_sub_super_additivity(&t);
        assert!(c.sub_applicable && c.sub_ok);
        assert!(!c.super_applicable);
        assert!((c.i_y_xz - LN2).abs() < 1e-15);
    }

    #[test]
    fn fano_bounds() {
        let b = fano_bound(4.0, 16).unwrap();
        let expected = 0.75 * 16f64.ln() - binary_entropy(0.25);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 1.5171).abs() < 1e-4);
        assert!(fano_bound(4.0, 1).unwrap() < 0.0);
        assert!((fano_bound(1e6, 16).unwrap() - 16f64.ln()).abs() < 1e-4);
        assert!(fano_bound(2.0, 4).is_err());

        assert_eq!(fano_bound_linf(8, 4, 0.0, 2).unwrap(), 8f64.ln());
        let v = fano_bound_linf(8, 4, 0.125, 2).unwrap();
        assert!((v - (8f64.ln() - 4.0 * binary_entropy(0.125) - 0.5 * LN2)).abs() < 1e-15);
        assert!(fano_bound_linf(1, 4, 0.1, 2).unwrap() <= 0.0);
        assert!(fano_bound_linf(8, 4, 0.6, 2).is_err());
    }

    #[test]
    fn concavity_endpoints_are_equalities() {
        let nu = Kernel::new(2, 2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let c = check_concavity(&[0.3, 0.7], &[0.6, 0.4], &nu, &[0.0]).unwrap();
        assert!(c.holds && c.excess().abs() < 1e-15);
        let c = check_concavity(&[0.3, 0.7], &[0.6, 0.4], &nu, &[1.0]).unwrap();
        assert!(c.holds && c.excess().abs() < 1e-15);
    }

    #[test]
    fn empirical_fano_cases() {
        let a = MetricAlphabet::grid(16).unwrap();
        let metric = OrbitMetric::new(OrbitKind::Average, 1, &a);
        let s = vec![vec![0], vec![8], vec![16]];
        let identity = JointPmf::from_matrix(&[
            vec![1.0 / 3.0, 0.0, 0.0],
            vec![0.0, 1.0 / 3.0, 0.0],
            vec![0.0, 0.0, 1.0 / 3.0],
        ])
        .unwrap();
        let out = empirical_fano_check(&s, &s, &identity, &metric, 0.05, 4.0).unwrap();
        assert!(matches!(out, FanoOutcome::Holds { .. }));

        let constant = JointPmf::from_matrix(&[vec![1.0 / 3.0], vec![1.0 / 3.0], vec![1.0 / 3.0]]).unwrap();
        let out = empirical_fano_check(&s, &[vec![8]], &constant, &metric, 0.05, 4.0).unwrap();
        assert!(matches!(out, FanoOutcome::NotApplicable { .. }));
    }

    #[test]
    fn joint_json_roundtrip() {
        let j = JointPmf::from_matrix(&[vec![0.25, 0.25], vec![0.5, 0.0]]).unwrap();
        assert_eq!(j.to_json(), "[[0.25,0.25],[0.5,0.0]]");
        assert_eq!(JointPmf::from_json(&j.to_json()).unwrap(), j);
        assert!(JointPmf::from_json("[[0.25,0.25],[0.5,0.1]]").is_err());
    }

    #[test]
    fn small_suite_passes() {
        let report = run_property_suite(&PropertySuiteConfig { trials: 300, ..Default::default() });
        assert!(report.passed(), "{report:#?}");
        assert!(report.testcases.iter().all(|c| c.applicable > 0));
    }
}
