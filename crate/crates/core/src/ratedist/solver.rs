//! Blahut–Arimoto alternating minimization at a fixed multiplier, with
//! bisection on the multiplier to hit a distortion budget.
//!
//! At multiplier `s ≥ 0` the inner loop minimizes `I(X;Y) + s·E[ρ(X,Y)]`
//! over kernels by alternating between the kernel and the output marginal
//! `q`. Each sweep also yields Blahut's lower bound
//! `R(T) ≥ -sT + Σ_x p(x) log λ(x) - log max_y c(y)`, which holds for every
//! `s` and `q`, so the reported gap is a certificate rather than an estimate.

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::infotheory::Kernel;

/// Floor on output-marginal entries. Row-minimal weights are 1, so every
/// normalizer stays at least this large and `p/z` cannot overflow.
const Q_FLOOR: f64 = 1e-300;
/// Accelerated Blahut cycles before switching to Newton steps.
const NEWTON_AFTER: usize = 5;
/// Largest candidate set handled by dense Newton steps.
const NEWTON_MAX_COLS: usize = 700;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Strict budgets `< ε` are solved as `≤ ε(1 - strict_margin)`.
    pub strict_margin: f64,
    /// Upper multiplier bracket is `s_max_factor / target`.
    pub s_max_factor: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Stop the inner loop once the Blahut gap at fixed `s` drops below this.
    pub inner_tol: f64,
    /// Stop the multiplier search once the bracketing distortions differ by
    /// less than this fraction of the budget.
    pub target_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            strict_margin: 1e-9,
            s_max_factor: 50.0,
            max_outer: 200,
            max_inner: 20_000,
            inner_tol: 1e-11,
            target_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Bisection and the inner loop both met their tolerances.
    Converged,
    /// A constant reproduction already meets the budget; rate 0.
    Trivial,
    /// Even the best reproduction of every input exceeds the budget.
    Infeasible,
    /// An iteration cap was hit; the gap field bounds the error.
    NotConverged,
}

/// One point on a rate-distortion curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RDResult {
    /// Distortion parameter as supplied by the caller.
    pub eps: f64,
    /// Budget the solver enforced (`≤ target`).
    pub target: f64,
    /// `I(X;Y)` in nats for the returned kernel; infinite when infeasible.
    pub rate: f64,
    pub multiplier: f64,
    pub iterations: usize,
    pub distortion: f64,
    /// `rate` minus the best certified lower bound.
    pub gap: f64,
    pub status: SolveStatus,
}

impl RDResult {
    pub fn is_feasible(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdSolution {
    pub result: RDResult,
    /// Optimal kernel from source rows to codebook columns (absent when infeasible).
    pub kernel: Option<Kernel>,
    /// Best certified lower bound on the rate at `result.target`.
    pub lower_bound: f64,
}

struct Point {
    s: f64,
    q: Vec<f64>,
    kernel: Vec<f64>,
    distortion: f64,
    rate: f64,
    iterations: usize,
    converged: bool,
}

struct Problem<'a> {
    p: &'a [f64],
    cost: &'a [f64],
    rows: usize,
    cols: usize,
    row_min: Vec<f64>,
}

impl Problem<'_> {
    fn expected(&self, kernel: &[f64]) -> f64 {
        let mut total = 0.0;
        for x in 0..self.rows {
            if self.p[x] == 0.0 {
                continue;
            }
            let r = x * self.cols;
            let row: f64 = (0..self.cols).map(|y| kernel[r + y] * self.cost[r + y]).sum();
            total += self.p[x] * row;
        }
        total
    }

    fn information(&self, kernel: &[f64]) -> f64 {
        let mut q = vec![0.0; self.cols];
        for x in 0..self.rows {
            for y in 0..self.cols {
                q[y] += self.p[x] * kernel[x * self.cols + y];
            }
        }
        let mut total = 0.0;
        for x in 0..self.rows {
            if self.p[x] == 0.0 {
                continue;
            }
            for y in 0..self.cols {
                let k = kernel[x * self.cols + y];
                if k > 0.0 {
                    total += self.p[x] * k * (k / q[y]).ln();
                }
            }
        }
        total.max(0.0)
    }

    /// One Blahut sweep at `q`: fills `z` and `c`, returns the dual
    /// objective `G(q) = -Σ p log z`, the fixed-point gap and the lower bound.
    fn sweep(&self, w: &[f64], q: &[f64], z: &mut [f64], c: &mut [f64], s: f64, target: f64) -> (f64, f64, f64) {
        let (rows, cols) = (self.rows, self.cols);
        for x in 0..rows {
            let r = &w[x * cols..(x + 1) * cols];
            z[x] = r.iter().zip(q).map(|(a, b)| a * b).sum();
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..rows {
            if self.p[x] == 0.0 {
                continue;
            }
            let f = self.p[x] / z[x];
            for (cy, wv) in c.iter_mut().zip(&w[x * cols..(x + 1) * cols]) {
                *cy += f * wv;
            }
        }
        let log_max_c = c.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
        let mean_log_c: f64 =
            q.iter().zip(c.iter()).filter(|(_, cv)| **cv > 0.0).map(|(qv, cv)| qv * cv * cv.ln()).sum();
        let g: f64 = -(0..rows).filter(|&x| self.p[x] > 0.0).map(|x| self.p[x] * z[x].ln()).sum::<f64>();
        let shift: f64 = (0..rows).map(|x| self.p[x] * self.row_min[x]).sum();
        (g, log_max_c - mean_log_c, g + s * shift - log_max_c - s * target)
    }

    fn dual(&self, w: &[f64], q: &[f64], z: &mut [f64]) -> f64 {
        let cols = self.cols;
        -(0..self.rows)
            .filter(|&x| self.p[x] > 0.0)
            .map(|x| {
                z[x] = w[x * cols..(x + 1) * cols].iter().zip(q).map(|(a, b)| a * b).sum();
                self.p[x] * z[x].ln()
            })
            .sum::<f64>()
    }

    /// Sequential quadratic steps on `f(q) = -Σ p log (Wq) + Σ q` over
    /// `q ≥ 0`, restricted to columns that carry mass or nearly satisfy the
    /// optimality condition `c_y = 1`. Each quadratic model is minimized
    /// exactly by a primal active-set method. Returns `None` when the
    /// candidate set is too large for dense factorization, `Some(false)`
    /// when no decrease could be made.
    fn newton_step(&self, w: &[f64], q: &mut [f64], z: &[f64], c: &[f64]) -> Option<bool> {
        let (rows, cols) = (self.rows, self.cols);
        let q_max = q.iter().copied().fold(0.0, f64::max);
        let cand: Vec<usize> =
            (0..cols).filter(|&y| q[y] > 1e-12 * q_max || c[y] > 1.0 - 1e-4).collect();
        let m = cand.len();
        if m > NEWTON_MAX_COLS {
            return None;
        }
        let live: Vec<usize> = (0..rows).filter(|&x| self.p[x] > 0.0).collect();
        // A = diag(sqrt(p)/z) W restricted to candidates; H = A^T A.
        let a = DMatrix::from_fn(live.len(), m, |i, j| {
            let x = live[i];
            self.p[x].sqrt() / z[x] * w[x * cols + cand[j]]
        });
        let h = a.transpose() * &a;
        let g: Vec<f64> = cand.iter().map(|&y| 1.0 - c[y]).collect();
        let q0: Vec<f64> = cand.iter().map(|&y| q[y]).collect();
        // Minimize ½ xᵀHx + bᵀx over x ≥ 0 with b = g - H q0.
        let hq0 = &h * DVector::from_column_slice(&q0);
        let b: Vec<f64> = (0..m).map(|i| g[i] - hq0[i]).collect();
        let x = nonnegative_qp(&h, &b, &q0)?;
        let d: Vec<f64> = (0..m).map(|i| x[i] - q0[i]).collect();
        let slope: f64 = (0..m).map(|i| g[i] * d[i]).sum();
        if !(slope < 0.0) {
            return Some(false);
        }
        // f(q + t d) - f(q), evaluated with log1p so that tiny decreases
        // near the optimum are not lost to cancellation.
        let wd: Vec<f64> = live
            .iter()
            .map(|&x| cand.iter().enumerate().map(|(i, &y)| w[x * cols + y] * d[i]).sum::<f64>() / z[x])
            .collect();
        let d_sum: f64 = d.iter().sum();
        let change = |t: f64| -> f64 {
            let mut total = t * d_sum;
            for (k, &x) in live.iter().enumerate() {
                let r = t * wd[k];
                if !(r > -1.0) {
                    return f64::INFINITY;
                }
                total -= self.p[x] * r.ln_1p();
            }
            total
        };
        let mut t = 1.0;
        for _ in 0..60 {
            let delta = change(t);
            if delta <= 1e-4 * t * slope {
                for (i, &y) in cand.iter().enumerate() {
                    q[y] = (q0[i] + t * d[i]).max(0.0);
                }
                let total: f64 = q.iter().sum();
                q.iter_mut().for_each(|v| *v = (*v / total).max(Q_FLOOR));
                return Some(true);
            }
            t *= 0.5;
        }
        Some(false)
    }

    /// Runs the inner loop at multiplier `s` from the output marginal `q0`
    /// and returns the point together with its Blahut lower bound at `target`.
    /// Plain Blahut updates are accelerated by squared extrapolation, kept
    /// only when they lower the dual objective.
    fn blahut(&self, s: f64, q0: &[f64], target: f64, opts: &SolverOptions) -> (Point, f64) {
        let (rows, cols) = (self.rows, self.cols);
        let w: Vec<f64> = (0..rows * cols)
            .map(|i| (-s * (self.cost[i] - self.row_min[i / cols])).exp())
            .collect();
        let normalize = |q: &mut [f64]| {
            q.iter_mut().for_each(|v| *v = v.max(Q_FLOOR));
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
        };
        let mut q: Vec<f64> = q0.to_vec();
        normalize(&mut q);
        let mut z = vec![0.0; rows];
        let mut c = vec![0.0; cols];
        let mut best_lb = f64::NEG_INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let mut q1 = vec![0.0; cols];
        let mut q2 = vec![0.0; cols];
        let mut qx = vec![0.0; cols];
        let mut newton = true;
        let mut stalls = 0;
        while iterations < opts.max_inner {
            iterations += 1;
            let (g0, gap, lb) = self.sweep(&w, &q, &mut z, &mut c, s, target);
            best_lb = best_lb.max(lb);
            if gap < opts.inner_tol {
                converged = true;
                break;
            }
            if newton && iterations > NEWTON_AFTER {
                match self.newton_step(&w, &mut q, &z, &c) {
                    Some(true) => {
                        stalls = 0;
                        continue;
                    }
                    Some(false) if stalls < 2 => {
                        stalls += 1;
                        continue;
                    }
                    _ => newton = false,
                }
            }
            q1.iter_mut().zip(q.iter().zip(&c)).for_each(|(o, (a, b))| *o = a * b);
            normalize(&mut q1);
            let (_, gap1, lb1) = self.sweep(&w, &q1, &mut z, &mut c, s, target);
            best_lb = best_lb.max(lb1);
            q2.iter_mut().zip(q1.iter().zip(&c)).for_each(|(o, (a, b))| *o = a * b);
            normalize(&mut q2);
            if gap1 < opts.inner_tol {
                q.copy_from_slice(&q2);
                converged = true;
                break;
            }
            let (mut rr, mut vv) = (0.0, 0.0);
            for y in 0..cols {
                let r = q1[y] - q[y];
                let v = q2[y] - 2.0 * q1[y] + q[y];
                rr += r * r;
                vv += v * v;
            }
            let mut alpha = if vv > 0.0 { -(rr / vv).sqrt() } else { -1.0 };
            let mut accepted = false;
            while alpha < -1.0 {
                for y in 0..cols {
                    let r = q1[y] - q[y];
                    let v = q2[y] - 2.0 * q1[y] + q[y];
                    qx[y] = q[y] - 2.0 * alpha * r + alpha * alpha * v;
                }
                if qx.iter().all(|v| *v > 0.0) {
                    normalize(&mut qx);
                    if self.dual(&w, &qx, &mut z) <= g0 {
                        accepted = true;
                        break;
                    }
                }
                alpha = 0.5 * (alpha - 1.0);
                if alpha > -1.0 - 1e-3 {
                    break;
                }
            }
            if accepted {
                std::mem::swap(&mut q, &mut qx);
            } else {
                std::mem::swap(&mut q, &mut q2);
            }
        }
        let mut kernel = vec![0.0; rows * cols];
        for x in 0..rows {
            let r = x * cols;
            let zx: f64 = (0..cols).map(|y| w[r + y] * q[y]).sum();
            for y in 0..cols {
                kernel[r + y] = w[r + y] * q[y] / zx;
            }
        }
        let distortion = self.expected(&kernel);
        let rate = self.information(&kernel);
        (Point { s, q, kernel, distortion, rate, iterations, converged }, best_lb)
    }
}

/// `argmin ½ xᵀHx + bᵀx` over `x ≥ 0` by a primal active-set method
/// started from the feasible point `x0`.
fn nonnegative_qp(h: &DMatrix<f64>, b: &[f64], x0: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut x = x0.to_vec();
    let mut free: Vec<bool> = x.iter().map(|v| *v > 0.0).collect();
    let ridge = 1e-13 * (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..(4 * m + 20) {
        let idx: Vec<usize> = (0..m).filter(|&i| free[i]).collect();
        let k = idx.len();
        let mut y = vec![0.0; m];
        if k > 0 {
            let hf = DMatrix::from_fn(k, k, |i, j| h[(idx[i], idx[j])] + if i == j { ridge } else { 0.0 });
            let rhs = DVector::from_iterator(k, idx.iter().map(|&i| -b[i]));
            let sol = hf.cholesky()?.solve(&rhs);
            for (i, &j) in idx.iter().enumerate() {
                y[j] = sol[i];
            }
        }
        if idx.iter().all(|&i| y[i] > 0.0) {
            x = y;
            let hx = h * DVector::from_column_slice(&x);
            let worst = (0..m)
                .filter(|&i| !free[i])
                .map(|i| (i, hx[i] + b[i]))
                .min_by(|a, c| a.1.total_cmp(&c.1));
            match worst {
                Some((i, grad)) if grad < -1e-13 => free[i] = true,
                _ => return Some(x),
            }
        } else {
            let mut step = 1.0;
            for &i in &idx {
                if y[i] <= 0.0 {
                    step = f64::min(step, x[i] / (x[i] - y[i]));
                }
            }
            for &i in &idx {
                x[i] += step * (y[i] - x[i]);
                if x[i] <= 1e-300 || (y[i] <= 0.0 && x[i] <= 1e-15 * (1.0 + x0[i])) {
                    x[i] = 0.0;
                    free[i] = false;
                }
            }
        }
    }
    Some(x)
}

/// Minimizes `I(X;Y)` over kernels from `p` (length `rows`) to `cols`
/// reproductions subject to `E[cost] ≤ target`. `cost` is row-major.
pub fn solve(p: &[f64], cost: &[f64], cols: usize, eps: f64, target: f64, opts: &SolverOptions) -> Result<RdSolution> {
    let rows = p.len();
    if rows == 0 || cols == 0 || cost.len() != rows * cols {
        return invalid(format!("cost matrix of {} entries for shape {rows}x{cols}", cost.len()));
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return invalid("costs must be finite and nonnegative");
    }
    if !(target > 0.0) || !target.is_finite() {
        return invalid(format!("distortion budget must be positive, got {target}"));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > crate::infotheory::NORM_TOL {
        return invalid("source must be a probability vector");
    }
    let row_min: Vec<f64> =
        (0..rows).map(|x| cost[x * cols..(x + 1) * cols].iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let prob = Problem { p, cost, rows, cols, row_min };
    let d_min: f64 = (0..rows).map(|x| p[x] * prob.row_min[x]).sum();

    let hard: Vec<f64> = {
        let mut k = vec![0.0; rows * cols];
        for x in 0..rows {
            let r = x * cols;
            let y = (0..cols).find(|&y| cost[r + y] == prob.row_min[x]).expect("row has a minimum");
            k[r + y] = 1.0;
        }
        k
    };
    if d_min > target {
        return Ok(RdSolution {
            result: RDResult {
                eps,
                target,
                rate: f64::INFINITY,
                multiplier: f64::INFINITY,
                iterations: 0,
                distortion: d_min,
                gap: 0.0,
                status: SolveStatus::Infeasible,
            },
            kernel: None,
            lower_bound: f64::INFINITY,
        });
    }

    let col_cost: Vec<f64> = (0..cols).map(|y| (0..rows).map(|x| p[x] * cost[x * cols + y]).sum()).collect();
    let (y_star, d_max) =
        col_cost.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (y, v)| if v < b.1 { (y, v) } else { b });
    let constant: Vec<f64> = (0..rows * cols).map(|i| if i % cols == y_star { 1.0 } else { 0.0 }).collect();
    if d_max <= target {
        return Ok(RdSolution {
            result: RDResult {
                eps,
                target,
                rate: 0.0,
                multiplier: 0.0,
                iterations: 0,
                distortion: d_max,
                gap: 0.0,
                status: SolveStatus::Trivial,
            },
            kernel: Some(Kernel { rows, cols, k: constant }),
            lower_bound: 0.0,
        });
    }

    let mut iterations = 0;
    let mut lower_bound: f64 = 0.0;
    let mut all_converged = true;
    let mut lo = Point {
        s: 0.0,
        q: vec![1.0 / cols as f64; cols],
        kernel: constant,
        distortion: d_max,
        rate: 0.0,
        iterations: 0,
        converged: true,
    };
    let eval = |s: f64, q0: &[f64], iterations: &mut usize, lower_bound: &mut f64| {
        let (pt, lb) = prob.blahut(s, q0, target, opts);
        *iterations += pt.iterations;
        *lower_bound = lower_bound.max(lb);
        pt
    };

    // First probe at the scale where the slope of the curve is plausible,
    // never above `s_max_factor / target`; then expand or contract by 4x.
    let scale = (cols.min(rows) as f64).ln().max(1.0) / (d_max - d_min);
    let mut s = scale.min(opts.s_max_factor / target);
    let uniform = vec![1.0 / cols as f64; cols];
    let mut hi = eval(s, &uniform, &mut iterations, &mut lower_bound);
    let mut steps = 0;
    while hi.distortion > target && steps < 40 {
        lo = hi;
        s *= 4.0;
        steps += 1;
        hi = eval(s, &lo.q, &mut iterations, &mut lower_bound);
    }
    if steps == 0 {
        while steps < 10 {
            steps += 1;
            let pt = eval(hi.s / 4.0, &hi.q, &mut iterations, &mut lower_bound);
            if pt.distortion > target {
                lo = pt;
                break;
            }
            hi = pt;
        }
    }
    let mut bracket_ok = hi.distortion <= target;
    if !bracket_ok {
        // The budget sits at the hard-assignment limit; only s = ∞ reaches it.
        let rate = prob.information(&hard);
        hi = Point { s: f64::INFINITY, q: lo.q.clone(), kernel: hard, distortion: d_min, rate, iterations: 0, converged: false };
        bracket_ok = false;
    }

    // Time-share between the bracketing kernels so the budget is met exactly;
    // by convexity the mixture's rate is at most the chord.
    let mix = |lo: &Point, hi: &Point| -> (Vec<f64>, f64, f64) {
        if lo.distortion > target && hi.distortion < target {
            let lambda = ((lo.distortion - target) / (lo.distortion - hi.distortion) * (1.0 + 1e-12)).min(1.0);
            let mixed: Vec<f64> =
                lo.kernel.iter().zip(&hi.kernel).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
            let md = prob.expected(&mixed);
            let mr = prob.information(&mixed);
            if md <= target && mr <= hi.rate {
                return (mixed, md, mr);
            }
        }
        (hi.kernel.clone(), hi.distortion, hi.rate)
    };

    // Anderson–Björck false position on D - target in log s.
    let close = |lo: &Point, hi: &Point| lo.distortion - hi.distortion <= opts.target_tol * target;
    let mut best = mix(&lo, &hi);
    let mut outer_done = close(&lo, &hi) || best.2 - lower_bound <= opts.inner_tol;
    let mut outer = 0;
    let (mut f_lo, mut f_hi) = (lo.distortion - target, hi.distortion - target);
    let mut last_side = 0i8;
    while !outer_done && bracket_ok && outer < opts.max_outer {
        outer += 1;
        let next = if lo.s > 0.0 {
            let (u_lo, u_hi) = (lo.s.ln(), hi.s.ln());
            let width = u_hi - u_lo;
            let mut u = u_hi - f_hi * width / (f_hi - f_lo);
            if !(u > u_lo + 1e-6 * width && u < u_hi - 1e-6 * width) {
                u = 0.5 * (u_lo + u_hi);
            }
            u.exp()
        } else {
            0.5 * hi.s
        };
        let warm = if hi.distortion - target < target - lo.distortion { hi.q.clone() } else { lo.q.clone() };
        let pt = eval(next, &warm, &mut iterations, &mut lower_bound);
        all_converged &= pt.converged;
        let f_new = pt.distortion - target;
        if pt.distortion <= target {
            if last_side == 1 {
                let m = 1.0 - f_new / f_hi;
                f_lo *= if m > 0.0 { m } else { 0.5 };
            }
            f_hi = f_new;
            hi = pt;
            last_side = 1;
        } else {
            if last_side == -1 {
                let m = 1.0 - f_new / f_lo;
                f_hi *= if m > 0.0 { m } else { 0.5 };
            }
            f_lo = f_new;
            lo = pt;
            last_side = -1;
        }
        best = mix(&lo, &hi);
        outer_done = close(&lo, &hi) || best.2 - lower_bound <= opts.inner_tol;
        if hi.s - lo.s <= f64::EPSILON * hi.s {
            break;
        }
    }
    all_converged &= hi.converged;
    let (kernel, distortion, rate) = best;
    let status = if outer_done && all_converged { SolveStatus::Converged } else { SolveStatus::NotConverged };
    Ok(RdSolution {
        result: RDResult {
            eps,
            target,
            rate,
            multiplier: hi.s,
            iterations,
            distortion,
            gap: (rate - lower_bound).max(0.0),
            status,
        },
        kernel: Some(Kernel { rows, cols, k: kernel }),
        lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::binary_entropy;

    const LN2: f64 = std::f64::consts::LN_2;

    fn hamming(k: usize) -> Vec<f64> {
        (0..k * k).map(|i| if i / k == i % k { 0.0 } else { 1.0 }).collect()
    }

    #[test]
    fn binary_hamming_closed_form() {
        let opts = SolverOptions::default();
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let target = eps * (1.0 - opts.strict_margin);
            let sol = solve(&[0.5, 0.5], &hamming(2), 2, eps, target, &opts).unwrap();
            let exact = LN2 - binary_entropy(target);
            assert!((sol.result.rate - exact).abs() < 1e-9, "eps {eps}: {} vs {exact}", sol.result.rate);
            assert!(sol.result.distortion <= target);
            assert!(sol.lower_bound <= exact + 1e-12);
            assert!(sol.result.gap < 1e-7, "{:?}", sol.result);
        }
    }

    #[test]
    fn trivial_and_infeasible() {
        let opts = SolverOptions::default();
        let sol = solve(&[0.5, 0.5], &hamming(2), 2, 0.6, 0.6, &opts).unwrap();
        assert_eq!(sol.result.status, SolveStatus::Trivial);
        assert_eq!(sol.result.rate, 0.0);

        let sol = solve(&[1.0], &[0.0, 1.0], 2, 1e-3, 1e-3, &opts).unwrap();
        assert_eq!(sol.result.rate, 0.0);

        let far = vec![0.5, 0.5];
        let sol = solve(&[0.5, 0.5], &far, 1, 0.1, 0.1, &opts).unwrap();
        assert_eq!(sol.result.status, SolveStatus::Infeasible);
        assert!(sol.result.rate.is_infinite());
    }

    #[test]
    fn nonuniform_binary_source() {
        let opts = SolverOptions::default();
        let p = 0.3;
        let d = 0.1;
        let sol = solve(&[1.0 - p, p], &hamming(2), 2, d, d, &opts).unwrap();
        let exact = binary_entropy(p) - binary_entropy(d);
        assert!((sol.result.rate - exact).abs() < 1e-9);
    }
}
