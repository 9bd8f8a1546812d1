//! Rate-distortion oracle independent of the library solver.
//!
//! With `Φ(q, s) = -sD - Σ_x p_x ln Σ_y q_y e^{-s d(x,y)}`, the rate is
//! `R(D) = min_q max_{s≥0} Φ(q, s)` and every `q` gives the upper bound
//! `max_s Φ(q, s)`. The lower bound is the classical certificate
//! `Φ(q, s) - ln max_y Σ_x p_x e^{-s d(x,y)} / Σ_z q_z e^{-s d(x,z)}`.

#![allow(dead_code)]

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn log_partition(row: &[f64], q: &[f64], s: f64) -> f64 {
    let m = row
        .iter()
        .zip(q)
        .filter(|(_, &qy)| qy > 0.0)
        .map(|(&d, _)| -s * d)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().zip(q).filter(|(_, &qy)| qy > 0.0).map(|(&d, &qy)| qy * (-s * d - m).exp()).sum();
    m + sum.ln()
}

pub fn phi(p: &[f64], cost: &[f64], q: &[f64], s: f64, d: f64) -> f64 {
    let cols = q.len();
    let mut v = -s * d;
    for (x, &px) in p.iter().enumerate() {
        if px > 0.0 {
            v -= px * log_partition(&cost[x * cols..(x + 1) * cols], q, s);
        }
    }
    v
}

/// `max_{s ∈ [0, s_hi]} Φ(q, s)` by golden-section search (Φ is concave in `s`).
pub fn max_over_s(p: &[f64], cost: &[f64], q: &[f64], d: f64, s_hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0f64, s_hi);
    let f = |s: f64| phi(p, cost, q, s, d);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
        if b - a < 1e-13 * (1.0 + b) {
            break;
        }
    }
    let cands = [(f(0.0), 0.0), (f1, x1), (f2, x2), (f(s_hi), s_hi)];
    cands.into_iter().fold((f64::NEG_INFINITY, 0.0), |best, c| if c.0 > best.0 { c } else { best })
}

pub fn lower_certificate(p: &[f64], cost: &[f64], q: &[f64], s: f64, d: f64) -> f64 {
    let cols = q.len();
    let z: Vec<f64> = (0..p.len()).map(|x| log_partition(&cost[x * cols..(x + 1) * cols], q, s)).collect();
    let worst = (0..cols)
        .map(|y| p.iter().enumerate().map(|(x, &px)| px * (-s * cost[x * cols + y] - z[x]).exp()).sum::<f64>())
        .fold(0.0f64, f64::max);
    phi(p, cost, q, s, d) - worst.ln()
}

fn s_ceiling(d: f64) -> f64 {
    1e3 / d.max(1e-6)
}

/// Rate for at most three reproduction letters: a coarse grid of 50 points
/// per axis over `(q, s)`, then pattern search on `q` with exact inner maxima.
pub fn grid_search_rate(p: &[f64], cost: &[f64], cols: usize, d: f64) -> f64 {
    assert!((1..=3).contains(&cols));
    const STEPS: usize = 49;
    let s_hi = s_ceiling(d);
    let s_grid: Vec<f64> = (0..50).map(|i| s_hi * (1e-6f64).powf(1.0 - i as f64 / 49.0)).collect();
    let mut qs: Vec<Vec<f64>> = Vec::new();
    match cols {
        1 => qs.push(vec![1.0]),
        2 => qs.extend((0..=STEPS).map(|i| vec![i as f64 / STEPS as f64, 1.0 - i as f64 / STEPS as f64])),
        _ => {
            for i in 0..=STEPS {
                for j in 0..=STEPS - i {
                    let (a, b) = (i as f64 / STEPS as f64, j as f64 / STEPS as f64);
                    qs.push(vec![a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
    }
    let coarse = |q: &Vec<f64>| {
        s_grid.iter().chain([0.0].iter()).map(|&s| phi(p, cost, q, s, d)).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut q = qs.iter().min_by(|a, b| coarse(a).total_cmp(&coarse(b))).unwrap().clone();
    let value = |q: &[f64]| max_over_s(p, cost, q, d, s_hi).0;
    let mut best = value(&q);
    let mut h = 1.0 / STEPS as f64;
    while h > 1e-12 {
        let mut moved = false;
        for i in 0..cols {
            for j in 0..cols {
                if i == j {
                    continue;
                }
                let step = h.min(q[j]);
                if step <= 0.0 {
                    continue;
                }
                let mut trial = q.clone();
                trial[i] += step;
                trial[j] -= step;
                let v = value(&trial);
                if v < best {
                    best = v;
                    q = trial;
                    moved = true;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best.max(0.0)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

/// Certified `[lower, upper]` bracket on the rate by projected gradient
/// descent on `q ↦ max_s Φ(q, s)` with backtracking.
pub fn projected_gradient_band(p: &[f64], cost: &[f64], cols: usize, d: f64, max_iter: usize, tol: f64) -> Band {
    let s_hi = s_ceiling(d);
    let mut q = vec![1.0 / cols as f64; cols];
    let (mut f, mut s) = max_over_s(p, cost, &q, d, s_hi);
    let mut lower = lower_certificate(p, cost, &q, s, d);
    let mut step = 1.0;
    for _ in 0..max_iter {
        if f - lower < tol {
            break;
        }
        // Danskin: ∂Φ/∂q_y at the maximizing s
        let z: Vec<f64> = (0..p.len()).map(|x| log_partition(&cost[x * cols..(x + 1) * cols], &q, s)).collect();
        let grad: Vec<f64> = (0..cols)
            .map(|y| -p.iter().enumerate().map(|(x, &px)| px * (-s * cost[x * cols + y] - z[x]).exp()).sum::<f64>())
            .collect();
        loop {
            let mut trial: Vec<f64> = q.iter().zip(&grad).map(|(qi, g)| qi - step * g).collect();
            project_simplex(&mut trial);
            let (ft, st) = max_over_s(p, cost, &trial, d, s_hi);
            let decrease: f64 = q.iter().zip(&trial).zip(&grad).map(|((a, b), g)| g * (b - a)).sum::<f64>()
                + q.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * step);
            if ft <= f + decrease + 1e-15 || step < 1e-12 {
                q = trial;
                f = ft;
                s = st;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        lower = lower.max(lower_certificate(p, cost, &q, s, d));
    }
    Band { lower: lower.max(0.0), upper: f.max(0.0) }
}
