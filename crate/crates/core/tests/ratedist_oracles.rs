mod support;

use amdim_core::groups::folner_boxes;
use amdim_core::infotheory::{binary_entropy, entropy};
use amdim_core::ratedist::{rd_normalized, rd_window, solve, DEFAULT_BUDGET_CELLS};
use amdim_core::{Distortion, GroupModel, InvariantMeasureModel, MetricAlphabet, Pmf, SolverOptions};
use proptest::prelude::*;
use support::oracle;

const LN2: f64 = std::f64::consts::LN_2;

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    })
}

fn small_problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(rows, cols)| {
        (simplex(rows), prop::collection::vec(0.0f64..1.0, rows * cols), Just(cols))
    })
}

fn min_max_distortion(p: &[f64], cost: &[f64], cols: usize) -> (f64, f64) {
    let dmin: f64 = p
        .iter()
        .enumerate()
        .map(|(x, px)| px * cost[x * cols..(x + 1) * cols].iter().cloned().fold(f64::INFINITY, f64::min))
        .sum();
    let dzero = (0..cols)
        .map(|y| p.iter().enumerate().map(|(x, px)| px * cost[x * cols + y]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (dmin, dzero)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_matches_grid_search((p, cost, cols) in small_problem(), frac in 0.05f64..0.95) {
        let (dmin, dzero) = min_max_distortion(&p, &cost, cols);
        prop_assume!(dzero - dmin > 1e-3);
        let d = dmin + frac * (dzero - dmin);
        let sol = solve(&p, &cost, cols, d, d, &SolverOptions::default()).unwrap();
        let grid = oracle::grid_search_rate(&p, &cost, cols, d);
        prop_assert!((sol.result.rate - grid).abs() < 1e-4, "solver {} grid {}", sol.result.rate, grid);
        prop_assert!(sol.result.distortion <= d * (1.0 + 1e-12));
    }

    #[test]
    fn rate_is_nonincreasing_in_budget((p, cost, cols) in small_problem(), a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let (dmin, dzero) = min_max_distortion(&p, &cost, cols);
        prop_assume!(dzero - dmin > 1e-3);
        let (lo, hi) = (a.min(b), a.max(b));
        let opts = SolverOptions::default();
        let r_lo = solve(&p, &cost, cols, lo, dmin + lo * (dzero - dmin), &opts).unwrap().result.rate;
        let r_hi = solve(&p, &cost, cols, hi, dmin + hi * (dzero - dmin), &opts).unwrap().result.rate;
        prop_assert!(r_hi <= r_lo + 1e-9, "{} > {}", r_hi, r_lo);
    }

    #[test]
    fn window_rate_nonincreasing_in_eps(site in simplex(5), e1 in 0.05f64..0.6, e2 in 0.05f64..0.6) {
        let a = MetricAlphabet::grid(4).unwrap();
        let src = Pmf::new((0..5).map(|i| vec![i]).collect(), site).unwrap();
        let book: Vec<Vec<usize>> = (0..5).map(|i| vec![i]).collect();
        let opts = SolverOptions::default();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        for mode in [Distortion::L1, Distortion::Lp { p: 2.0 }] {
            let r_lo = rd_window(&a, &src, &mode, lo, Some(&book), &opts).unwrap().result.rate;
            let r_hi = rd_window(&a, &src, &mode, hi, Some(&book), &opts).unwrap().result.rate;
            prop_assert!(r_hi <= r_lo + 1e-9);
        }
    }
}

#[test]
fn bernoulli_closed_form() {
    let a = MetricAlphabet::binary();
    let opts = SolverOptions::default();
    for p in [0.5, 0.3, 0.1] {
        let src = Pmf::new(vec![vec![0], vec![1]], vec![1.0 - p, p]).unwrap();
        for eps in [0.01, 0.05, 0.1, 0.2, 0.3] {
            let r = rd_window(&a, &src, &Distortion::L1, eps, None, &opts).unwrap().result.rate;
            let d = eps * (1.0 - opts.strict_margin);
            let expected = if d < p.min(1.0 - p) { binary_entropy(p) - binary_entropy(d) } else { 0.0 };
            assert!((r - expected).abs() < 1e-6, "p={p} eps={eps}: {r} vs {expected}");
        }
    }
}

#[test]
fn uniform_hamming_closed_form() {
    // k-ary uniform source with Hamming cost: log k - H(D) - D log(k - 1)
    for k in [3usize, 4, 6] {
        let a = MetricAlphabet::hamming(k).unwrap();
        let src = Pmf::new((0..k).map(|i| vec![i]).collect(), vec![1.0 / k as f64; k]).unwrap();
        for eps in [0.05, 0.2, 0.4] {
            let r = rd_window(&a, &src, &Distortion::L1, eps, None, &SolverOptions::default()).unwrap().result.rate;
            let d = eps * (1.0 - 1e-9);
            let expected = (k as f64).ln() - binary_entropy(d) - d * ((k - 1) as f64).ln();
            assert!((r - expected).abs() < 1e-6, "k={k} eps={eps}");
        }
    }
}

#[test]
fn product_measures_tensorize() {
    let a = MetricAlphabet::grid(2).unwrap();
    let f = folner_boxes(&GroupModel::z()).unwrap();
    let opts = SolverOptions::default();
    let site = vec![0.5, 0.3, 0.2];
    let mu = InvariantMeasureModel::product(site.clone()).unwrap();
    for mode in [Distortion::L1, Distortion::Lp { p: 2.0 }, Distortion::Linf { alpha: 0.1 }] {
        for eps in [0.15, 0.3, 0.6] {
            let out = rd_normalized(&mu, &a, &mode, eps, &f, 1..=3, DEFAULT_BUDGET_CELLS, &opts).unwrap();
            let single = out.rows[0].rate_per_symbol;
            for row in &out.rows[1..] {
                assert!((row.rate_per_symbol - single).abs() < 1e-7, "{mode:?} eps={eps}: {row:?} vs {single}");
            }
        }
    }
    assert!(entropy(&site) > 0.0);
}

#[test]
fn gradient_band_brackets_solver() {
    let p = [0.4, 0.35, 0.25];
    let cost = [0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0];
    for d in [0.05, 0.1, 0.2, 0.3] {
        let band = oracle::projected_gradient_band(&p, &cost, 3, d, 5000, 1e-10);
        let sol = solve(&p, &cost, 3, d, d, &SolverOptions::default()).unwrap();
        assert!(band.upper - band.lower < 1e-8, "{band:?}");
        assert!(sol.result.rate >= band.lower - 1e-9 && sol.result.rate <= band.upper + 1e-9);
        let grid = oracle::grid_search_rate(&p, &cost, 3, d);
        assert!((grid - band.upper).abs() < 1e-6);
    }
    let src = [0.5, 0.5];
    let ham = [0.0, 1.0, 1.0, 0.0];
    let band = oracle::projected_gradient_band(&src, &ham, 2, 0.1, 5000, 1e-12);
    assert!((band.upper - (LN2 - binary_entropy(0.1))).abs() < 1e-9);
}
