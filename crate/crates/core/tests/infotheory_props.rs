use amdim_core::infotheory::{
    argmax_decoder, check_data_processing, check_fano, check_sub_super_additivity, run_property_suite,
    PropertySuiteConfig, TripleJoint,
};
use amdim_core::{JointPmf, Kernel};
use proptest::prelude::*;

fn joint(rows: usize, cols: usize) -> impl Strategy<Value = JointPmf> {
    prop::collection::vec(0.0f64..1.0, rows * cols).prop_filter_map("zero mass", move |w| {
        let t: f64 = w.iter().sum();
        (t > 1e-3).then(|| JointPmf::new(rows, cols, w.into_iter().map(|x| x / t).collect()).unwrap())
    })
}

fn any_joint() -> impl Strategy<Value = JointPmf> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| joint(r, c))
}

/// `Σ p(x,y) log p(x,y) / (p(x) p(y))` straight from the definition.
fn kl_mutual_information(j: &JointPmf) -> f64 {
    let (px, py) = (j.row_marginal(), j.col_marginal());
    let mut total = 0.0;
    for x in 0..j.rows() {
        for y in 0..j.cols() {
            let p = j.get(x, y);
            if p > 0.0 {
                total += p * (p / (px[x] * py[y])).ln();
            }
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mutual_information_matches_definition(j in any_joint()) {
        let mi = j.mutual_information();
        prop_assert!(mi >= -1e-12);
        prop_assert!((mi - kl_mutual_information(&j)).abs() < 1e-10);
        prop_assert!((mi - j.transpose().mutual_information()).abs() < 1e-12);
    }

    #[test]
    fn processing_cannot_add_information(j in any_joint(), f in prop::collection::vec(0usize..3, 6)) {
        let map: Vec<usize> = f[..j.cols()].to_vec();
        prop_assert!(check_data_processing(&j, &map, 3).unwrap().holds);
    }

    #[test]
    fn fano_holds_for_map_decoder(j in any_joint()) {
        let dec = argmax_decoder(&j.transpose());
        prop_assert!(check_fano(&j.transpose(), &dec).unwrap().holds);
    }

    #[test]
    fn markov_chains_are_subadditive(px in prop::collection::vec(0.01f64..1.0, 3), k1 in prop::collection::vec(0.01f64..1.0, 9), k2 in prop::collection::vec(0.01f64..1.0, 9)) {
        // X -> Y -> Z built from two random kernels: X and Z independent given Y
        let norm = |v: &[f64]| { let t: f64 = v.iter().sum(); v.iter().map(|x| x / t).collect::<Vec<_>>() };
        let px = norm(&px);
        let rows = |k: &[f64]| (0..3).flat_map(|r| norm(&k[3 * r..3 * r + 3])).collect::<Vec<_>>();
        let (a, b) = (Kernel::new(3, 3, rows(&k1)).unwrap(), Kernel::new(3, 3, rows(&k2)).unwrap());
        let mut p = vec![0.0; 27];
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    p[(x * 3 + y) * 3 + z] = px[x] * a.row(x)[y] * b.row(y)[z];
                }
            }
        }
        let t = TripleJoint::new(3, 3, 3, p).unwrap();
        let c = check_sub_super_additivity(&t);
        prop_assert!(c.sub_applicable && c.sub_ok);
    }
}

#[test]
fn seeded_suite_passes_and_repeats() {
    let cfg = PropertySuiteConfig { trials: 2000, seed: 11, ..PropertySuiteConfig::default() };
    let a = run_property_suite(&cfg);
    assert!(a.passed(), "{a:?}");
    assert_eq!(a, run_property_suite(&cfg));
}
