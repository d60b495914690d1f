use proptest::prelude::*;

use qmcert::heisenberg::{harper_norm, irrep, root_rep, HeisenbergWord};
use qmcert::linalg::{self, CMat};
use qmcert::qmodule::preset_by_name;

fn coprime() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=9).prop_flat_map(|q| (0..q, Just(q))).prop_filter("coprime", |&(p, q)| gcd(p, q) == 1)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

fn relation_residual(a: &CMat, b: &CMat, c: &CMat) -> f64 {
    let n = a.nrows();
    let comm = a * b * a.adjoint() * b.adjoint();
    let mut r = linalg::max_abs_diff(&comm, c);
    for m in [a, b, c] {
        r = r.max(linalg::identity_residual(&(m.adjoint() * m)));
    }
    r.max(linalg::max_abs_diff(&(a * c), &(c * a))).max(linalg::max_abs_diff(&(b * c), &(c * b))).max(if n == 0 { 1.0 } else { 0.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn irreps_satisfy_the_relations((p, q) in coprime(), k1 in -3.2f64..3.2, k2 in -3.2f64..3.2) {
        let rep = irrep(p, q, k1, k2).unwrap();
        let m = rep.mats();
        prop_assert!(relation_residual(&m[0], &m[1], &m[2]) < 1e-13);
    }

    #[test]
    fn roots_are_feasible_for_the_group_module(n in 1i64..10, k in 0i64..10) {
        prop_assume!(k < n);
        let q = preset_by_name("heisenberg").unwrap();
        let rep = root_rep(n, k).unwrap();
        prop_assert_eq!(rep.dim(), n as usize);
        prop_assert!(q.violation(&rep).unwrap() <= 1e-12);
    }

    #[test]
    fn butterfly_is_symmetric_under_conjugation((p, q) in coprime()) {
        let a = harper_norm(p, q, 32).unwrap();
        let b = harper_norm(q - p, q, 32).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn group_law_matches_representation(i in -3i64..4, j in -3i64..4, k in -3i64..4,
                                         u in -3i64..4, v in -3i64..4, w in -3i64..4) {
        let g = HeisenbergWord::new(i, j, k);
        let h = HeisenbergWord::new(u, v, w);
        let rep = irrep(2, 5, 0.3, -0.7).unwrap();
        let lhs = g.mul(&h).evaluate(&rep);
        let rhs = g.evaluate(&rep) * h.evaluate(&rep);
        prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
        prop_assert_eq!(g.mul(&g.inverse()), HeisenbergWord::identity());
    }
}

#[test]
fn grid_refinement_converges_on_acceptance_fractions() {
    for (p, q) in [(1, 3), (1, 2), (2, 5), (5, 12), (1, 7)] {
        let vals: Vec<f64> = [4, 8, 16, 32, 64].iter().map(|&g| harper_norm(p, q, g).unwrap()).collect();
        let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for d in diffs.windows(2) {
            assert!(d[1] <= d[0] + 1e-12, "{p}/{q}: {diffs:?}");
        }
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{p}/{q}: {vals:?}");
    }
}
