use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmcert::freealg::{parse_poly, MatrixTuple};
use qmcert::linalg::{self, CMat};
use qmcert::qmodule::preset_by_name;
use qmcert::repsearch::{compress, sample_feasible, search_lower, unitary_dilate, Isometry, SearchConfig};

fn contraction(seed: u64, n: usize, scale: f64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = linalg::gaussian_matrix(n, n, &mut rng);
    let s = linalg::spectral_norm(&g);
    g * num_complex::Complex64::new(scale / s, 0.0)
}

/// Coordinate isometry onto rows `start..start + len` of `C^total`.
fn coordinate(total: usize, start: usize, len: usize) -> Isometry {
    let mut v = CMat::zeros(total, len);
    for j in 0..len {
        v[(start + j, j)] = linalg::ONE;
    }
    Isometry::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dilation_is_unitary_with_exact_corner(seed in 0u64..10_000, n in 1usize..5, scale in 0.0f64..=1.0) {
        let t = contraction(seed, n, scale);
        let u = unitary_dilate(&t).unwrap();
        prop_assert!(linalg::identity_residual(&(u.adjoint() * &u)) < 1e-10);
        prop_assert!(linalg::max_abs_diff(&u.view((0, 0), (n, n)).into_owned(), &t) == 0.0);
    }

    #[test]
    fn compressing_a_direct_sum_recovers_summands(s1 in 0u64..1000, s2 in 0u64..1000, n1 in 1usize..4, n2 in 1usize..4) {
        let q = preset_by_name("row_ball:2").unwrap();
        let a = sample_feasible(&q, n1, &mut ChaCha8Rng::seed_from_u64(s1)).unwrap();
        let b = sample_feasible(&q, n2, &mut ChaCha8Rng::seed_from_u64(s2)).unwrap();
        let sum = a.direct_sum(&b).unwrap();
        let back_a = compress(&sum, &coordinate(n1 + n2, 0, n1)).unwrap();
        let back_b = compress(&sum, &coordinate(n1 + n2, n1, n2)).unwrap();
        for (x, y) in [(&a, &back_a), (&b, &back_b)] {
            for (m, k) in x.mats().iter().zip(y.mats()) {
                prop_assert!(linalg::max_abs_diff(m, k) == 0.0);
            }
        }
    }

    #[test]
    fn compressions_of_feasible_points_stay_feasible(seed in 0u64..1000) {
        let q = preset_by_name("cube:2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_feasible(&q, 4, &mut rng).unwrap();
        let v = Isometry::haar(4, 2, &mut rng).unwrap();
        prop_assert!(q.violation(&compress(&x, &v).unwrap()).unwrap() <= 1e-10);
    }
}

fn small_search(seed: u64) -> SearchConfig {
    SearchConfig { n: 2, restarts: 3, iterations: 40, step: 0.5, seed }
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let q = preset_by_name("row_ball:2").unwrap();
    let a = parse_poly(&q.sig, "z1 * z2 + z2^* * z1").unwrap();
    let r1 = search_lower(&a, &q, &small_search(7)).unwrap();
    let r2 = search_lower(&a, &q, &small_search(7)).unwrap();
    assert_eq!(r1.value.to_bits(), r2.value.to_bits());
    assert_eq!(r1.restart, r2.restart);
    assert_eq!(r1.x.to_text(), r2.x.to_text());
}

#[test]
fn search_outputs_are_feasible() {
    for name in ["free_group:2", "row_ball:2", "column_ball:2", "cube:2", "isometry:2", "toeplitz", "pencil_ball:2"] {
        let q = preset_by_name(name).unwrap();
        let a = parse_poly(&q.sig, if q.sig.nvars() == 1 { "z" } else { "z1 + z2" }).unwrap();
        let r = search_lower(&a, &q, &small_search(1)).unwrap();
        assert!(r.violation <= 1e-8, "{name}: {}", r.violation);
        let x: &MatrixTuple = &r.x;
        assert!(q.violation(x).unwrap() <= 1e-8, "{name}");
        assert!((a.evaluate(x).map(|m| linalg::spectral_norm(&m)).unwrap() - r.value).abs() < 1e-9);
    }
}
