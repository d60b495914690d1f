use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmcert::linalg::{self, CMat};
use qmcert::sdp::{solve, Constraint, HermData, Objective, SdpProblem, SdpStatus, SolverOptions};

fn herm_data(mats: &[CMat]) -> HermData {
    let mut d = HermData::default();
    for (b, m) in mats.iter().enumerate() {
        for r in 0..m.nrows() {
            for c in r..m.ncols() {
                d.push(b, r, c, m[(r, c)]);
            }
        }
    }
    d
}

/// Random bounded problem with a strictly feasible point: `min tr(C G)` with
/// `C ≻ 0` and constraints satisfied by a PD matrix.
fn planted(seed: u64, blocks: &[usize], m: usize) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<CMat> = blocks
        .iter()
        .map(|&n| {
            let g = linalg::gaussian_matrix(n, n, &mut rng);
            &g * g.adjoint() + linalg::identity(n)
        })
        .collect();
    let constraints = (0..m)
        .map(|_| {
            let a: Vec<CMat> = blocks.iter().map(|&n| linalg::gaussian_hermitian(n, &mut rng)).collect();
            let data = herm_data(&a);
            let rhs = data.pair(&x0);
            Constraint { a: data, free: Vec::new(), rhs }
        })
        .collect();
    let c: Vec<CMat> = blocks
        .iter()
        .map(|&n| {
            let g = linalg::gaussian_matrix(n, n, &mut rng) * Complex64::new(0.3, 0.0);
            &g * g.adjoint() + linalg::identity(n) * Complex64::new(rng.random_range(0.1..1.0), 0.0)
        })
        .collect();
    SdpProblem { blocks: blocks.to_vec(), constraints, num_free: 0, objective: Some(Objective { c: herm_data(&c), free: Vec::new() }) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimal_solutions_are_feasible_and_dual_bounded(
        seed in 0u64..100_000,
        blocks in prop::collection::vec(1usize..4, 1..3),
        m in 1usize..5,
    ) {
        let p = planted(seed, &blocks, m);
        let opts = SolverOptions::default();
        let r = solve(&p, &opts).unwrap();
        prop_assert_eq!(r.status, SdpStatus::Optimal);
        prop_assert!(r.min_eigenvalue() >= -1e-9);
        let scale = 1.0 + p.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        prop_assert!(p.constraint_residual(&r.g, &r.free) <= opts.tol * scale * 10.0);
        prop_assert!(r.residuals.max() <= opts.tol);
        // Weak duality, up to the reported gap.
        let gap_allow = r.residuals.gap * (1.0 + r.primal_objective.abs()) + 1e-7;
        prop_assert!(r.primal_objective >= r.dual_objective - gap_allow);
        // The objective reported through the real embedding matches a direct
        // complex evaluation of the returned blocks.
        let direct = p.objective_value(&r.g, &r.free);
        prop_assert!((direct - r.primal_objective).abs() <= 1e-6 * (1.0 + direct.abs()), "{} vs {}", direct, r.primal_objective);
    }

    #[test]
    fn dual_matrix_is_psd_at_optimum(seed in 0u64..100_000, n in 1usize..4) {
        let p = planted(seed, &[n], 2);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        prop_assert_eq!(r.status, SdpStatus::Optimal);
        // Z = C - Σ y_k A_k must be PSD.
        let c = &p.objective.as_ref().unwrap().c.to_dense(&p.blocks)[0];
        let mut z = c.clone();
        for (k, con) in p.constraints.iter().enumerate() {
            z -= &con.a.to_dense(&p.blocks)[0] * Complex64::new(r.y[k], 0.0);
        }
        prop_assert!(linalg::min_eigenvalue(&z) >= -1e-6, "{}", linalg::min_eigenvalue(&z));
    }
}
