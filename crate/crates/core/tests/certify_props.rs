use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmcert::certify::{member_eps, norm_upper, CertifyOptions, NormMode};
use qmcert::freealg::{parse_poly, FreePoly};
use qmcert::linalg::{self, CMat};
use qmcert::qmodule::{localizing_block, preset_by_name, truncate, Generator, ReductionMode};
use qmcert::repsearch::{sample_feasible, search_lower, SearchConfig};

const PRESETS: [&str; 8] =
    ["free_group:1", "row_ball:1", "column_ball:1", "hrow_ball:1", "cube:1", "isometry:1", "toeplitz", "pencil_ball:1"];

fn hermitian_target(name: &str) -> FreePoly {
    let q = preset_by_name(name).unwrap();
    let v = if q.sig.is_hermitian_var(0) { q.sig.names()[0].clone() } else { format!("{0} + {0}^*", q.sig.names()[0]) };
    parse_poly(&q.sig, &v).unwrap()
}

#[test]
fn every_preset_generator_is_hermitian() {
    for name in PRESETS.iter().chain(&["heisenberg", "free_group:2", "cube:2", "pencil_ball:2", "sos_general:2"]) {
        let q = preset_by_name(name).unwrap();
        for g in &q.generators {
            // Relations generate an ideal and need not be hermitian.
            let err = match g {
                Generator::Scalar(p) => p.hermitian_error(),
                Generator::Pencil(m) => m.hermitian_error(),
                Generator::Ideal(_) => 0.0,
            };
            assert!(err < 1e-10, "{name}: {err}");
        }
    }
}

#[test]
fn norm_bound_is_monotone_in_degree() {
    let opts = CertifyOptions::default();
    for name in PRESETS {
        let q = preset_by_name(name).unwrap();
        let a = hermitian_target(name);
        let lo = norm_upper(&a, &q, 2, NormMode::Auto, &opts).unwrap().value;
        let hi = norm_upper(&a, &q, 4, NormMode::Auto, &opts).unwrap().value;
        assert!(hi <= lo + 1e-7, "{name}: d=2 gives {lo}, d=4 gives {hi}");
    }
}

#[test]
fn lower_bounds_never_exceed_upper_bounds() {
    let opts = CertifyOptions::default();
    let cfg = SearchConfig { n: 3, restarts: 6, iterations: 80, ..SearchConfig::default() };
    for name in PRESETS {
        let q = preset_by_name(name).unwrap();
        let a = hermitian_target(name);
        let upper = norm_upper(&a, &q, 2, NormMode::Auto, &opts).unwrap().value;
        let lower = search_lower(&a, &q, &cfg).unwrap();
        assert!(lower.violation <= 1e-8, "{name}");
        assert!(lower.value <= upper + 1e-4, "{name}: {} > {upper}", lower.value);
    }
}

#[test]
fn relations_and_their_negatives_are_members_in_pair_mode() {
    let opts = CertifyOptions { mode: ReductionMode::IdealPairs, ..CertifyOptions::default() };
    for name in ["toeplitz", "isometry:1", "isometry:2"] {
        let q = preset_by_name(name).unwrap();
        for g in &q.generators {
            if let Generator::Ideal(r) = g {
                for s in [1.0, -1.0] {
                    let out = member_eps(&r.scale_real(s), &q, r.degree() + 2, 1e-8, &opts).unwrap();
                    assert!(out.found(), "{name}: {s} * ({r})");
                }
            }
        }
    }
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = linalg::gaussian_matrix(n, n, rng);
    &g * g.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psd_gram_assignments_reconstruct_hermitian_elements(
        idx in 0usize..PRESETS.len(),
        d in 1usize..4,
        seed in 0u64..1000,
        pairs in any::<bool>(),
    ) {
        let q = preset_by_name(PRESETS[idx]).unwrap();
        let mode = if pairs { ReductionMode::IdealPairs } else { ReductionMode::Exact };
        let plan = truncate(&q, d.max(q.max_generator_degree()), mode).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for b in &plan.blocks {
            let g = random_psd(b.dim(), &mut rng);
            for (r, c, w, coeff) in localizing_block(&q, b, plan.reduction) {
                terms.push((w, coeff * g[(r, c)]));
            }
        }
        let p = FreePoly::from_terms(&q.sig, terms);
        prop_assert!(p.hermitian_error() <= 1e-10 * (1.0 + p.max_abs_coeff()));
    }

    #[test]
    fn certified_elements_are_positive_on_samples(
        idx in 0usize..PRESETS.len(),
        c in prop::collection::vec(-1.0f64..1.0, 3),
        seed in 0u64..1000,
    ) {
        let name = PRESETS[idx];
        let q = preset_by_name(name).unwrap();
        let x = hermitian_target(name);
        let x2 = &x * &x;
        let base = &x.scale_real(c[0]) + &x2.scale_real(c[1]);
        let shift = base.coeff_norm1() * (0.5 + 0.5 * c[2]);
        let a = &base + &FreePoly::real(&q.sig, shift);
        let eps = 1e-6;
        let out = member_eps(&a, &q, 2, eps, &CertifyOptions::default()).unwrap();
        if out.found() {
            let cert = out.certificate.as_ref().unwrap();
            prop_assert!(cert.min_eigenvalue() >= -1e-9);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shifted = &a + &FreePoly::constant(&q.sig, Complex64::new(eps, 0.0));
            for _ in 0..20 {
                let pt = sample_feasible(&q, 3, &mut rng).unwrap();
                prop_assert!(q.violation(&pt).unwrap() <= 1e-8);
                let v = linalg::min_eigenvalue(&shifted.evaluate(&pt).unwrap());
                prop_assert!(v >= -1e-6, "{}: {} at {}", name, a, v);
            }
        }
    }
}
