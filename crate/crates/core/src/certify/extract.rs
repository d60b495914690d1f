//! Turning a Gram certificate into an explicit list of weighted squares.
//!
//! Before factoring, the certificate is pushed to a low-rank face of its
//! feasible set: with `G_b = U_b Λ_b U_b*` every direction `G_b(t) = U_b (Λ_b +
//! t S_b) U_b*` that leaves the represented polynomial unchanged is followed
//! until some `Λ_b + t S_b` becomes singular. Each step drops at least one
//! rank.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gram::hermitian_from_params;
use super::{ideal_element, GramCertificate, IdealMultiplier, PSD_TOL};
use crate::error::{Error, Result};
use crate::freealg::{FreePoly, Word};
use crate::linalg::{self, CMat};
use crate::qmodule::{localizing_block, Generator, ModuleDescription, PlannedBlock};

/// Reconstruction tolerance for extracted decompositions.
pub const EXTRACT_TOL: f64 = 1e-6;
const EIG_DROP: f64 = 1e-10;
const NULL_TOL: f64 = 1e-10;
/// Factor coefficients below this fraction of `√λ` are dropped.
const COEFF_DROP: f64 = 1e-8;
const MAX_REDUCTION_PARAMS: usize = 600;

/// `Σ_{a,b} q_a* L_ab q_b`, where `L` is the generator (`1` for squares).
#[derive(Clone, Debug)]
pub struct SquareTerm {
    pub generator: Option<usize>,
    pub q: Vec<FreePoly>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub terms: Vec<SquareTerm>,
    /// Sum of all relation multiples; zero in exact-reduction mode.
    pub ideal: FreePoly,
    pub residual: f64,
    pub text: String,
}

/// Factors a certificate as a sum of `q* g q` terms, after reducing rank.
pub fn extract_certificate(cert: &GramCertificate, q: &ModuleDescription) -> Result<Decomposition> {
    let scale = 1.0 + cert.target.max_abs_coeff();
    let min_eig = cert.min_eigenvalue();
    if min_eig < -PSD_TOL * scale {
        return Err(Error::Numerical(format!("Gram matrix is indefinite (smallest eigenvalue {min_eig:.3e})")));
    }
    let reduced = reduce_rank(cert, q).filter(|c| c.reconstruction_error(q) <= EXTRACT_TOL * scale);
    let cert = reduced.as_ref().unwrap_or(cert);
    let sig = &q.sig;
    let lam_max = cert.blocks.iter().map(|b| linalg::max_eigenvalue(&b.gram).max(0.0)).fold(1.0, f64::max);
    let mut terms = Vec::new();
    for b in &cert.blocks {
        let (vals, vecs) = linalg::herm_eig(&b.gram);
        for (k, &lam) in vals.iter().enumerate() {
            if lam <= EIG_DROP * lam_max {
                continue;
            }
            let s = lam.sqrt();
            let cut = COEFF_DROP * s;
            let qv: Vec<FreePoly> = (0..b.size)
                .map(|a| {
                    FreePoly::from_terms(
                        sig,
                        b.words
                            .iter()
                            .enumerate()
                            .map(|(j, w)| (w.clone(), s * vecs[(j * b.size + a, k)].conj()))
                            .filter(|(_, c)| c.norm() > cut),
                    )
                })
                .collect();
            terms.push(SquareTerm { generator: b.generator, q: qv });
        }
    }
    let mut ideal = FreePoly::zero(sig);
    for m in &cert.ideal {
        ideal = &ideal + &ideal_element(q, cert.reduction, m);
    }
    let mut total = ideal.clone();
    for t in &terms {
        total = &total + &term_value(q, cert, t);
    }
    let residual = (&total - &cert.target).max_abs_coeff();
    if residual > EXTRACT_TOL * scale {
        return Err(Error::Numerical(format!("decomposition residual {residual:.3e} exceeds tolerance")));
    }
    let text = render(q, &terms, &ideal);
    Ok(Decomposition { terms, ideal, residual, text })
}

fn generator_entry(q: &ModuleDescription, gen: Option<usize>, a: usize, b: usize) -> FreePoly {
    match gen {
        None => FreePoly::one(&q.sig),
        Some(k) => match &q.generators[k] {
            Generator::Scalar(p) => p.clone(),
            Generator::Pencil(m) => m.get(a, b).clone(),
            Generator::Ideal(_) => unreachable!("ideal generators carry no Gram block"),
        },
    }
}

fn term_value(q: &ModuleDescription, cert: &GramCertificate, t: &SquareTerm) -> FreePoly {
    let mut out = FreePoly::zero(&q.sig);
    for (a, qa) in t.q.iter().enumerate() {
        for (b, qb) in t.q.iter().enumerate() {
            let l = generator_entry(q, t.generator, a, b);
            out = &out + &(&(&qa.adjoint() * &l) * qb);
        }
    }
    cert.reduction.reduce(&out)
}

fn render(q: &ModuleDescription, terms: &[SquareTerm], ideal: &FreePoly) -> String {
    let mut lines = Vec::new();
    for t in terms {
        let inner = if t.q.len() == 1 {
            format!("({})", t.q[0])
        } else {
            format!("[{}]", t.q.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))
        };
        lines.push(match t.generator {
            None => format!("{inner}^* {inner}"),
            Some(k) => format!("{inner}^* g{k} {inner}"),
        });
    }
    if !ideal.is_zero() {
        lines.push(format!("relations: {ideal}"));
    }
    if lines.is_empty() {
        return "0".into();
    }
    let gens: Vec<String> = q
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| !matches!(g, Generator::Ideal(_)))
        .filter(|(k, _)| terms.iter().any(|t| t.generator == Some(*k)))
        .map(|(k, g)| match g {
            Generator::Scalar(p) => format!("g{k} = {p}"),
            _ => format!("g{k} = matrix generator {k}"),
        })
        .collect();
    let mut s = lines.join("\n+ ");
    if !gens.is_empty() {
        s.push_str("\nwhere ");
        s.push_str(&gens.join(", "));
    }
    s
}

/// Low-rank certificate representing the same polynomial, or `None` when the
/// parameter count is too large to attempt.
fn reduce_rank(cert: &GramCertificate, q: &ModuleDescription) -> Option<GramCertificate> {
    let mut cur = cert.clone();
    let loc: Vec<Vec<(usize, usize, Word, Complex64)>> = cur
        .blocks
        .iter()
        .map(|b| {
            let pb = PlannedBlock { generator: b.generator, words: b.words.clone(), size: b.size };
            localizing_block(q, &pb, cur.reduction)
        })
        .collect();
    let ideal_basis: Vec<FreePoly> = cur
        .ideal
        .iter()
        .flat_map(|m| {
            [linalg::ONE, linalg::I].map(|y| ideal_element(q, cur.reduction, &IdealMultiplier { y, ..m.clone() }))
        })
        .collect();
    for _ in 0..256 {
        let lam_max = cur.blocks.iter().map(|b| linalg::max_eigenvalue(&b.gram).max(0.0)).fold(1.0, f64::max);
        // G_b = U_b Λ_b U_b* over the numerically nonzero spectrum.
        let (factors, lams): (Vec<CMat>, Vec<Vec<f64>>) = cur
            .blocks
            .iter()
            .map(|b| {
                let (vals, vecs) = linalg::herm_eig(&b.gram);
                let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > EIG_DROP * lam_max).collect();
                let u = CMat::from_fn(b.gram.nrows(), keep.len(), |i, c| vecs[(i, keep[c])]);
                (u, keep.iter().map(|&k| vals[k]).collect())
            })
            .unzip();
        let gram_params: usize = factors.iter().map(|v| v.ncols() * v.ncols()).sum();
        let nparams = gram_params + ideal_basis.len();
        if gram_params == 0 || nparams > MAX_REDUCTION_PARAMS {
            return if gram_params == 0 { Some(cur) } else { None };
        }
        let mut columns: Vec<BTreeMap<Word, Complex64>> = Vec::with_capacity(nparams);
        for (bi, v) in factors.iter().enumerate() {
            let r = v.ncols();
            for slot in 0..r * r {
                let mut e = vec![0.0; r * r];
                e[slot] = 1.0;
                let dg = v * hermitian_from_params(r, &e) * v.adjoint();
                let mut col = BTreeMap::new();
                for (row, c, w, coeff) in &loc[bi] {
                    *col.entry(w.clone()).or_insert(linalg::ZERO) += coeff * dg[(*row, *c)];
                }
                columns.push(col);
            }
        }
        for p in &ideal_basis {
            columns.push(p.terms().map(|(w, &c)| (w.clone(), c)).collect());
        }
        let mut words: Vec<&Word> = columns.iter().flat_map(|c| c.keys()).collect();
        words.sort();
        words.dedup();
        let index: BTreeMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (*w, i)).collect();
        let rows = (2 * words.len()).max(nparams);
        let mut m = DMatrix::<f64>::zeros(rows, nparams);
        for (j, col) in columns.iter().enumerate() {
            for (w, c) in col {
                let i = index[w];
                m[(2 * i, j)] = c.re;
                m[(2 * i + 1, j)] = c.im;
            }
        }
        let (_, sv, v) = linalg::real_svd(&m);
        let smax = sv.first().copied().unwrap_or(0.0).max(1.0);
        // Null directions, preferring the one that moves the Gram part most.
        let mut best: Option<(f64, usize)> = None;
        for k in 0..sv.len() {
            if sv[k] > NULL_TOL * smax {
                continue;
            }
            let gnorm: f64 = (0..gram_params).map(|j| v[(j, k)] * v[(j, k)]).sum();
            if gnorm > 1e-6 && best.is_none_or(|(g, _)| gnorm > g) {
                best = Some((gnorm, k));
            }
        }
        let Some((_, k)) = best else { return Some(cur) };
        let x: Vec<f64> = (0..nparams).map(|j| v[(j, k)]).collect();
        let mut ss = Vec::new();
        let mut off = 0;
        for v in &factors {
            let r = v.ncols();
            ss.push(hermitian_from_params(r, &x[off..off + r * r]));
            off += r * r;
        }
        // Step length at which the first Λ + tS hits the boundary, from the
        // spectrum of Λ^{-1/2} S Λ^{-1/2}.
        let (mut neg, mut pos) = (0.0_f64, 0.0_f64);
        for (s, lam) in ss.iter().zip(&lams) {
            if s.nrows() == 0 {
                continue;
            }
            let scaled = CMat::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] / (lam[i] * lam[j]).sqrt());
            let ev = linalg::herm_eigenvalues(&scaled);
            neg = neg.max(-ev[0]);
            pos = pos.max(ev[ev.len() - 1]);
        }
        let t: f64 = if neg >= pos { 1.0 / neg } else { -1.0 / pos };
        if !t.is_finite() {
            return Some(cur);
        }
        for (((b, u), s), lam) in cur.blocks.iter_mut().zip(&factors).zip(&ss).zip(&lams) {
            let inner = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                lam.len(),
                lam.iter().map(|&l| Complex64::new(l, 0.0)),
            )) + s * Complex64::new(t, 0.0);
            b.gram = linalg::hermitian_part(&(u * inner * u.adjoint()));
        }
        for (i, mlt) in cur.ideal.iter_mut().enumerate() {
            mlt.y += Complex64::new(t * x[off + 2 * i], t * x[off + 2 * i + 1]);
        }
    }
    Some(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{member_eps, CertifyOptions};
    use crate::freealg::parse_poly;
    use crate::qmodule::{group_module, sos_module, GroupPreset, ReductionMode};
    use crate::freealg::Signature;

    #[test]
    fn free_group_square_is_recovered() {
        let q = group_module(GroupPreset::FreeGroup(1)).unwrap();
        let a = parse_poly(&q.sig, "2 - z - z^*").unwrap();
        let cert = member_eps(&a, &q, 2, 0.0, &CertifyOptions::default()).unwrap().certificate.unwrap();
        let dec = extract_certificate(&cert, &q).unwrap();
        assert_eq!(dec.terms.len(), 1, "{}", dec.text);
        assert!(dec.residual < 1e-6);
        let sq = &dec.terms[0].q[0];
        assert_eq!(sq.num_terms(), 2, "{}", dec.text);
        assert!((sq.coeff(&Word::unit()).norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_polynomial_gives_empty_decomposition() {
        let q = sos_module(Signature::hermitian(2));
        let a = FreePoly::zero(&q.sig);
        let cert = member_eps(&a, &q, 2, 0.0, &CertifyOptions::default()).unwrap().certificate.unwrap();
        let dec = extract_certificate(&cert, &q).unwrap();
        assert!(dec.terms.is_empty(), "{}", dec.text);
        assert_eq!(dec.text, "0");
    }

    #[test]
    fn relation_multiples_appear_in_pair_mode() {
        let q = group_module(GroupPreset::FreeGroup(1)).unwrap();
        let a = parse_poly(&q.sig, "2 - z - z^*").unwrap();
        let opts = CertifyOptions { mode: ReductionMode::IdealPairs, ..CertifyOptions::default() };
        let cert = member_eps(&a, &q, 2, 0.0, &opts).unwrap().certificate.unwrap();
        let dec = extract_certificate(&cert, &q).unwrap();
        assert!(dec.residual < 1e-6);
        assert!(!dec.terms.is_empty());
    }
}
