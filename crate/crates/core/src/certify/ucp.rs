//! Choi-functional tests for unital *-linear maps `ρ : V → M_n`.
//!
//! The SDP minimizes `c_ρ(X) = Σ_{a,b} ρ(X_ab)_{ab}` over elements `X` of the
//! degree-`d` amplified cone `M_n(Q_d)` that lie in `V ⊗ M_n`, normalized by
//! the total trace of their Gram blocks. A negative minimum disproves that
//! `ρ` extends to a u.c.p. map on the module.

use nalgebra::DVector;
use num_complex::Complex64;

use super::gram::{hermitian_params, Builder, Part};
use super::{check_signature, CertifyOptions, SdpSummary, VIOLATION_TOL};
use crate::error::{Error, Result};
use crate::freealg::{FreePoly, Word};
use crate::linalg::{self, CMat};
use crate::qmodule::{truncate, ModuleDescription};
use crate::sdp::{self, Constraint, HermData, Objective, SdpProblem, SdpStatus};

const SPAN_TOL: f64 = 1e-9;
const IMAGE_TOL: f64 = 1e-8;

/// `ρ(basis[k]) = images[k]`, extended linearly to `V = span basis`.
#[derive(Clone, Debug)]
pub struct UcpMapSpec {
    pub basis: Vec<FreePoly>,
    pub images: Vec<CMat>,
}

/// Element `X ∈ M_n(Q_d)`, entry `(a, b)` at `entries[a * n + b]`, with
/// `c_ρ(X) = value < 0`.
#[derive(Clone, Debug)]
pub struct UcpWitness {
    pub n: usize,
    pub entries: Vec<FreePoly>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct UcpOutcome {
    /// `false` only with a verified violation.
    pub consistent: bool,
    /// Minimum of the normalized Choi functional (`-∞` if unbounded).
    pub value: f64,
    pub witness: Option<UcpWitness>,
    pub sdp: SdpSummary,
}

#[derive(Clone, Debug)]
pub struct HullOutcome {
    pub inside: bool,
    pub value: f64,
    /// Element `p ∈ Q_d` of `V` with `ℓ_x(p) < 0`.
    pub witness: Option<FreePoly>,
    pub sdp: SdpSummary,
}

/// Real span of coefficient vectors, each carrying its image under `ρ`.
struct ImageSpan {
    vecs: Vec<DVector<f64>>,
    imgs: Vec<CMat>,
}

impl ImageSpan {
    fn new() -> Self {
        ImageSpan { vecs: Vec::new(), imgs: Vec::new() }
    }

    /// Component of `v` outside the span, and the image of its projection.
    fn project(&self, v: &DVector<f64>, n: usize) -> (DVector<f64>, CMat) {
        let mut r = v.clone();
        let mut img = CMat::zeros(n, n);
        for _ in 0..2 {
            for (q, qi) in self.vecs.iter().zip(&self.imgs) {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
                img += qi * Complex64::new(c, 0.0);
            }
        }
        (r, img)
    }

    /// Adds `(v, image)`; a dependent `v` must carry the implied image.
    fn insert(&mut self, v: &DVector<f64>, image: &CMat) -> Result<()> {
        let (r, img) = self.project(v, image.nrows());
        let scale = 1.0 + v.norm();
        let rn = r.norm();
        if rn <= SPAN_TOL * scale {
            let err = linalg::max_abs_diff(&img, image);
            if err > IMAGE_TOL * (1.0 + linalg::frobenius(image)) {
                return Err(Error::InvalidInput(format!(
                    "map is not well defined on the span: images of dependent elements differ by {err:.3e}"
                )));
            }
            return Ok(());
        }
        let resid_img = image - img;
        self.vecs.push(r / rn);
        self.imgs.push(resid_img * Complex64::new(1.0 / rn, 0.0));
        Ok(())
    }
}

struct Coords {
    words: Vec<Word>,
}

impl Coords {
    fn vector(&self, p: &FreePoly) -> DVector<f64> {
        let m = self.words.len();
        let mut v = DVector::zeros(2 * m);
        for (w, c) in p.terms() {
            let i = self.words.binary_search(w).expect("word indexed");
            v[i] = c.re;
            v[m + i] = c.im;
        }
        v
    }

    fn poly(&self, q: &ModuleDescription, v: &DVector<f64>) -> FreePoly {
        let m = self.words.len();
        FreePoly::from_terms(&q.sig, self.words.iter().enumerate().map(|(i, w)| (w.clone(), Complex64::new(v[i], v[m + i]))))
    }
}

/// Hermitian elements `h_k` spanning `V^h`, with their images.
fn hermitian_basis(spec: &UcpMapSpec, q: &ModuleDescription, opts: &CertifyOptions) -> Result<(Vec<FreePoly>, Vec<CMat>)> {
    if spec.basis.is_empty() || spec.basis.len() != spec.images.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} basis elements but {} images",
            spec.basis.len(),
            spec.images.len()
        )));
    }
    let n = spec.images[0].nrows();
    for m in &spec.images {
        if m.nrows() != n || m.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch("images must be square matrices of one size".into()));
        }
    }
    for p in &spec.basis {
        check_signature(p, q)?;
    }
    let red = q.reduction_for(opts.mode);
    let reduced: Vec<FreePoly> = spec.basis.iter().map(|p| red.reduce(p)).collect();
    let adjoints: Vec<FreePoly> = reduced.iter().map(|p| red.reduce(&p.adjoint())).collect();
    let mut words: Vec<Word> = reduced.iter().chain(&adjoints).flat_map(|p| p.terms().map(|(w, _)| w.clone())).collect();
    words.push(Word::unit());
    words.sort();
    words.dedup();
    let coords = Coords { words };

    let mut span = ImageSpan::new();
    for (p, m) in reduced.iter().zip(&spec.images) {
        span.insert(&coords.vector(p), m)?;
        span.insert(&coords.vector(&p.scale(linalg::I)), &(m * linalg::I))?;
    }
    for (p, m) in adjoints.iter().zip(&spec.images) {
        let (r, img) = span.project(&coords.vector(p), n);
        if r.norm() > SPAN_TOL * (1.0 + p.max_abs_coeff()) {
            return Err(Error::InvalidInput("subspace is not closed under the involution".into()));
        }
        if linalg::max_abs_diff(&img, &m.adjoint()) > IMAGE_TOL * (1.0 + linalg::frobenius(m)) {
            return Err(Error::InvalidInput("map does not commute with the involution".into()));
        }
    }
    let one = FreePoly::one(&q.sig);
    let (r, img) = span.project(&coords.vector(&one), n);
    if r.norm() > SPAN_TOL {
        return Err(Error::InvalidInput("subspace does not contain 1".into()));
    }
    if linalg::identity_residual(&img) > IMAGE_TOL {
        return Err(Error::InvalidInput("map is not unital".into()));
    }

    let mut herm = ImageSpan::new();
    let half = Complex64::new(0.5, 0.0);
    for (p, m) in reduced.iter().zip(&spec.images) {
        let pa = red.reduce(&p.adjoint());
        let re = (p + &pa).scale(half);
        let im = (&p.scale(-linalg::I) + &pa.scale(linalg::I)).scale(half);
        let mre = (m + m.adjoint()) * half;
        let mim = (m * (-linalg::I) + m.adjoint() * linalg::I) * half;
        herm.insert(&coords.vector(&re), &mre)?;
        herm.insert(&coords.vector(&im), &mim)?;
    }
    let basis = herm.vecs.iter().map(|v| coords.poly(q, v)).collect();
    let images = herm.imgs.iter().map(linalg::hermitian_part).collect();
    Ok((basis, images))
}

/// `Σ_{a,b} ρ(X_ab)_{ab}` for `X = Σ_k h_k ⊗ M_k`.
fn choi_value(images: &[CMat], ms: &[CMat]) -> f64 {
    images
        .iter()
        .zip(ms)
        .map(|(r, m)| r.iter().zip(m.iter()).map(|(x, y)| (x * y).re).sum::<f64>())
        .sum()
}

/// Tests the Choi functional of `ρ` on the degree-`d` amplified cone.
pub fn ucp_check(spec: &UcpMapSpec, q: &ModuleDescription, d: usize, opts: &CertifyOptions) -> Result<UcpOutcome> {
    let (hs, images) = hermitian_basis(spec, q, opts)?;
    let n = images[0].nrows();
    let plan = truncate(q, d, opts.mode)?;
    let mut b = Builder::new(q.sig.clone(), plan.reduction);
    let layout = b.add_cone(0, q, &plan, n);
    let starts = b.add_tensor_free(0, &hs, n);
    let mut constraints = b.equations(&Default::default());
    let mut norm = Constraint::new(1.0);
    for (blk, _) in &layout.gram {
        for i in 0..b.blocks[*blk] {
            norm.a.push(*blk, i, i, linalg::ONE);
        }
    }
    constraints.push(norm);
    let mut free = Vec::new();
    for (k, r) in images.iter().enumerate() {
        for (slot, (a, c), part) in hermitian_params(n) {
            let v = match part {
                Part::Diag => r[(a, a)].re,
                Part::Re => 2.0 * r[(a, c)].re,
                Part::Im => -2.0 * r[(a, c)].im,
            };
            if v != 0.0 {
                free.push((starts[k] + slot, v));
            }
        }
    }
    let problem = SdpProblem {
        blocks: b.blocks.clone(),
        constraints,
        num_free: b.num_free,
        objective: Some(Objective { c: HermData::default(), free }),
    };
    let res = sdp::solve(&problem, &opts.sdp)?;
    let summary = SdpSummary::new(&problem, &res);
    match res.status {
        SdpStatus::Unbounded => {
            return Ok(UcpOutcome { consistent: false, value: f64::NEG_INFINITY, witness: None, sdp: summary })
        }
        SdpStatus::Infeasible => {
            return Err(Error::Numerical("normalized Choi problem reported infeasible".into()))
        }
        _ if !summary.usable() => {
            return Err(Error::Numerical(format!(
                "solver stopped with status {:?}, residual {:.2e}",
                summary.status,
                summary.residuals.max()
            )))
        }
        _ => {}
    }
    let ms: Vec<CMat> =
        starts.iter().map(|&s| super::gram::hermitian_from_params(n, &res.free[s..s + n * n])).collect();
    let value = choi_value(&images, &ms);
    if value >= -VIOLATION_TOL {
        return Ok(UcpOutcome { consistent: true, value, witness: None, sdp: summary });
    }
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for c in 0..n {
            let mut p = FreePoly::zero(&q.sig);
            for (h, m) in hs.iter().zip(&ms) {
                p = &p + &h.scale(m[(a, c)]);
            }
            entries.push(p);
        }
    }
    // Re-evaluate c_ρ on the witness directly from its entries.
    let direct = witness_value(spec, q, opts, &entries, n)?;
    let consistent = direct >= -VIOLATION_TOL;
    let witness = (!consistent).then_some(UcpWitness { n, entries, value: direct });
    Ok(UcpOutcome { consistent, value: direct, witness, sdp: summary })
}

/// `c_ρ` of a matrix element, by expressing every entry in the basis of `V`.
fn witness_value(spec: &UcpMapSpec, q: &ModuleDescription, opts: &CertifyOptions, entries: &[FreePoly], n: usize) -> Result<f64> {
    let red = q.reduction_for(opts.mode);
    let reduced: Vec<FreePoly> = spec.basis.iter().map(|p| red.reduce(p)).collect();
    let mut words: Vec<Word> =
        reduced.iter().chain(entries).flat_map(|p| p.terms().map(|(w, _)| w.clone())).collect();
    words.sort();
    words.dedup();
    let coords = Coords { words };
    let mut span = ImageSpan::new();
    for (p, m) in reduced.iter().zip(&spec.images) {
        span.insert(&coords.vector(p), m)?;
        span.insert(&coords.vector(&p.scale(linalg::I)), &(m * linalg::I))?;
    }
    let mut total = 0.0;
    for a in 0..n {
        for c in 0..n {
            let (_, img) = span.project(&coords.vector(&red.reduce(&entries[a * n + c])), n);
            total += img[(a, c)].re;
        }
    }
    Ok(total)
}

/// Whether the unital functional with `ℓ(h_k) = x_k` is nonnegative on the
/// degree-`d` cone restricted to `span{1, h_k}`.
pub fn hull_project_membership(
    x: &[f64],
    hbasis: &[FreePoly],
    q: &ModuleDescription,
    d: usize,
    opts: &CertifyOptions,
) -> Result<HullOutcome> {
    if x.len() != hbasis.len() {
        return Err(Error::DimensionMismatch(format!("{} coordinates for {} basis elements", x.len(), hbasis.len())));
    }
    for h in hbasis {
        if !h.is_hermitian(1e-10) {
            return Err(Error::NotHermitian(format!("basis element {h} is not hermitian")));
        }
    }
    let mut basis = vec![FreePoly::one(&q.sig)];
    basis.extend(hbasis.iter().cloned());
    let mut images = vec![CMat::identity(1, 1)];
    images.extend(x.iter().map(|&v| CMat::from_element(1, 1, Complex64::new(v, 0.0))));
    let out = ucp_check(&UcpMapSpec { basis, images }, q, d, opts)?;
    Ok(HullOutcome {
        inside: out.consistent,
        value: out.value,
        witness: out.witness.map(|w| w.entries[0].clone()),
        sdp: out.sdp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::parse_poly;
    use crate::heisenberg::center_coordinates;
    use crate::qmodule::{ball_module, group_module, BallKind, GroupPreset};

    fn ball_spec(q: &ModuleDescription, t: f64) -> UcpMapSpec {
        let sig = &q.sig;
        let c = |v: f64| CMat::from_element(1, 1, Complex64::new(v, 0.0));
        UcpMapSpec {
            basis: vec![FreePoly::one(sig), FreePoly::var(sig, 0), FreePoly::var_star(sig, 0)],
            images: vec![c(1.0), c(t), c(t)],
        }
    }

    #[test]
    fn ball_threshold() {
        let q = ball_module(BallKind::RowBall { n: 1, hermitian: false }).unwrap();
        let o = CertifyOptions::default();
        for t in [0.0, 0.999] {
            let r = ucp_check(&ball_spec(&q, t), &q, 2, &o).unwrap();
            assert!(r.consistent, "t = {t}: {}", r.value);
        }
        let r = ucp_check(&ball_spec(&q, 1.001), &q, 2, &o).unwrap();
        assert!(!r.consistent);
        assert!(r.witness.unwrap().value < 0.0);
    }

    #[test]
    fn rejects_subspace_without_adjoints() {
        let q = ball_module(BallKind::RowBall { n: 1, hermitian: false }).unwrap();
        let c = |v: f64| CMat::from_element(1, 1, Complex64::new(v, 0.0));
        let spec = UcpMapSpec { basis: vec![FreePoly::one(&q.sig), FreePoly::var(&q.sig, 0)], images: vec![c(1.0), c(0.5)] };
        assert!(matches!(ucp_check(&spec, &q, 2, &CertifyOptions::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn heisenberg_center_hull() {
        let q = group_module(GroupPreset::Heisenberg).unwrap();
        let hb = center_coordinates(&q.sig).to_vec();
        let o = CertifyOptions::default();
        assert!(hull_project_membership(&[1.0, 0.0], &hb, &q, 2, &o).unwrap().inside);
        let out = hull_project_membership(&[1.1, 0.0], &hb, &q, 2, &o).unwrap();
        assert!(!out.inside);
        assert!(out.witness.is_some());
    }

    #[test]
    fn free_group_unitary_image() {
        let q = group_module(GroupPreset::FreeGroup(1)).unwrap();
        let sig = &q.sig;
        let u = CMat::from_row_slice(2, 2, &[linalg::ZERO, linalg::ONE, linalg::ONE, linalg::ZERO]);
        let spec = UcpMapSpec {
            basis: vec![FreePoly::one(sig), parse_poly(sig, "z").unwrap(), parse_poly(sig, "z^*").unwrap()],
            images: vec![CMat::identity(2, 2), u.clone(), u.adjoint()],
        };
        assert!(ucp_check(&spec, &q, 2, &CertifyOptions::default()).unwrap().consistent);
    }
}
