//! Gram-matrix front ends: membership `a + ε ∈ Q_d`, upper bounds on the
//! `Q`-norm, explicit sum-of-squares certificates, and Choi-functional tests
//! for unital *-linear maps on finite-dimensional subspaces.

mod extract;
mod gram;
mod record;
mod ucp;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use extract::{extract_certificate, Decomposition, SquareTerm};
pub use record::{matrix_json, Record};
pub use ucp::{hull_project_membership, ucp_check, HullOutcome, UcpMapSpec, UcpOutcome, UcpWitness};

use crate::error::{Error, Result};
use crate::freealg::{FreePoly, Word};
use crate::linalg::{self, CMat};
use crate::qmodule::{
    localizing_block, truncate, Generator, ModuleDescription, PlannedBlock, Reduction, ReductionMode,
};
use crate::sdp::{self, HermData, Objective, SdpProblem, SdpResult, SdpStatus, SolverOptions};

use gram::{Builder, ConeLayout, Key};

/// Tolerance for accepting a Gram certificate: reconstruction error relative
/// to `1 + max |coefficient|`.
pub const RECONSTRUCTION_TOL: f64 = 1e-7;
/// Smallest eigenvalue allowed in a returned Gram block.
pub const PSD_TOL: f64 = 1e-9;
/// Choi values below this are reported as violations.
pub const VIOLATION_TOL: f64 = 1e-7;
/// Residual level at which a `max_iter` result is still used.
const MAX_ITER_ACCEPT: f64 = 1e-6;
const HERMITIAN_INPUT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub sdp: SolverOptions,
    pub mode: ReductionMode,
    /// Permit norm queries on modules without a known archimedean bound.
    pub allow_non_archimedean: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { sdp: SolverOptions::default(), mode: ReductionMode::Exact, allow_non_archimedean: false }
    }
}

/// Solver diagnostics carried by every front-end result.
#[derive(Clone, Debug, Serialize)]
pub struct SdpSummary {
    pub status: SdpStatus,
    pub residuals: sdp::Residuals,
    pub iterations: usize,
    pub blocks: Vec<usize>,
    pub constraints: usize,
    pub dropped_constraints: usize,
    pub used_fallback: bool,
    pub infeasibility_margin: Option<f64>,
}

impl SdpSummary {
    fn new(p: &SdpProblem, r: &SdpResult) -> Self {
        SdpSummary {
            status: r.status,
            residuals: r.residuals,
            iterations: r.iterations,
            blocks: p.blocks.clone(),
            constraints: p.constraints.len(),
            dropped_constraints: r.dropped_constraints,
            used_fallback: r.used_fallback,
            infeasibility_margin: r.ray.as_ref().map(|ray| ray.margin),
        }
    }

    fn usable(&self) -> bool {
        self.status == SdpStatus::Optimal
            || (self.status == SdpStatus::MaxIter && self.residuals.max() <= MAX_ITER_ACCEPT)
    }
}

/// One PSD block of a certificate: `Σ_{r,c} G[r, c] · w_i* L_ab w_j` with
/// `r = i·size + a`, `c = j·size + b`.
#[derive(Clone, Debug)]
pub struct GramBlock {
    /// `None` for the sums of squares, otherwise the generator index.
    pub generator: Option<usize>,
    pub words: Vec<Word>,
    pub size: usize,
    pub gram: CMat,
}

/// Relation multiplier `y · u r v + conj(y) · (u r v)*`.
#[derive(Clone, Debug)]
pub struct IdealMultiplier {
    pub generator: usize,
    pub u: Word,
    pub v: Word,
    pub y: Complex64,
}

/// Gram-matrix witness that `target ∈ Q_d`.
#[derive(Clone, Debug)]
pub struct GramCertificate {
    pub d: usize,
    pub reduction: Reduction,
    pub target: FreePoly,
    pub blocks: Vec<GramBlock>,
    pub ideal: Vec<IdealMultiplier>,
    /// Largest coefficient error of the reconstruction.
    pub residual: f64,
}

impl GramCertificate {
    /// The polynomial represented by the Gram blocks and multipliers.
    pub fn reconstruct(&self, module: &ModuleDescription) -> FreePoly {
        let sig = &module.sig;
        let mut terms: Vec<(Word, Complex64)> = Vec::new();
        for b in &self.blocks {
            let pb = PlannedBlock { generator: b.generator, words: b.words.clone(), size: b.size };
            for (r, c, w, coeff) in localizing_block(module, &pb, self.reduction) {
                terms.push((w, coeff * b.gram[(r, c)]));
            }
        }
        let mut p = FreePoly::from_terms(sig, terms);
        for m in &self.ideal {
            let x = ideal_element(module, self.reduction, m);
            p = &p + &x;
        }
        p
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::min_eigenvalue(&b.gram)).fold(f64::INFINITY, f64::min)
    }

    /// Max coefficient error of the reconstruction against the target.
    pub fn reconstruction_error(&self, module: &ModuleDescription) -> f64 {
        self.reconstruct(module).try_sub(&self.target).map(|d| d.max_abs_coeff()).unwrap_or(f64::INFINITY)
    }
}

fn relation(module: &ModuleDescription, red: Reduction, generator: usize) -> FreePoly {
    match &module.generators[generator] {
        Generator::Ideal(r) => red.reduce(r),
        _ => unreachable!("multiplier on a positive generator"),
    }
}

fn ideal_element(module: &ModuleDescription, red: Reduction, m: &IdealMultiplier) -> FreePoly {
    let sig = &module.sig;
    let u = FreePoly::monomial(sig, m.u.clone(), m.y);
    let v = FreePoly::monomial(sig, m.v.clone(), linalg::ONE);
    let x = red.reduce(&(&(&u * &relation(module, red, m.generator)) * &v));
    red.reduce(&(&x + &x.adjoint()))
}

fn check_signature(a: &FreePoly, q: &ModuleDescription) -> Result<()> {
    if **a.signature() != *q.sig {
        return Err(Error::SignatureMismatch(format!(
            "polynomial over {:?}, module over {:?}",
            a.signature().names(),
            q.sig.names()
        )));
    }
    Ok(())
}

fn certificate_from(
    q: &ModuleDescription,
    d: usize,
    reduction: Reduction,
    target: FreePoly,
    layout: &ConeLayout,
    res: &SdpResult,
) -> GramCertificate {
    let blocks = layout
        .gram
        .iter()
        .map(|(blk, pb)| GramBlock {
            generator: pb.generator,
            words: pb.words.clone(),
            size: pb.size,
            gram: linalg::hermitian_part(&res.g[*blk]),
        })
        .collect();
    let ideal = layout
        .ideal
        .iter()
        .map(|(gen, u, v, _, _, idx)| IdealMultiplier {
            generator: *gen,
            u: u.clone(),
            v: v.clone(),
            y: Complex64::new(res.free[*idx], res.free[*idx + 1]),
        })
        .collect();
    let mut cert = GramCertificate { d, reduction, target, blocks, ideal, residual: 0.0 };
    cert.residual = cert.reconstruction_error(q);
    cert
}

#[derive(Clone, Debug)]
pub struct MemberOutcome {
    /// `Some` when a degree-`d` certificate was located. `None` never means
    /// `a ∉ Q`.
    pub certificate: Option<GramCertificate>,
    pub sdp: SdpSummary,
}

impl MemberOutcome {
    pub fn found(&self) -> bool {
        self.certificate.is_some()
    }
}

/// Looks for a Gram certificate of `a + ε ∈ Q_d`.
pub fn member_eps(
    a: &FreePoly,
    q: &ModuleDescription,
    d: usize,
    eps: f64,
    opts: &CertifyOptions,
) -> Result<MemberOutcome> {
    check_signature(a, q)?;
    if !a.is_hermitian(HERMITIAN_INPUT_TOL) {
        return Err(Error::NotHermitian(format!("{a}")));
    }
    if d < a.degree() {
        return Err(Error::DegreeTooSmall { d, need: a.degree() });
    }
    let plan = truncate(q, d, opts.mode)?;
    let mut b = Builder::new(q.sig.clone(), plan.reduction);
    let layout = b.add_cone(0, q, &plan, 1);
    let target = plan.reduction.reduce(&(a + &FreePoly::real(&q.sig, eps)));
    let mut tmap: BTreeMap<Key, Complex64> = BTreeMap::new();
    gram::scalar_target(0, &target, &mut tmap);
    let problem =
        SdpProblem { blocks: b.blocks.clone(), constraints: b.equations(&tmap), num_free: b.num_free, objective: None };
    let res = sdp::solve(&problem, &opts.sdp)?;
    let summary = SdpSummary::new(&problem, &res);
    let mut certificate = None;
    if summary.usable() {
        let cert = certificate_from(q, d, plan.reduction, target.clone(), &layout, &res);
        let scale = 1.0 + target.max_abs_coeff();
        if cert.residual <= RECONSTRUCTION_TOL * scale && cert.min_eigenvalue() >= -PSD_TOL {
            certificate = Some(cert);
        }
    }
    Ok(MemberOutcome { certificate, sdp: summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Both formulations when `a` is hermitian, otherwise `square`.
    Auto,
    /// `minimize t` with `t - a*a ∈ Q_d`.
    Square,
    /// `minimize ℓ` with `ℓ ± a ∈ Q_d`; hermitian `a` only.
    Hermitian,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormUpper {
    pub value: f64,
    /// Formulation that produced `value`.
    pub mode: NormMode,
    pub d: usize,
    pub square: Option<f64>,
    pub hermitian: Option<f64>,
    pub sdp: Vec<SdpSummary>,
}

/// Upper bound on `‖a‖_Q` from the degree-`d` truncation.
pub fn norm_upper(
    a: &FreePoly,
    q: &ModuleDescription,
    d: usize,
    mode: NormMode,
    opts: &CertifyOptions,
) -> Result<NormUpper> {
    check_signature(a, q)?;
    if !q.is_archimedean() && !opts.allow_non_archimedean {
        return Err(Error::NotArchimedean(q.name.clone()));
    }
    let herm = a.is_hermitian(HERMITIAN_INPUT_TOL);
    let deg = a.degree();
    let (want_sq, want_h) = match mode {
        NormMode::Square => (true, false),
        NormMode::Hermitian => {
            if !herm {
                return Err(Error::NotHermitian(format!("hermitian norm mode needs a hermitian element, got {a}")));
            }
            (false, true)
        }
        NormMode::Auto => (d >= 2 * deg, herm),
    };
    if want_sq && d < 2 * deg {
        return Err(Error::DegreeTooSmall { d, need: 2 * deg });
    }
    if !want_sq && !want_h {
        return Err(Error::DegreeTooSmall { d, need: 2 * deg });
    }
    let mut out = NormUpper { value: f64::INFINITY, mode, d, square: None, hermitian: None, sdp: Vec::new() };
    let plan = truncate(q, d, opts.mode)?;
    if want_sq {
        let mut b = Builder::new(q.sig.clone(), plan.reduction);
        b.add_cone(0, q, &plan, 1);
        let t = b.add_block(1);
        b.add_term((0, Word::unit(), 0, 0), gram::Term::Gram { block: t, i: 0, j: 0, c: -linalg::ONE });
        let target = plan.reduction.reduce(&(&a.adjoint() * a)).scale_real(-1.0);
        let mut tmap = BTreeMap::new();
        gram::scalar_target(0, &target, &mut tmap);
        out.square = keep_if_auto(mode, solve_bound(&b, &tmap, t, &mut out.sdp, opts))?.map(|v| v.max(0.0).sqrt());
    }
    if want_h {
        let mut b = Builder::new(q.sig.clone(), plan.reduction);
        b.add_cone(0, q, &plan, 1);
        b.add_cone(1, q, &plan, 1);
        let l = b.add_block(1);
        for fam in 0..2 {
            b.add_term((fam, Word::unit(), 0, 0), gram::Term::Gram { block: l, i: 0, j: 0, c: -linalg::ONE });
        }
        let ar = plan.reduction.reduce(a);
        let mut tmap = BTreeMap::new();
        gram::scalar_target(0, &ar.scale_real(-1.0), &mut tmap);
        gram::scalar_target(1, &ar, &mut tmap);
        out.hermitian = keep_if_auto(mode, solve_bound(&b, &tmap, l, &mut out.sdp, opts))?;
    }
    match (out.square, out.hermitian) {
        (Some(s), Some(h)) => {
            out.value = s.min(h);
            out.mode = if h < s { NormMode::Hermitian } else { NormMode::Square };
        }
        (Some(s), None) => {
            out.value = s;
            out.mode = NormMode::Square;
        }
        (None, Some(h)) => {
            out.value = h;
            out.mode = NormMode::Hermitian;
        }
        (None, None) => {
            return Err(Error::Infeasible("neither bound form is feasible at the requested degree".into()))
        }
    }
    Ok(out)
}

/// In auto mode one infeasible formulation is not fatal while the other
/// may still give a bound.
fn keep_if_auto(mode: NormMode, r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Infeasible(_)) if mode == NormMode::Auto => Ok(None),
        Err(e) => Err(e),
    }
}

/// Minimizes the scalar block `t` subject to the builder's identities.
fn solve_bound(
    b: &Builder,
    tmap: &BTreeMap<Key, Complex64>,
    t: usize,
    log: &mut Vec<SdpSummary>,
    opts: &CertifyOptions,
) -> Result<f64> {
    let mut c = HermData::default();
    c.push(t, 0, 0, linalg::ONE);
    let problem = SdpProblem {
        blocks: b.blocks.clone(),
        constraints: b.equations(tmap),
        num_free: b.num_free,
        objective: Some(Objective { c, free: Vec::new() }),
    };
    let res = sdp::solve(&problem, &opts.sdp)?;
    let summary = SdpSummary::new(&problem, &res);
    let ok = summary.usable();
    let status = summary.status;
    let resid = summary.residuals;
    log.push(summary);
    if ok {
        return Ok(res.g[t][(0, 0)].re);
    }
    match status {
        SdpStatus::Infeasible => {
            Err(Error::Infeasible("no bound of this form exists at the requested degree".into()))
        }
        _ => Err(Error::Numerical(format!(
            "solver stopped with status {status:?}, residuals primal {:.2e} dual {:.2e} gap {:.2e}",
            resid.primal, resid.dual, resid.gap
        ))),
    }
}
