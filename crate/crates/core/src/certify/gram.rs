//! Linear bookkeeping between Gram matrices, free multipliers and the
//! coefficients of the polynomial they represent.
//!
//! A *key* `(family, word, α, β)` addresses the coefficient of `word` in entry
//! `(α, β)` of a (possibly matrix-valued) polynomial; `family` separates
//! independent identities sharing one SDP. Every expression assembled here
//! is Hermitian, so the coefficient at `(family, reduce(word*), β, α)` is the
//! conjugate of the one at `(family, word, α, β)` and only one key per
//! adjoint pair is turned into equations.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::freealg::{FreePoly, Signature, Word};
use crate::linalg::{self, CMat};
use crate::qmodule::{localizing_block, ModuleDescription, PlannedBlock, Reduction, TruncationPlan};
use crate::sdp::Constraint;

pub(crate) type Key = (u8, Word, usize, usize);

#[derive(Clone, Copy, Debug)]
pub(crate) enum Term {
    Gram { block: usize, i: usize, j: usize, c: Complex64 },
    Free { idx: usize, c: Complex64 },
}

/// Where one module cone sits inside the SDP.
#[derive(Clone, Debug)]
pub(crate) struct ConeLayout {
    /// `(sdp block, planned block)`.
    pub gram: Vec<(usize, PlannedBlock)>,
    /// `(generator, u, v, α, β, free index of Re y; Im y follows)`.
    pub ideal: Vec<(usize, Word, Word, usize, usize, usize)>,
}

pub(crate) struct Builder {
    pub sig: Arc<Signature>,
    pub reduction: Reduction,
    pub blocks: Vec<usize>,
    pub num_free: usize,
    terms: BTreeMap<Key, Vec<Term>>,
}

impl Builder {
    pub fn new(sig: Arc<Signature>, reduction: Reduction) -> Self {
        Builder { sig, reduction, blocks: Vec::new(), num_free: 0, terms: BTreeMap::new() }
    }

    pub fn add_block(&mut self, n: usize) -> usize {
        self.blocks.push(n);
        self.blocks.len() - 1
    }

    pub fn add_free(&mut self, k: usize) -> usize {
        self.num_free += k;
        self.num_free - k
    }

    pub fn add_term(&mut self, key: Key, t: Term) {
        self.terms.entry(key).or_default().push(t);
    }

    pub fn adjoint_key(&self, k: &Key) -> Key {
        (k.0, self.reduction.reduce_word(&self.sig, &k.1.adjoint(&self.sig)), k.3, k.2)
    }

    /// Adds Gram blocks for every positive generator and free multipliers
    /// for every planned relation, amplified to `n × n` matrices.
    pub fn add_cone(&mut self, family: u8, module: &ModuleDescription, plan: &TruncationPlan, n: usize) -> ConeLayout {
        let mut layout = ConeLayout { gram: Vec::new(), ideal: Vec::new() };
        for pb in &plan.blocks {
            if pb.dim() == 0 {
                continue;
            }
            let block = self.add_block(pb.dim() * n);
            for (r, c, w, coeff) in localizing_block(module, pb, plan.reduction) {
                for a in 0..n {
                    for b in 0..n {
                        self.add_term(
                            (family, w.clone(), a, b),
                            Term::Gram { block, i: r * n + a, j: c * n + b, c: coeff },
                        );
                    }
                }
            }
            layout.gram.push((block, pb.clone()));
        }
        for pi in &plan.ideals {
            for &(ui, vi) in &pi.pairs {
                let (u, v) = (&pi.words[ui], &pi.words[vi]);
                let urv = plan.reduction.reduce(
                    &FreePoly::monomial(&self.sig, u.clone(), linalg::ONE)
                        .try_mul(&pi.relation)
                        .and_then(|p| p.try_mul(&FreePoly::monomial(&self.sig, v.clone(), linalg::ONE)))
                        .expect("same signature"),
                );
                if urv.is_zero() {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n {
                        let idx = self.add_free(2);
                        for (w, &c) in urv.terms() {
                            let adj = self.reduction.reduce_word(&self.sig, &w.adjoint(&self.sig));
                            let ic = c * linalg::I;
                            self.add_term((family, w.clone(), a, b), Term::Free { idx, c });
                            self.add_term((family, w.clone(), a, b), Term::Free { idx: idx + 1, c: ic });
                            self.add_term((family, adj.clone(), b, a), Term::Free { idx, c: c.conj() });
                            self.add_term((family, adj, b, a), Term::Free { idx: idx + 1, c: ic.conj() });
                        }
                        layout.ideal.push((pi.generator, u.clone(), v.clone(), a, b, idx));
                    }
                }
            }
        }
        layout
    }

    /// Terms `-Σ_k h_k ⊗ M_k` for free Hermitian `n × n` matrices `M_k`;
    /// returns the first free index of each `M_k`, laid out as
    /// [`hermitian_params`].
    pub fn add_tensor_free(&mut self, family: u8, basis: &[FreePoly], n: usize) -> Vec<usize> {
        let mut starts = Vec::with_capacity(basis.len());
        for h in basis {
            let start = self.add_free(n * n);
            starts.push(start);
            for (w, &c) in h.terms() {
                for (slot, (a, b), part) in hermitian_params(n) {
                    let idx = start + slot;
                    match part {
                        Part::Diag => self.add_term((family, w.clone(), a, a), Term::Free { idx, c: -c }),
                        Part::Re => {
                            self.add_term((family, w.clone(), a, b), Term::Free { idx, c: -c });
                            self.add_term((family, w.clone(), b, a), Term::Free { idx, c: -c });
                        }
                        Part::Im => {
                            self.add_term((family, w.clone(), a, b), Term::Free { idx, c: -c * linalg::I });
                            self.add_term((family, w.clone(), b, a), Term::Free { idx, c: c * linalg::I });
                        }
                    }
                }
            }
        }
        starts
    }

    /// Real equations `coefficient(key) = target(key)` for one key of every
    /// adjoint pair.
    pub fn equations(&self, target: &BTreeMap<Key, Complex64>) -> Vec<Constraint> {
        let mut keys: Vec<&Key> = self.terms.keys().chain(target.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut out = Vec::new();
        for k in keys {
            let adj = self.adjoint_key(k);
            if adj < *k {
                continue;
            }
            let tv = target.get(k).copied().unwrap_or(linalg::ZERO);
            let terms: &[Term] = self.terms.get(k).map_or(&[], |v| v.as_slice());
            let mut re = Constraint::new(tv.re);
            let mut im = Constraint::new(tv.im);
            for t in terms {
                match *t {
                    Term::Gram { block, i, j, c } => {
                        re.a.add_functional(block, i, j, c);
                        im.a.add_functional(block, i, j, -linalg::I * c);
                    }
                    Term::Free { idx, c } => {
                        if c.re != 0.0 {
                            re.free.push((idx, c.re));
                        }
                        if c.im != 0.0 {
                            im.free.push((idx, c.im));
                        }
                    }
                }
            }
            re.a.compress();
            im.a.compress();
            out.push(re);
            if adj != *k {
                out.push(im);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Part {
    Diag,
    Re,
    Im,
}

/// Real coordinates of an `n × n` Hermitian matrix: `n` diagonal entries,
/// then `(Re, Im)` of each entry above the diagonal.
pub(crate) fn hermitian_params(n: usize) -> Vec<(usize, (usize, usize), Part)> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        out.push((out.len(), (a, a), Part::Diag));
    }
    for a in 0..n {
        for b in a + 1..n {
            out.push((out.len(), (a, b), Part::Re));
            out.push((out.len(), (a, b), Part::Im));
        }
    }
    out
}

pub(crate) fn hermitian_from_params(n: usize, v: &[f64]) -> CMat {
    let mut m = CMat::zeros(n, n);
    for (slot, (a, b), part) in hermitian_params(n) {
        match part {
            Part::Diag => m[(a, a)] = Complex64::new(v[slot], 0.0),
            Part::Re => {
                m[(a, b)].re = v[slot];
                m[(b, a)].re = v[slot];
            }
            Part::Im => {
                m[(a, b)].im = v[slot];
                m[(b, a)].im = -v[slot];
            }
        }
    }
    m
}

/// Target map of a scalar polynomial placed in family `family`, entry (0, 0).
pub(crate) fn scalar_target(family: u8, p: &FreePoly, into: &mut BTreeMap<Key, Complex64>) {
    for (w, &c) in p.terms() {
        *into.entry((family, w.clone(), 0, 0)).or_insert(linalg::ZERO) += c;
    }
}
