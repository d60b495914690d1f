use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::{MatrixTuple, Signature, Word};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Coefficients with modulus at or below this are dropped after arithmetic.
pub const COEFF_ZERO_TOL: f64 = 1e-12;

/// A *-polynomial: a sparse map from words to complex coefficients.
#[derive(Clone, PartialEq)]
pub struct FreePoly {
    sig: Arc<Signature>,
    terms: BTreeMap<Word, Complex64>,
}

fn same_sig(a: &Arc<Signature>, b: &Arc<Signature>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl FreePoly {
    pub fn zero(sig: &Arc<Signature>) -> Self {
        FreePoly { sig: sig.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(sig: &Arc<Signature>, c: Complex64) -> Self {
        Self::monomial(sig, Word::unit(), c)
    }

    pub fn one(sig: &Arc<Signature>) -> Self {
        Self::constant(sig, linalg::ONE)
    }

    pub fn real(sig: &Arc<Signature>, c: f64) -> Self {
        Self::constant(sig, Complex64::new(c, 0.0))
    }

    /// The variable `z_i`.
    pub fn var(sig: &Arc<Signature>, i: usize) -> Self {
        Self::monomial(sig, Word::letter(i as u32), linalg::ONE)
    }

    /// The adjoint `z_i*` (equal to `z_i` for a hermitian variable).
    pub fn var_star(sig: &Arc<Signature>, i: usize) -> Self {
        Self::monomial(sig, Word::letter(sig.star_letter(i)), linalg::ONE)
    }

    pub fn monomial(sig: &Arc<Signature>, w: Word, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() > COEFF_ZERO_TOL {
            terms.insert(w, c);
        }
        FreePoly { sig: sig.clone(), terms }
    }

    /// Sums repeated words and drops near-zero coefficients.
    pub fn from_terms<I>(sig: &Arc<Signature>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Word, Complex64)>,
    {
        let mut map: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (w, c) in terms {
            *map.entry(w).or_insert(linalg::ZERO) += c;
        }
        map.retain(|_, c| c.norm() > COEFF_ZERO_TOL);
        FreePoly { sig: sig.clone(), terms: map }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &Word) -> Complex64 {
        self.terms.get(w).copied().unwrap_or(linalg::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn coeff_norm1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    fn check_sig(&self, other: &FreePoly) -> Result<()> {
        if same_sig(&self.sig, &other.sig) {
            Ok(())
        } else {
            Err(Error::SignatureMismatch(format!(
                "{:?} vs {:?}",
                self.sig.names(),
                other.sig.names()
            )))
        }
    }

    pub fn try_add(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_sig(other)?;
        Ok(Self::from_terms(
            &self.sig,
            self.terms.iter().chain(other.terms.iter()).map(|(w, c)| (w.clone(), *c)),
        ))
    }

    pub fn try_sub(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_sig(other)?;
        Ok(Self::from_terms(
            &self.sig,
            self.terms
                .iter()
                .map(|(w, c)| (w.clone(), *c))
                .chain(other.terms.iter().map(|(w, c)| (w.clone(), -*c))),
        ))
    }

    pub fn try_mul(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_sig(other)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.push((u.concat(v), a * b));
            }
        }
        Ok(Self::from_terms(&self.sig, out))
    }

    pub fn scale(&self, c: Complex64) -> FreePoly {
        Self::from_terms(&self.sig, self.terms.iter().map(|(w, a)| (w.clone(), a * c)))
    }

    pub fn scale_real(&self, c: f64) -> FreePoly {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Reverses words, swaps starred letters and conjugates coefficients.
    pub fn adjoint(&self) -> FreePoly {
        FreePoly {
            sig: self.sig.clone(),
            terms: self.terms.iter().map(|(w, c)| (w.adjoint(&self.sig), c.conj())).collect(),
        }
    }

    /// Largest coefficient modulus of `p - adjoint(p)`.
    pub fn hermitian_error(&self) -> f64 {
        let adj = self.adjoint();
        let keys = self.terms.keys().chain(adj.terms.keys());
        keys.map(|w| (self.coeff(w) - adj.coeff(w)).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_error() <= tol
    }

    /// Replaces every word by its image under `f` (used for normal forms).
    pub fn map_words<F: Fn(&Word) -> Word>(&self, f: F) -> FreePoly {
        Self::from_terms(&self.sig, self.terms.iter().map(|(w, c)| (f(w), *c)))
    }

    /// Evaluates at a tuple of matrices, starred letters mapping to adjoints.
    pub fn evaluate(&self, x: &MatrixTuple) -> Result<CMat> {
        if x.len() != self.sig.nvars() {
            return Err(Error::SignatureMismatch(format!(
                "polynomial has {} variables, tuple has {} matrices",
                self.sig.nvars(),
                x.len()
            )));
        }
        let letters = x.letter_matrices(&self.sig);
        let s = x.dim();
        let mut acc = CMat::zeros(s, s);
        for (w, c) in &self.terms {
            acc += eval_word(w, &letters, s) * *c;
        }
        Ok(acc)
    }

    /// Formal product with the letter matrices substituted, without any
    /// validation of the tuple. Letter matrices are indexed by letter.
    pub(crate) fn evaluate_letters(&self, letters: &[CMat], s: usize) -> CMat {
        let mut acc = CMat::zeros(s, s);
        for (w, c) in &self.terms {
            acc += eval_word(w, letters, s) * *c;
        }
        acc
    }
}

pub(crate) fn eval_word(w: &Word, letters: &[CMat], s: usize) -> CMat {
    let mut it = w.letters().iter();
    match it.next() {
        None => CMat::identity(s, s),
        Some(&l) => {
            let mut m = letters[l as usize].clone();
            for &l in it {
                m *= &letters[l as usize];
            }
            m
        }
    }
}

impl fmt::Display for FreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            let term = format_term(&self.sig, w, *c);
            if k == 0 {
                write!(f, "{term}")?;
            } else if let Some(rest) = term.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {term}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreePoly({self})")
    }
}

fn format_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 {
        format!("({}-{}i)", c.re, -c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

fn format_term(sig: &Signature, w: &Word, c: Complex64) -> String {
    if w.is_unit() {
        return format_coeff(c);
    }
    let word = sig.word_to_string(w);
    if c.im == 0.0 && c.re == 1.0 {
        word
    } else if c.im == 0.0 && c.re == -1.0 {
        format!("-{word}")
    } else {
        format!("{}*{word}", format_coeff(c))
    }
}

impl Add for &FreePoly {
    type Output = FreePoly;
    /// # Panics
    /// On signature mismatch; use [`FreePoly::try_add`] to handle it.
    fn add(self, rhs: &FreePoly) -> FreePoly {
        self.try_add(rhs).expect("FreePoly + FreePoly")
    }
}

impl Sub for &FreePoly {
    type Output = FreePoly;
    fn sub(self, rhs: &FreePoly) -> FreePoly {
        self.try_sub(rhs).expect("FreePoly - FreePoly")
    }
}

impl Mul for &FreePoly {
    type Output = FreePoly;
    fn mul(self, rhs: &FreePoly) -> FreePoly {
        self.try_mul(rhs).expect("FreePoly * FreePoly")
    }
}

impl Neg for &FreePoly {
    type Output = FreePoly;
    fn neg(self) -> FreePoly {
        self.scale_real(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_law() {
        let sig = Signature::hermitian(2);
        let p = &FreePoly::var(&sig, 0) + &FreePoly::real(&sig, 3.0);
        assert_eq!(&FreePoly::one(&sig) * &p, p);
        assert_eq!(&p * &FreePoly::one(&sig), p);
    }

    #[test]
    fn product_of_two_letters() {
        let sig = Signature::hermitian(2);
        let p = &FreePoly::var(&sig, 0) * &FreePoly::var(&sig, 1);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff(&Word(vec![0, 1])), linalg::ONE);
    }

    #[test]
    fn square_of_sum_expands_noncommutatively() {
        let sig = Signature::hermitian(2);
        let s = &FreePoly::var(&sig, 0) + &FreePoly::var(&sig, 1);
        let sq = &s * &s;
        assert_eq!(sq.num_terms(), 4);
        for w in [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]] {
            assert_eq!(sq.coeff(&Word(w)), linalg::ONE);
        }
    }

    #[test]
    fn adjoint_rules() {
        let sig = Signature::hermitian(2);
        let p = (&FreePoly::var(&sig, 0) * &FreePoly::var(&sig, 1)).scale(linalg::I);
        let a = p.adjoint();
        assert_eq!(a.coeff(&Word(vec![1, 0])), -linalg::I);
        assert_eq!(FreePoly::one(&sig).adjoint(), FreePoly::one(&sig));

        let g = Signature::general(1);
        let q = &FreePoly::var(&g, 0) + &FreePoly::var_star(&g, 0);
        assert_eq!(q.adjoint(), q);
        assert!(q.is_hermitian(0.0));
        assert!(!FreePoly::var(&g, 0).is_hermitian(1e-12));
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let a = FreePoly::var(&Signature::hermitian(1), 0);
        let b = FreePoly::var(&Signature::hermitian(2), 0);
        assert!(matches!(a.try_mul(&b), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn printer_output() {
        let sig = Signature::general(2);
        let p = FreePoly::from_terms(
            &sig,
            [
                (Word(vec![0, 3]), Complex64::new(1.5, -2.0)),
                (Word::unit(), Complex64::new(3.0, 0.0)),
                (Word(vec![1]), Complex64::new(-1.0, 0.0)),
            ],
        );
        assert_eq!(p.to_string(), "3 - z2 + (1.5-2i)*z1*z2^*");
    }
}
