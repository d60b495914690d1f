use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use super::Signature;

/// A monomial: a sequence of letter indices. The empty word is the unit.
///
/// Ordering is graded lexicographic: shorter words first, ties broken by the
/// letter sequence.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: u32) -> Self {
        Word(vec![l])
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn concat3(a: &Word, b: &Word, c: &Word) -> Word {
        let mut v = Vec::with_capacity(a.0.len() + b.0.len() + c.0.len());
        v.extend_from_slice(&a.0);
        v.extend_from_slice(&b.0);
        v.extend_from_slice(&c.0);
        Word(v)
    }

    /// Reverse the word and replace every letter by its adjoint letter.
    pub fn adjoint(&self, sig: &Signature) -> Word {
        Word(self.0.iter().rev().map(|&l| sig.adjoint_letter(l)).collect())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word{:?}", self.0)
    }
}

/// All words of degree at most `d` over the signature's letters, in
/// graded-lexicographic order, with an index for reverse lookup.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl MonomialBasis {
    pub fn new(sig: &Signature, d: usize) -> Self {
        let letters = sig.letters();
        let mut words = vec![Word::unit()];
        let mut layer = vec![Word::unit()];
        for _ in 0..d {
            let mut next = Vec::with_capacity(layer.len() * letters.len());
            for w in &layer {
                for &l in &letters {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            words.extend(next.iter().cloned());
            layer = next;
        }
        Self::from_words(words)
    }

    /// Builds a basis from an explicit list, dropping repeats (first
    /// occurrence wins).
    pub fn from_words(words: Vec<Word>) -> Self {
        let mut index = HashMap::with_capacity(words.len());
        let mut kept = Vec::with_capacity(words.len());
        for w in words {
            if !index.contains_key(&w) {
                index.insert(w.clone(), kept.len());
                kept.push(w);
            }
        }
        MonomialBasis { words: kept, index }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }
}

/// Words of degree at most `d`, graded-lexicographic.
pub fn monomial_basis(sig: &Signature, d: usize) -> Vec<Word> {
    MonomialBasis::new(sig, d).words
}
