//! The free *-algebra `C<z_1, ..., z_n>`.
//!
//! Variables are either hermitian (`z_i* = z_i`, one letter) or general
//! (two letters `z_i` and `z_i*` tied by the involution). Letter `i` is
//! `z_i`; letter `n + i` is `z_i*` for a non-hermitian variable.

mod parse;
mod poly;
mod tuple;
mod word;

use std::sync::Arc;

pub use parse::parse_poly;
pub use poly::{FreePoly, COEFF_ZERO_TOL};
pub use tuple::{MatrixTuple, HERM_TOL};
pub(crate) use tuple::parse_entry;
pub use word::{monomial_basis, MonomialBasis, Word};

use crate::error::{Error, Result};

/// Variable names and hermitian flags.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    names: Vec<String>,
    hermitian: Vec<bool>,
}

impl Signature {
    pub fn new(names: Vec<String>, hermitian: Vec<bool>) -> Result<Arc<Self>> {
        if names.len() != hermitian.len() {
            return Err(Error::InvalidInput(format!(
                "{} names but {} hermitian flags",
                names.len(),
                hermitian.len()
            )));
        }
        for (k, name) in names.iter().enumerate() {
            let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok || name == "i" {
                return Err(Error::InvalidInput(format!("bad variable name `{name}`")));
            }
            if names[..k].contains(name) {
                return Err(Error::InvalidInput(format!("duplicate variable name `{name}`")));
            }
        }
        Ok(Arc::new(Signature { names, hermitian }))
    }

    fn default_names(n: usize) -> Vec<String> {
        if n == 1 {
            vec!["z".to_string()]
        } else {
            (1..=n).map(|i| format!("z{i}")).collect()
        }
    }

    /// `n` hermitian variables named `z` (n = 1) or `z1..zn`.
    pub fn hermitian(n: usize) -> Arc<Self> {
        Self::new(Self::default_names(n), vec![true; n]).expect("default names")
    }

    /// `n` non-hermitian variables named `z` (n = 1) or `z1..zn`.
    pub fn general(n: usize) -> Arc<Self> {
        Self::new(Self::default_names(n), vec![false; n]).expect("default names")
    }

    pub fn named(names: &[&str], hermitian: bool) -> Arc<Self> {
        Self::new(names.iter().map(|s| s.to_string()).collect(), vec![hermitian; names.len()])
            .expect("valid names")
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn hermitian_flags(&self) -> &[bool] {
        &self.hermitian
    }

    pub fn is_hermitian_var(&self, i: usize) -> bool {
        self.hermitian[i]
    }

    /// Letters in use, ascending.
    pub fn letters(&self) -> Vec<u32> {
        let n = self.nvars();
        let mut out: Vec<u32> = (0..n as u32).collect();
        out.extend((0..n).filter(|&i| !self.hermitian[i]).map(|i| (n + i) as u32));
        out
    }

    pub fn letter_count(&self) -> usize {
        self.nvars() + self.hermitian.iter().filter(|h| !**h).count()
    }

    pub fn adjoint_letter(&self, l: u32) -> u32 {
        let n = self.nvars() as u32;
        if l < n {
            if self.hermitian[l as usize] {
                l
            } else {
                l + n
            }
        } else {
            l - n
        }
    }

    /// Variable index and whether the letter is the starred one.
    pub fn letter_var(&self, l: u32) -> (usize, bool) {
        let n = self.nvars() as u32;
        if l < n {
            (l as usize, false)
        } else {
            ((l - n) as usize, true)
        }
    }

    pub fn star_letter(&self, var: usize) -> u32 {
        self.adjoint_letter(var as u32)
    }

    pub fn letter_name(&self, l: u32) -> String {
        let (v, star) = self.letter_var(l);
        if star {
            format!("{}^*", self.names[v])
        } else {
            self.names[v].clone()
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn word_to_string(&self, w: &Word) -> String {
        if w.is_unit() {
            return "1".to_string();
        }
        w.letters().iter().map(|&l| self.letter_name(l)).collect::<Vec<_>>().join("*")
    }
}
