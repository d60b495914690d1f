use std::fmt::Write as _;

use num_complex::Complex64;

use super::Signature;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Hermiticity tolerance for matrices assigned to hermitian variables.
pub const HERM_TOL: f64 = 1e-10;

/// One square complex matrix per variable, all of the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    mats: Vec<CMat>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        if let Some(first) = mats.first() {
            let s = first.nrows();
            if s == 0 {
                return Err(Error::DimensionMismatch("empty matrices".into()));
            }
            for (k, m) in mats.iter().enumerate() {
                if m.nrows() != s || m.ncols() != s {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix {k} is {}x{}, expected {s}x{s}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(MatrixTuple { mats })
    }

    /// Like [`MatrixTuple::new`] and additionally checks hermitian variables.
    pub fn for_signature(sig: &Signature, mats: Vec<CMat>) -> Result<Self> {
        let t = Self::new(mats)?;
        t.validate(sig)?;
        Ok(t)
    }

    pub fn validate(&self, sig: &Signature) -> Result<()> {
        if self.mats.len() != sig.nvars() {
            return Err(Error::SignatureMismatch(format!(
                "tuple has {} matrices for {} variables",
                self.mats.len(),
                sig.nvars()
            )));
        }
        for (i, m) in self.mats.iter().enumerate() {
            if sig.is_hermitian_var(i) && linalg::hermiticity_error(m) > HERM_TOL {
                return Err(Error::NotHermitian(format!(
                    "matrix for hermitian variable `{}`",
                    sig.names()[i]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mats.first().map_or(0, |m| m.nrows())
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    pub fn get(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    pub fn into_mats(self) -> Vec<CMat> {
        self.mats
    }

    /// Matrices indexed by letter: `z_i` and, for general variables, `z_i*`.
    pub fn letter_matrices(&self, sig: &Signature) -> Vec<CMat> {
        let n = sig.nvars();
        let mut out: Vec<CMat> = self.mats.clone();
        for i in 0..n {
            out.push(if sig.is_hermitian_var(i) {
                self.mats[i].clone()
            } else {
                self.mats[i].adjoint()
            });
        }
        out
    }

    /// Direct sum `X ⊕ Y` variable by variable.
    pub fn direct_sum(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch("tuples of different length".into()));
        }
        Ok(MatrixTuple {
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| linalg::direct_sum(a, b)).collect(),
        })
    }

    /// Text form: a header `tuple <count> <dim>` followed by the matrices,
    /// row-major, entries written as `re+imi`.
    pub fn to_text(&self) -> String {
        let mut out = format!("tuple {} {}\n", self.len(), self.dim());
        for m in &self.mats {
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format_entry(m[(r, c)])).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty tuple file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "tuple" {
            return Err(Error::InvalidInput(format!("bad tuple header `{header}`")));
        }
        let count: usize = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad count `{}`", parts[1])))?;
        let dim: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad dim `{}`", parts[2])))?;
        let mut mats = Vec::with_capacity(count);
        for k in 0..count {
            let mut m = CMat::zeros(dim, dim);
            for r in 0..dim {
                let line = lines.next().ok_or_else(|| {
                    Error::InvalidInput(format!("matrix {k}: missing row {r}"))
                })?;
                let entries: Vec<&str> = line.split_whitespace().collect();
                if entries.len() != dim {
                    return Err(Error::InvalidInput(format!(
                        "matrix {k} row {r}: {} entries, expected {dim}",
                        entries.len()
                    )));
                }
                for (c, e) in entries.iter().enumerate() {
                    m[(r, c)] = parse_entry(e)?;
                }
            }
            mats.push(m);
        }
        if lines.next().is_some() {
            return Err(Error::InvalidInput("trailing data after tuple".into()));
        }
        Self::new(mats)
    }
}

fn format_entry(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub(crate) fn parse_entry(s: &str) -> Result<Complex64> {
    let bad = || Error::InvalidInput(format!("bad matrix entry `{s}`"));
    let body = s.strip_suffix('i').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let Some(split) = split else {
        // Purely imaginary, `2.5i`.
        return body.parse().map(|im| Complex64::new(0.0, im)).map_err(|_| bad());
    };
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im: f64 = body[split..].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}
