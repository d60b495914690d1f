//! Quadratic modules described by generators and relations, their degree-d
//! truncations, and the localizing blocks feeding the Gram SDPs.

mod file;
mod presets;
mod truncate;

use std::sync::Arc;

pub use file::{GeneratorSpec, ModuleFile, SignatureSpec};
pub use presets::{
    ball_module, ball_pencil_module, cube_module, group_module, isometry_module, pencil_module,
    preset_by_name, preset_names, sos_module, BallKind, GroupPreset,
};
pub use truncate::{localizing_block, truncate, PlannedBlock, PlannedIdeal, TruncationPlan};

use crate::error::{Error, Result};
use crate::freealg::{FreePoly, MatrixTuple, Signature, Word};
use crate::heisenberg;
use crate::linalg::{self, CMat};

/// Hermiticity tolerance for generator payloads.
pub const GENERATOR_HERM_TOL: f64 = 1e-10;

/// Square matrix of polynomials, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    size: usize,
    entries: Vec<FreePoly>,
}

impl PolyMatrix {
    pub fn new(size: usize, entries: Vec<FreePoly>) -> Result<Self> {
        if entries.len() != size * size || size == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {size}x{size} polynomial matrix",
                entries.len()
            )));
        }
        Ok(PolyMatrix { size, entries })
    }

    /// `I_s + Σ M_i z_i` for constant Hermitian matrices `M_i`.
    pub fn linear_pencil(sig: &Arc<Signature>, mats: &[CMat]) -> Result<Self> {
        let s = mats.first().map_or(0, |m| m.nrows());
        if s == 0 || mats.len() != sig.nvars() {
            return Err(Error::DimensionMismatch(format!(
                "{} pencil coefficients for {} variables",
                mats.len(),
                sig.nvars()
            )));
        }
        let mut entries = Vec::with_capacity(s * s);
        for a in 0..s {
            for b in 0..s {
                let mut p = if a == b { FreePoly::one(sig) } else { FreePoly::zero(sig) };
                for (i, m) in mats.iter().enumerate() {
                    if m.nrows() != s || m.ncols() != s {
                        return Err(Error::DimensionMismatch("pencil coefficients differ in size".into()));
                    }
                    p = &p + &FreePoly::var(sig, i).scale(m[(a, b)]);
                }
                entries.push(p);
            }
        }
        Self::new(s, entries)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> &FreePoly {
        &self.entries[a * self.size + b]
    }

    pub fn entries(&self) -> &[FreePoly] {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().map(FreePoly::degree).max().unwrap_or(0)
    }

    /// Largest coefficient error of `M - M^{*T}` (entrywise adjoint, transposed).
    pub fn hermitian_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for a in 0..self.size {
            for b in 0..self.size {
                let d = self.get(a, b).try_sub(&self.get(b, a).adjoint()).expect("same signature");
                err = err.max(d.max_abs_coeff());
            }
        }
        err
    }

    /// Block matrix `[M_ab(X)]` of size `s·dim`.
    pub fn evaluate(&self, x: &MatrixTuple) -> Result<CMat> {
        let dim = x.dim();
        let s = self.size;
        let mut out = CMat::zeros(s * dim, s * dim);
        for a in 0..s {
            for b in 0..s {
                let block = self.get(a, b).evaluate(x)?;
                out.view_mut((a * dim, b * dim), (dim, dim)).copy_from(&block);
            }
        }
        Ok(out)
    }
}

/// One generator of a quadratic module.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// Hermitian polynomial `g`; contributes `Σ p* g p`.
    Scalar(FreePoly),
    /// Hermitian matrix polynomial `L`; contributes `Σ q* L q` with `q ∈ A^s`.
    Pencil(PolyMatrix),
    /// Relation `r = 0`: both signs of the hermitian parts of `u r v` are in
    /// the module. `r` need not be hermitian.
    Ideal(FreePoly),
}

impl Generator {
    pub fn degree(&self) -> usize {
        match self {
            Generator::Scalar(p) | Generator::Ideal(p) => p.degree(),
            Generator::Pencil(m) => m.degree(),
        }
    }

    /// Block size per multiplier word.
    pub fn size(&self) -> usize {
        match self {
            Generator::Pencil(m) => m.size(),
            _ => 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Generator::Scalar(_) => "scalar",
            Generator::Pencil(_) => "pencil",
            Generator::Ideal(_) => "ideal",
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Generator::Scalar(p) if !p.is_hermitian(GENERATOR_HERM_TOL) => {
                Err(Error::NotHermitian(format!("scalar generator {p}")))
            }
            Generator::Pencil(m) if m.hermitian_error() > GENERATOR_HERM_TOL => {
                Err(Error::NotHermitian("matrix generator is not adjoint-symmetric".into()))
            }
            _ => Ok(()),
        }
    }

    /// Amount by which `X` fails this generator: negative part of the
    /// smallest eigenvalue, or the norm of `r(X)` for relations.
    pub fn violation(&self, x: &MatrixTuple) -> Result<f64> {
        Ok(match self {
            Generator::Scalar(p) => (-linalg::min_eigenvalue(&p.evaluate(x)?)).max(0.0),
            Generator::Pencil(m) => (-linalg::min_eigenvalue(&m.evaluate(x)?)).max(0.0),
            Generator::Ideal(r) => linalg::spectral_norm(&r.evaluate(x)?),
        })
    }
}

/// Exact rewriting applied to words before Gram coefficients are matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reduction {
    /// Words are kept as they are; relations enter through ideal generators.
    None,
    /// Free reduction `z z* = z* z = 1` for every (unitary) variable.
    FreeGroup,
    /// Only `z z* = 1` for the single variable.
    Toeplitz,
    /// Heisenberg normal form `a^i b^j c^k` over the `a, b, c` signature.
    Heisenberg,
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Reduction::None => "none",
            Reduction::FreeGroup => "free_group",
            Reduction::Toeplitz => "toeplitz",
            Reduction::Heisenberg => "heisenberg",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Reduction::None,
            "free_group" => Reduction::FreeGroup,
            "toeplitz" => Reduction::Toeplitz,
            "heisenberg" => Reduction::Heisenberg,
            other => return Err(Error::InvalidInput(format!("unknown reduction `{other}`"))),
        })
    }

    pub fn reduce_word(&self, sig: &Signature, w: &Word) -> Word {
        match self {
            Reduction::None => w.clone(),
            Reduction::FreeGroup => {
                let mut stack: Vec<u32> = Vec::with_capacity(w.degree());
                for &l in w.letters() {
                    if stack.last().is_some_and(|&t| t == sig.adjoint_letter(l) && t != l) {
                        stack.pop();
                    } else {
                        stack.push(l);
                    }
                }
                Word(stack)
            }
            Reduction::Toeplitz => {
                let z = 0u32;
                let zs = sig.adjoint_letter(0);
                let mut stack: Vec<u32> = Vec::with_capacity(w.degree());
                for &l in w.letters() {
                    if l == zs && stack.last() == Some(&z) {
                        stack.pop();
                    } else {
                        stack.push(l);
                    }
                }
                Word(stack)
            }
            Reduction::Heisenberg => heisenberg::reduce_word(w),
        }
    }

    pub fn reduce(&self, p: &FreePoly) -> FreePoly {
        match self {
            Reduction::None => p.clone(),
            _ => {
                let sig = p.signature().clone();
                p.map_words(|w| self.reduce_word(&sig, w))
            }
        }
    }

    fn check_signature(&self, sig: &Signature) -> Result<()> {
        let ok = match self {
            Reduction::None => true,
            Reduction::FreeGroup => sig.hermitian_flags().iter().all(|h| !h),
            Reduction::Toeplitz => sig.nvars() == 1 && !sig.is_hermitian_var(0),
            Reduction::Heisenberg => *sig == *heisenberg::signature(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "reduction `{}` does not fit signature {:?}",
                self.name(),
                sig.names()
            )))
        }
    }
}

/// Whether truncations should apply the module's exact reduction or treat
/// every relation through ideal generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReductionMode {
    #[default]
    Exact,
    IdealPairs,
}

/// Which family a module belongs to; drives feasible-point sampling.
#[derive(Clone, Debug, PartialEq)]
pub enum ModuleKind {
    Sos,
    FreeGroup(usize),
    Heisenberg,
    Toeplitz,
    Ball(BallKind),
    Isometry(usize),
    Pencil(Vec<CMat>),
    Custom,
}

/// Generators, relations and bookkeeping for a quadratic module `(A, Q)`.
/// The generator `1` (sums of squares) is always implied.
#[derive(Clone, Debug)]
pub struct ModuleDescription {
    pub name: String,
    pub sig: Arc<Signature>,
    pub generators: Vec<Generator>,
    pub reduction: Reduction,
    /// `ℓ` with `ℓ - Σ z_i* z_i ∈ Q`, when known.
    pub archimedean_bound: Option<f64>,
    pub kind: ModuleKind,
    /// Residually finite-dimensional: finite-dimensional representations
    /// suffice for norms and positivity.
    pub rfd: bool,
}

impl ModuleDescription {
    pub fn new(
        name: impl Into<String>,
        sig: Arc<Signature>,
        generators: Vec<Generator>,
        reduction: Reduction,
        archimedean_bound: Option<f64>,
    ) -> Result<Self> {
        reduction.check_signature(&sig)?;
        for g in &generators {
            let gsig = match g {
                Generator::Scalar(p) | Generator::Ideal(p) => p.signature().clone(),
                Generator::Pencil(m) => m.get(0, 0).signature().clone(),
            };
            if *gsig != *sig {
                return Err(Error::SignatureMismatch("generator over a different signature".into()));
            }
            g.check()?;
        }
        if let Some(l) = archimedean_bound {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidInput(format!("archimedean bound must be positive, got {l}")));
            }
        }
        Ok(ModuleDescription {
            name: name.into(),
            sig,
            generators,
            reduction,
            archimedean_bound,
            kind: ModuleKind::Custom,
            rfd: false,
        })
    }

    pub fn with_archimedean_bound(mut self, bound: f64) -> Self {
        self.archimedean_bound = Some(bound);
        self
    }

    pub fn is_archimedean(&self) -> bool {
        self.archimedean_bound.is_some()
    }

    /// Largest violation of any generator (and, under an exact reduction,
    /// of the relations it encodes).
    pub fn violation(&self, x: &MatrixTuple) -> Result<f64> {
        x.validate(&self.sig)?;
        let mut worst: f64 = 0.0;
        for g in &self.generators {
            worst = worst.max(g.violation(x)?);
        }
        Ok(worst)
    }

    /// Reduction applied in the given mode.
    pub fn reduction_for(&self, mode: ReductionMode) -> Reduction {
        match mode {
            ReductionMode::Exact => self.reduction,
            ReductionMode::IdealPairs => Reduction::None,
        }
    }

    pub fn max_generator_degree(&self) -> usize {
        self.generators
            .iter()
            .filter(|g| !matches!(g, Generator::Ideal(_)))
            .map(Generator::degree)
            .max()
            .unwrap_or(0)
    }
}
