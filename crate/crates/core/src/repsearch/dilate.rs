use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sample::{project_feasible, sample_feasible};
use crate::error::{Error, Result};
use crate::freealg::MatrixTuple;
use crate::linalg::{self, CMat};
use crate::qmodule::ModuleDescription;

/// Tolerance on `V*V = I` and on the isometric restriction.
pub const ISOMETRY_TOL: f64 = 1e-10;
/// Slack allowed on `‖T‖ ≤ 1`.
pub const CONTRACTION_TOL: f64 = 1e-12;

/// An `r × s` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry(CMat);

impl Isometry {
    pub fn new(v: CMat) -> Result<Self> {
        if v.nrows() < v.ncols() || v.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!("{}x{} cannot be an isometry", v.nrows(), v.ncols())));
        }
        let err = linalg::identity_residual(&(v.adjoint() * &v));
        if err > ISOMETRY_TOL {
            return Err(Error::InvalidInput(format!("columns are not orthonormal (V*V - I = {err:.3e})")));
        }
        Ok(Isometry(v))
    }

    pub fn haar<R: rand::Rng + ?Sized>(r: usize, s: usize, rng: &mut R) -> Result<Self> {
        if r < s || s == 0 {
            return Err(Error::DimensionMismatch(format!("no isometry C^{s} -> C^{r}")));
        }
        Ok(Isometry(linalg::haar_isometry(r, s, rng)))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }
}

/// `[[T, (I - TT*)^½], [(I - T*T)^½, -T*]]`.
pub fn unitary_dilate(t: &CMat) -> Result<CMat> {
    let s = t.nrows();
    if t.ncols() != s || s == 0 {
        return Err(Error::DimensionMismatch(format!("dilation needs a square matrix, got {}x{}", t.nrows(), t.ncols())));
    }
    let norm = linalg::spectral_norm(t);
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::InvalidInput(format!("not a contraction: ‖T‖ = {norm}")));
    }
    // Both defect operators come from one SVD, with 1 - σ² formed as
    // (1 - σ)(1 + σ) so that singular values at 1 give an exact zero.
    let svd = linalg::svd(t);
    let defect = DVector::from_iterator(
        s,
        svd.s.iter().map(|&x| {
            let x = x.min(1.0);
            Complex64::new(((1.0 - x) * (1.0 + x)).sqrt(), 0.0)
        }),
    );
    let dd = CMat::from_diagonal(&defect);
    let dt = &svd.u * &dd * svd.u.adjoint();
    let d = &svd.v * &dd * svd.v.adjoint();
    let mut u = CMat::zeros(2 * s, 2 * s);
    u.view_mut((0, 0), (s, s)).copy_from(t);
    u.view_mut((0, s), (s, s)).copy_from(&dt);
    u.view_mut((s, 0), (s, s)).copy_from(&d);
    u.view_mut((s, s), (s, s)).copy_from(&(-t.adjoint()));
    Ok(u)
}

/// Extends maps known on `H_1 = range(w) ⊆ H_2` to all of `H_2` so that the
/// stacked map `h ↦ (M̃_1 h, ..., M̃_k h)` is an isometry. `images[i]` holds
/// `M_i w`, so column `j` is the image of the `j`-th basis vector of `H_1`.
pub fn isometry_extend(w: &CMat, images: &[CMat]) -> Result<Vec<CMat>> {
    let (d2, d1) = w.shape();
    if images.is_empty() {
        return Err(Error::InvalidInput("no maps to extend".into()));
    }
    for m in images {
        if m.shape() != (d2, d1) {
            return Err(Error::DimensionMismatch(format!(
                "image block is {}x{}, expected {d2}x{d1}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let w = Isometry::new(w.clone())?;
    let k = images.len();
    let mut s = CMat::zeros(k * d2, d1);
    for (i, m) in images.iter().enumerate() {
        s.view_mut((i * d2, 0), (d2, d1)).copy_from(m);
    }
    let err = linalg::identity_residual(&(s.adjoint() * &s));
    if err > ISOMETRY_TOL {
        return Err(Error::InvalidInput(format!("maps are not isometric on the subspace (residual {err:.3e})")));
    }
    let wperp = complement(w.matrix(), d2 - d1);
    let r = complement(&s, d2 - d1);
    let t = &s * w.matrix().adjoint() + r * wperp.adjoint();
    Ok((0..k).map(|i| t.view((i * d2, 0), (d2, d2)).into_owned()).collect())
}

/// `count` orthonormal vectors orthogonal to the columns of `v`, taken from
/// the standard basis by Gram-Schmidt with reorthogonalization.
fn complement(v: &CMat, count: usize) -> CMat {
    let n = v.nrows();
    let mut basis: Vec<DVector<Complex64>> = (0..v.ncols()).map(|j| v.column(j).into_owned()).collect();
    let mut out = Vec::with_capacity(count);
    for e in 0..n {
        if out.len() == count {
            break;
        }
        let mut x = DVector::<Complex64>::zeros(n);
        x[e] = linalg::ONE;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&x);
                x -= b * c;
            }
        }
        let nrm = x.norm();
        if nrm > 0.5 {
            x /= Complex64::new(nrm, 0.0);
            basis.push(x.clone());
            out.push(x);
        }
    }
    let mut m = CMat::zeros(n, count);
    for (j, c) in out.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// `(V*X_1V, ..., V*X_kV)`.
pub fn compress(x: &MatrixTuple, v: &Isometry) -> Result<MatrixTuple> {
    if x.dim() != v.rows() {
        return Err(Error::DimensionMismatch(format!(
            "tuple has dimension {}, isometry maps into C^{}",
            x.dim(),
            v.rows()
        )));
    }
    let vm = v.matrix();
    MatrixTuple::new(x.mats().iter().map(|m| vm.adjoint() * m * vm).collect())
}

/// Compressions of random level-`r` feasible points to level `s`.
pub fn mconv_sample(q: &ModuleDescription, r: usize, s: usize, count: usize, seed: u64) -> Result<Vec<MatrixTuple>> {
    if r < s || s == 0 {
        return Err(Error::InvalidInput(format!("need r >= s >= 1, got r = {r}, s = {s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = project_feasible(&sample_feasible(q, r, &mut rng)?, q)?;
            let v = Isometry::haar(r, s, &mut rng)?;
            compress(&a, &v)
        })
        .collect()
}
