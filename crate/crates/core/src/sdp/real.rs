use nalgebra::{DMatrix, DVector};

use super::{HermData, SdpProblem, DIAG_IMAG_TOL};
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Sparse real symmetric matrix on the block-diagonal variable, stored as
/// upper-triangle entries `(block, p, q, v)` with `p <= q`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymSparse {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl SymSparse {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `⟨A, X⟩` against dense symmetric blocks.
    pub fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|&(b, p, q, v)| if p == q { v * x[b][(p, q)] } else { 2.0 * v * x[b][(p, q)] })
            .sum()
    }

    /// `out += s · A`.
    pub fn add_to(&self, s: f64, out: &mut [DMatrix<f64>]) {
        for &(b, p, q, v) in &self.entries {
            out[b][(p, q)] += s * v;
            if p != q {
                out[b][(q, p)] += s * v;
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, p, q, v)| if p == q { v * v } else { 2.0 * v * v }).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.3 *= s;
        }
    }

    fn compress(mut self) -> Self {
        self.entries.sort_by_key(|e| (e.0, e.1, e.2));
        let mut out: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for e in self.entries {
            match out.last_mut() {
                Some(l) if (l.0, l.1, l.2) == (e.0, e.1, e.2) => l.3 += e.3,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.3 != 0.0);
        SymSparse { entries: out }
    }
}

/// Real form `min ⟨C, X⟩ + c_fᵀ f  s.t.  ⟨A_k, X⟩ + (B f)_k = b_k,  X ⪰ 0`.
#[derive(Clone, Debug)]
pub struct RealSdp {
    pub dims: Vec<usize>,
    pub a: Vec<SymSparse>,
    pub bfree: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: SymSparse,
    pub cf: DVector<f64>,
    /// Real data equals this factor times the complex data.
    pub factor: f64,
}

impl RealSdp {
    pub fn num_constraints(&self) -> usize {
        self.a.len()
    }

    pub fn num_free(&self) -> usize {
        self.bfree.ncols()
    }

    pub fn zeros(&self) -> Vec<DMatrix<f64>> {
        self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect()
    }

    /// `A(X) + B f`.
    pub fn apply(&self, x: &[DMatrix<f64>], f: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::from_iterator(self.a.len(), self.a.iter().map(|a| a.dot(x)));
        if !f.is_empty() {
            out += &self.bfree * f;
        }
        out
    }

    /// `Aᵀ y` as dense blocks.
    pub fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out = self.zeros();
        for (k, a) in self.a.iter().enumerate() {
            if y[k] != 0.0 {
                a.add_to(y[k], &mut out);
            }
        }
        out
    }

    pub fn objective(&self, x: &[DMatrix<f64>], f: &DVector<f64>) -> f64 {
        self.c.dot(x) + if !f.is_empty() { self.cf.dot(f) } else { 0.0 }
    }
}

fn push_herm(out: &mut Vec<(usize, usize, usize, f64)>, dims: &[usize], data: &HermData, scale: f64) -> Result<()> {
    for e in &data.entries {
        let s = *dims.get(e.block).ok_or_else(|| {
            Error::DimensionMismatch(format!("entry refers to block {} of {}", e.block, dims.len()))
        })?;
        let (i, j) = (e.row, e.col);
        if i > j || j >= s {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) is not in the upper triangle of a {s}x{s} block"
            )));
        }
        let (p, q) = (e.value.re * scale, e.value.im * scale);
        if i == j {
            if e.value.im.abs() > DIAG_IMAG_TOL {
                return Err(Error::NotHermitian(format!(
                    "diagonal entry ({i}, {i}) of block {} has imaginary part {}",
                    e.block, e.value.im
                )));
            }
            out.push((e.block, i, i, p));
            out.push((e.block, s + i, s + i, p));
        } else {
            out.push((e.block, i, j, p));
            out.push((e.block, s + i, s + j, p));
            out.push((e.block, i, s + j, -q));
            out.push((e.block, j, s + i, q));
        }
    }
    Ok(())
}

/// Embeds every Hermitian block `X + iY` as `[[X, -Y], [Y, X]]`. Since
/// `⟨Â, Ẑ⟩ = 2 tr(A G)`, right-hand sides, free-variable coefficients and
/// the objective are doubled; `factor` records this.
pub fn realify(p: &SdpProblem) -> Result<RealSdp> {
    p.validate()?;
    let dims: Vec<usize> = p.blocks.iter().map(|&n| 2 * n).collect();
    let factor = 2.0;
    let m = p.constraints.len();
    let nf = p.num_free;
    let mut a = Vec::with_capacity(m);
    let mut bfree = DMatrix::zeros(m, nf);
    let mut b = DVector::zeros(m);
    for (k, con) in p.constraints.iter().enumerate() {
        let mut entries = Vec::new();
        push_herm(&mut entries, &p.blocks, &con.a, 1.0)?;
        a.push(SymSparse { entries }.compress());
        for &(j, v) in &con.free {
            bfree[(k, j)] += factor * v;
        }
        b[k] = factor * con.rhs;
    }
    let mut c = Vec::new();
    let mut cf = DVector::zeros(nf);
    if let Some(obj) = &p.objective {
        push_herm(&mut c, &p.blocks, &obj.c, 1.0)?;
        for &(j, v) in &obj.free {
            cf[j] += factor * v;
        }
    }
    Ok(RealSdp { dims, a, bfree, b, c: SymSparse { entries: c }.compress(), cf, factor })
}

/// `[[Re M, -Im M], [Im M, Re M]]`.
pub fn realify_matrix(m: &CMat) -> DMatrix<f64> {
    let s = m.nrows();
    let mut out = DMatrix::zeros(2 * s, 2 * s);
    for i in 0..s {
        for j in 0..s {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(s + i, s + j)] = z.re;
            out[(i, s + j)] = -z.im;
            out[(s + i, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`realify_matrix`] after averaging the two copies:
/// `G = (Z11 + Z22)/2 + i (Z21 - Z12)/2`.
pub fn complexify(z: &DMatrix<f64>) -> CMat {
    let s = z.nrows() / 2;
    CMat::from_fn(s, s, |i, j| {
        num_complex::Complex64::new(
            0.5 * (z[(i, j)] + z[(s + i, s + j)]),
            0.5 * (z[(s + i, j)] - z[(i, s + j)]),
        )
    })
}
