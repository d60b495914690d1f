//! Removal of linearly dependent constraints and free variables.
//!
//! Rows `(A_k, B_k)` live in `svec(X) ⊕ ℝ^{n_f}`. They are normalized and
//! run through modified Gram–Schmidt, always pivoting on the row with the
//! largest remaining norm; rows whose residual norm falls below
//! [`RANK_TOL`](super::RANK_TOL) are dependent. A dependent row whose
//! transformed right-hand side does not vanish proves infeasibility.

use nalgebra::{DMatrix, DVector};

use super::real::{RealSdp, SymSparse};
use super::{RealSolution, RANK_TOL};

pub(crate) enum Verdict {
    /// Farkas ray in the original row coordinates.
    Inconsistent(DVector<f64>),
    Reduced(RealSdp),
}

pub(crate) struct Preprocessed {
    pub verdict: Verdict,
    pub kept_rows: Vec<usize>,
    pub row_scale: Vec<f64>,
    pub kept_free: Vec<usize>,
    pub dropped: usize,
    /// Some dependent free direction has nonzero cost.
    pub free_direction: bool,
    /// Orthonormal basis of the row space (over the reduced problem) and the
    /// matching right-hand side.
    pub basis: Vec<Vec<f64>>,
    pub basis_rhs: Vec<f64>,
}

/// Offsets of each block inside `svec`.
pub(crate) struct SvecLayout {
    pub offsets: Vec<usize>,
    pub len: usize,
}

impl SvecLayout {
    pub fn new(dims: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut len = 0;
        for &n in dims {
            offsets.push(len);
            len += n * (n + 1) / 2;
        }
        SvecLayout { offsets, len }
    }

    /// Position of `(p, q)`, `p <= q`, in column-major upper packing.
    pub fn index(&self, block: usize, p: usize, q: usize) -> usize {
        self.offsets[block] + q * (q + 1) / 2 + p
    }

    pub fn pack(&self, sym: &SymSparse, out: &mut [f64]) {
        for &(b, p, q, v) in &sym.entries {
            out[self.index(b, p, q)] += if p == q { v } else { std::f64::consts::SQRT_2 * v };
        }
    }

    pub fn pack_dense(&self, x: &[DMatrix<f64>], out: &mut [f64]) {
        for (b, m) in x.iter().enumerate() {
            for q in 0..m.ncols() {
                for p in 0..=q {
                    let v = m[(p, q)];
                    out[self.index(b, p, q)] = if p == q { v } else { std::f64::consts::SQRT_2 * v };
                }
            }
        }
    }

    pub fn unpack_dense(&self, v: &[f64], x: &mut [DMatrix<f64>]) {
        for (b, m) in x.iter_mut().enumerate() {
            for q in 0..m.ncols() {
                for p in 0..=q {
                    let s = v[self.index(b, p, q)];
                    if p == q {
                        m[(p, q)] = s;
                    } else {
                        let s = s / std::f64::consts::SQRT_2;
                        m[(p, q)] = s;
                        m[(q, p)] = s;
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Mgs {
    /// Pivot order of independent vectors.
    order: Vec<usize>,
    basis: Vec<Vec<f64>>,
    basis_rhs: Vec<f64>,
    /// `(index, transformed rhs, combination coefficients)` of dependent vectors.
    dependent: Vec<(usize, f64, Vec<f64>)>,
}

/// Pivoted modified Gram–Schmidt on unit-norm vectors with attached scalars.
fn mgs(mut rows: Vec<Vec<f64>>, mut rhs: Vec<f64>, track: bool) -> Mgs {
    let m = rows.len();
    let mut coef: Vec<Vec<f64>> = if track {
        (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    } else {
        Vec::new()
    };
    let mut norms: Vec<f64> = rows.iter().map(|r| dot(r, r).sqrt()).collect();
    let mut active: Vec<usize> = (0..m).collect();
    let mut out = Mgs { order: Vec::new(), basis: Vec::new(), basis_rhs: Vec::new(), dependent: Vec::new() };
    while !active.is_empty() {
        let (pos, &piv) = active
            .iter()
            .enumerate()
            .max_by(|a, b| norms[*a.1].total_cmp(&norms[*b.1]).then(b.1.cmp(a.1)))
            .expect("nonempty");
        if norms[piv] <= RANK_TOL {
            break;
        }
        active.swap_remove(pos);
        let nrm = dot(&rows[piv], &rows[piv]).sqrt();
        let q: Vec<f64> = rows[piv].iter().map(|v| v / nrm).collect();
        let qb = rhs[piv] / nrm;
        let qc: Vec<f64> = if track { coef[piv].iter().map(|v| v / nrm).collect() } else { Vec::new() };
        for &j in &active {
            let c = dot(&rows[j], &q);
            if c != 0.0 {
                axpy(-c, &q, &mut rows[j]);
                rhs[j] -= c * qb;
                if track {
                    axpy(-c, &qc, &mut coef[j]);
                }
                norms[j] = dot(&rows[j], &rows[j]).sqrt();
            }
        }
        out.order.push(piv);
        out.basis.push(q);
        out.basis_rhs.push(qb);
    }
    for j in active {
        let c = if track { std::mem::take(&mut coef[j]) } else { Vec::new() };
        out.dependent.push((j, rhs[j], c));
    }
    out
}

pub(crate) fn reduce(p: &RealSdp) -> Preprocessed {
    let m = p.num_constraints();
    let nf = p.num_free();
    let layout = SvecLayout::new(&p.dims);
    let width = layout.len + nf;
    let mut rows = Vec::with_capacity(m);
    let mut scale = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for k in 0..m {
        let mut r = vec![0.0; width];
        layout.pack(&p.a[k], &mut r[..layout.len]);
        for j in 0..nf {
            r[layout.len + j] = p.bfree[(k, j)];
        }
        let n = dot(&r, &r).sqrt();
        let s = if n > 0.0 { 1.0 / n } else { 1.0 };
        r.iter_mut().for_each(|v| *v *= s);
        rows.push(r);
        rhs.push(p.b[k] * s);
        scale.push(s);
    }
    let bmax = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let res = mgs(rows, rhs, true);

    for (_, bj, c) in &res.dependent {
        if bj.abs() > 1e-8 * (1.0 + bmax) {
            // Σ c_l row_l ≈ 0 while Σ c_l b_l = bj: orient so that bᵀy > 0.
            let sign = bj.signum();
            let y = DVector::from_iterator(m, c.iter().zip(&scale).map(|(cl, s)| sign * cl * s));
            return Preprocessed {
                verdict: Verdict::Inconsistent(y),
                kept_rows: Vec::new(),
                row_scale: Vec::new(),
                kept_free: Vec::new(),
                dropped: res.dependent.len(),
                free_direction: false,
                basis: Vec::new(),
                basis_rhs: Vec::new(),
            };
        }
    }

    let mut kept_rows = res.order.clone();
    kept_rows.sort_unstable();
    let row_scale: Vec<f64> = kept_rows.iter().map(|&k| scale[k]).collect();

    // Free columns restricted to the kept rows.
    let mut kept_free: Vec<usize> = (0..nf).collect();
    let mut free_direction = false;
    if nf > 0 {
        let cols: Vec<Vec<f64>> = (0..nf)
            .map(|j| kept_rows.iter().zip(&row_scale).map(|(&k, s)| p.bfree[(k, j)] * s).collect())
            .collect();
        let cnorm: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
        let unit: Vec<Vec<f64>> = cols
            .iter()
            .zip(&cnorm)
            .map(|(c, n)| if *n > 0.0 { c.iter().map(|v| v / n).collect() } else { c.clone() })
            .collect();
        let cost: Vec<f64> =
            (0..nf).map(|j| if cnorm[j] > 0.0 { p.cf[j] / cnorm[j] } else { p.cf[j] }).collect();
        let cmax = cost.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cres = mgs(unit, cost, false);
        for (_, cj, _) in &cres.dependent {
            if cj.abs() > 1e-8 * (1.0 + cmax) {
                free_direction = true;
            }
        }
        kept_free = cres.order.clone();
        kept_free.sort_unstable();
    }

    let a: Vec<SymSparse> = kept_rows
        .iter()
        .zip(&row_scale)
        .map(|(&k, &s)| {
            let mut r = p.a[k].clone();
            r.scale(s);
            r
        })
        .collect();
    let bfree = DMatrix::from_fn(kept_rows.len(), kept_free.len(), |i, j| {
        p.bfree[(kept_rows[i], kept_free[j])] * row_scale[i]
    });
    let b = DVector::from_iterator(kept_rows.len(), kept_rows.iter().zip(&row_scale).map(|(&k, s)| p.b[k] * s));
    let cf = DVector::from_iterator(kept_free.len(), kept_free.iter().map(|&j| p.cf[j]));
    let reduced = RealSdp { dims: p.dims.clone(), a, bfree, b, c: p.c.clone(), cf, factor: p.factor };

    // Basis of the reduced row space, restricted to kept free columns.
    let (basis, basis_rhs) = if kept_free.len() == nf {
        (res.basis, res.basis_rhs)
    } else {
        let mut rows = Vec::with_capacity(kept_rows.len());
        let mut rhs = Vec::with_capacity(kept_rows.len());
        for (i, &k) in kept_rows.iter().enumerate() {
            let mut r = vec![0.0; layout.len + kept_free.len()];
            layout.pack(&reduced.a[i], &mut r[..layout.len]);
            for (j, &fj) in kept_free.iter().enumerate() {
                r[layout.len + j] = p.bfree[(k, fj)] * row_scale[i];
            }
            rows.push(r);
            rhs.push(reduced.b[i]);
        }
        let r = mgs(rows, rhs, false);
        (r.basis, r.basis_rhs)
    };

    Preprocessed {
        verdict: Verdict::Reduced(reduced),
        dropped: m - kept_rows.len(),
        kept_rows,
        row_scale,
        kept_free,
        free_direction,
        basis,
        basis_rhs,
    }
}

impl Preprocessed {
    /// Maps a solution of the reduced problem back to the original rows and
    /// free variables.
    pub fn expand(&self, sol: &mut RealSolution, full: &RealSdp) {
        let mut y = DVector::zeros(full.num_constraints());
        for (i, (&k, s)) in self.kept_rows.iter().zip(&self.row_scale).enumerate() {
            y[k] = sol.y[i] * s;
        }
        sol.y = y;
        if let Some(r) = &sol.ray {
            let mut ray = DVector::zeros(full.num_constraints());
            for (i, (&k, s)) in self.kept_rows.iter().zip(&self.row_scale).enumerate() {
                ray[k] = r[i] * s;
            }
            sol.ray = Some(ray);
        }
        let mut f = DVector::zeros(full.num_free());
        for (j, &fj) in self.kept_free.iter().enumerate() {
            f[fj] = sol.f[j];
        }
        sol.f = f;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_round_trip_preserves_inner_products() {
        let layout = SvecLayout::new(&[3, 2]);
        let a = vec![
            DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 2.0]),
        ];
        let mut v = vec![0.0; layout.len];
        layout.pack_dense(&a, &mut v);
        let ip: f64 = a.iter().map(|m| m.dot(m)).sum();
        assert!((dot(&v, &v) - ip).abs() < 1e-12);
        let mut back = vec![DMatrix::zeros(3, 3), DMatrix::zeros(2, 2)];
        layout.unpack_dense(&v, &mut back);
        assert_eq!(back, a);
    }

    #[test]
    fn mgs_pivots_on_largest_norm() {
        let rows = vec![vec![1e-3, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let r = mgs(rows, vec![0.0, 1.0, 2.0], true);
        assert_eq!(r.order, vec![2, 0]);
        assert_eq!(r.dependent.len(), 1);
        assert_eq!(r.dependent[0].0, 1);
        assert!(r.dependent[0].1.abs() < 1e-14);
    }
}
