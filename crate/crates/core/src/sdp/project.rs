//! Alternating projections between the affine constraint set and the PSD
//! cone, used when the Newton system cannot be factored. Only feasibility
//! is attempted; an objective is ignored.

use nalgebra::{DMatrix, DVector};

use super::preprocess::{Preprocessed, SvecLayout};
use super::real::RealSdp;
use super::{RealSolution, SdpStatus, SolverOptions};

fn psd_clip(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

pub(crate) fn solve(p: &RealSdp, pre: &Preprocessed, opts: &SolverOptions) -> RealSolution {
    let layout = SvecLayout::new(&p.dims);
    let nf = p.num_free();
    let width = layout.len + nf;
    let mut v = vec![0.0; width];
    let mut x = p.zeros();
    let bnorm = p.b.amax();
    let trivial_objective = p.c.is_empty() && p.cf.iter().all(|&c| c == 0.0);
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    for it in 0..opts.fallback_iter {
        iterations = it + 1;
        for (q, &qb) in pre.basis.iter().zip(&pre.basis_rhs) {
            let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - qb;
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        layout.unpack_dense(&v[..layout.len], &mut x);
        for m in x.iter_mut() {
            *m = psd_clip(m);
        }
        layout.pack_dense(&x, &mut v[..layout.len]);
        let f = DVector::from_column_slice(&v[layout.len..]);
        let r = (p.apply(&x, &f) - &p.b).amax() / (1.0 + bnorm);
        if r <= opts.tol {
            if trivial_objective {
                status = SdpStatus::Optimal;
            }
            break;
        }
    }
    RealSolution {
        status,
        x,
        f: DVector::from_column_slice(&v[layout.len..layout.len + nf]),
        y: DVector::zeros(p.num_constraints()),
        iterations,
        ray: None,
        used_fallback: true,
    }
}
