//! Dense solver for small block-diagonal Hermitian semidefinite programs.
//!
//! ```text
//! minimize   tr(C G) + c_fᵀ f
//! subject to tr(A_k G) + Σ_j B_kj f_j = b_k,   G = diag(G_1, ..., G_r) ⪰ 0
//! ```
//!
//! `G` is Hermitian, `f` is a vector of free real variables. Problems are
//! embedded into real symmetric form ([`realify`]), preprocessed to remove
//! dependent constraints, and solved by a homogeneous self-dual interior
//! point method with Nesterov–Todd scaling and Mehrotra's predictor-corrector.
//! When the Schur complement cannot be factored the solver falls back to
//! alternating projections for pure feasibility.

mod dump;
mod ipm;
mod preprocess;
mod project;
mod real;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

pub use dump::{read_dump, write_dump};
pub use real::{complexify, realify, realify_matrix, RealSdp, SymSparse};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Default relative accuracy for residuals and gap.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Relative threshold for dependent constraint rows.
pub const RANK_TOL: f64 = 1e-10;
/// Smallest normalized `bᵀy` accepted for an infeasibility ray.
pub const INFEASIBILITY_MARGIN: f64 = 1e-8;
const DIAG_IMAG_TOL: f64 = 1e-12;

/// Entry `(row, col)`, `row <= col`, of a Hermitian matrix on one block. The
/// mirrored entry is the conjugate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

/// Sparse Hermitian block-diagonal matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HermData {
    pub entries: Vec<HermEntry>,
}

impl HermData {
    /// Adds the real functional `G ↦ Re(c · G[i, j])` on block `block`.
    pub fn add_functional(&mut self, block: usize, i: usize, j: usize, c: Complex64) {
        if c == linalg::ZERO {
            return;
        }
        let (row, col, value) = match i.cmp(&j) {
            std::cmp::Ordering::Less => (i, j, c.conj() * 0.5),
            std::cmp::Ordering::Greater => (j, i, c * 0.5),
            std::cmp::Ordering::Equal => (i, i, Complex64::new(c.re, 0.0)),
        };
        self.entries.push(HermEntry { block, row, col, value });
    }

    /// Pushes a raw upper-triangle entry: `v G[i, i]` on the diagonal,
    /// `2 Re(v G[col, row])` off it.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: Complex64) {
        debug_assert!(row <= col);
        self.entries.push(HermEntry { block, row, col, value });
    }

    /// Merges duplicate positions.
    pub fn compress(&mut self) {
        self.entries.sort_by_key(|e| (e.block, e.row, e.col));
        let mut out: Vec<HermEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(l) if (l.block, l.row, l.col) == (e.block, e.row, e.col) => l.value += e.value,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value.norm() > 0.0);
        self.entries = out;
    }

    pub fn to_dense(&self, blocks: &[usize]) -> Vec<CMat> {
        let mut out: Vec<CMat> = blocks.iter().map(|&n| CMat::zeros(n, n)).collect();
        for e in &self.entries {
            out[e.block][(e.row, e.col)] += e.value;
            if e.row != e.col {
                out[e.block][(e.col, e.row)] += e.value.conj();
            }
        }
        out
    }

    /// `tr(A G)`.
    pub fn pair(&self, g: &[CMat]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                if e.row == e.col {
                    e.value.re * g[e.block][(e.row, e.row)].re
                } else {
                    2.0 * (e.value * g[e.block][(e.col, e.row)]).re
                }
            })
            .sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub a: HermData,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Constraint { a: HermData::default(), free: Vec::new(), rhs }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub c: HermData,
    pub free: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub num_free: usize,
    /// `None` asks for any feasible point.
    pub objective: Option<Objective>,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.contains(&0) {
            return Err(Error::DimensionMismatch("empty block".into()));
        }
        let check = |d: &HermData, free: &[(usize, f64)]| -> Result<()> {
            for e in &d.entries {
                let n = *self
                    .blocks
                    .get(e.block)
                    .ok_or_else(|| Error::DimensionMismatch(format!("block {} does not exist", e.block)))?;
                if e.row > e.col || e.col >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "entry ({}, {}) outside the upper triangle of block {}",
                        e.row, e.col, e.block
                    )));
                }
                if e.row == e.col && e.value.im.abs() > DIAG_IMAG_TOL {
                    return Err(Error::NotHermitian(format!("complex diagonal in block {}", e.block)));
                }
            }
            if let Some(&(j, _)) = free.iter().find(|(j, _)| *j >= self.num_free) {
                return Err(Error::DimensionMismatch(format!("free variable {j} does not exist")));
            }
            Ok(())
        };
        for c in &self.constraints {
            check(&c.a, &c.free)?;
            if !c.rhs.is_finite() {
                return Err(Error::InvalidInput("non-finite right-hand side".into()));
            }
        }
        if let Some(o) = &self.objective {
            check(&o.c, &o.free)?;
        }
        Ok(())
    }

    /// Residual `max_k |tr(A_k G) + (B f)_k - b_k|`.
    pub fn constraint_residual(&self, g: &[CMat], f: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let v = c.a.pair(g) + c.free.iter().map(|&(j, v)| v * f[j]).sum::<f64>();
                (v - c.rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, g: &[CMat], f: &[f64]) -> f64 {
        self.objective.as_ref().map_or(0.0, |o| {
            o.c.pair(g) + o.free.iter().map(|&(j, v)| v * f[j]).sum::<f64>()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    MaxIter,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Farkas ray `y` with `Σ y_k A_k ⪯ 0`, `Bᵀ y = 0` and `bᵀ y > 0`,
/// normalized to unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibilityRay {
    pub y: Vec<f64>,
    pub margin: f64,
    /// `max(0, λ_max(Σ y_k A_k)) + ‖Bᵀ y‖`.
    pub violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration cap of the alternating-projection fallback.
    pub fallback_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, fallback_iter: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub g: Vec<CMat>,
    pub free: Vec<f64>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub ray: Option<InfeasibilityRay>,
    pub used_fallback: bool,
    /// Constraints removed as linearly dependent.
    pub dropped_constraints: usize,
}

impl SdpResult {
    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.g.iter().map(linalg::min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

/// Solution of the real problem in real coordinates.
#[derive(Clone, Debug)]
pub(crate) struct RealSolution {
    pub status: SdpStatus,
    pub x: Vec<DMatrix<f64>>,
    pub f: DVector<f64>,
    pub y: DVector<f64>,
    pub iterations: usize,
    pub ray: Option<DVector<f64>>,
    pub used_fallback: bool,
}

pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpResult> {
    let real = realify(p)?;
    let pre = preprocess::reduce(&real);
    let sol = match &pre.verdict {
        preprocess::Verdict::Inconsistent(ray) => RealSolution {
            status: SdpStatus::Infeasible,
            x: real.zeros(),
            f: DVector::zeros(real.num_free()),
            y: DVector::zeros(real.num_constraints()),
            iterations: 0,
            ray: Some(ray.clone()),
            used_fallback: false,
        },
        preprocess::Verdict::Reduced(reduced) if pre.free_direction => {
            // A dependent free direction with nonzero cost: the objective is
            // unbounded as soon as the constraints can be met.
            let mut feas = reduced.clone();
            feas.c = SymSparse::default();
            feas.cf.fill(0.0);
            let mut sol = match ipm::solve(&feas, opts) {
                Ok(s) => s,
                Err(Error::Numerical(_)) => project::solve(&feas, &pre, opts),
                Err(e) => return Err(e),
            };
            if sol.status == SdpStatus::Optimal {
                sol.status = SdpStatus::Unbounded;
            }
            pre.expand(&mut sol, &real);
            sol
        }
        preprocess::Verdict::Reduced(reduced) => {
            let mut sol = match ipm::solve(reduced, opts) {
                Ok(s) => s,
                Err(Error::Numerical(_)) => project::solve(reduced, &pre, opts),
                Err(e) => return Err(e),
            };
            pre.expand(&mut sol, &real);
            sol
        }
    };
    Ok(finish(p, &real, sol, pre.dropped))
}

fn finish(p: &SdpProblem, real: &RealSdp, sol: RealSolution, dropped: usize) -> SdpResult {
    let g: Vec<CMat> = sol.x.iter().map(complexify).collect();
    let free: Vec<f64> = sol.f.iter().copied().collect();
    // Real multipliers pair with doubled data; `y` is already in complex units.
    let y: Vec<f64> = sol.y.iter().copied().collect();
    let primal_objective = p.objective_value(&g, &free);
    let dual_objective = p.constraints.iter().zip(&y).map(|(c, yk)| c.rhs * yk).sum::<f64>();
    let residuals = complex_residuals(p, &g, &free, &y);
    let ray = sol.ray.map(|r| ray_report(real, &r));
    SdpResult {
        status: sol.status,
        g,
        free,
        y,
        primal_objective,
        dual_objective,
        residuals,
        iterations: sol.iterations,
        ray,
        used_fallback: sol.used_fallback,
        dropped_constraints: dropped,
    }
}

fn complex_residuals(p: &SdpProblem, g: &[CMat], f: &[f64], y: &[f64]) -> Residuals {
    let bnorm = p.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    let primal = p.constraint_residual(g, f) / (1.0 + bnorm);
    // Z = C - Σ y_k A_k must be PSD and match the free-variable costs.
    let (c_dense, cf) = match &p.objective {
        Some(o) => {
            let mut cf = vec![0.0; p.num_free];
            for &(j, v) in &o.free {
                cf[j] += v;
            }
            (o.c.to_dense(&p.blocks), cf)
        }
        None => (HermData::default().to_dense(&p.blocks), vec![0.0; p.num_free]),
    };
    let cnorm = c_dense.iter().map(linalg::frobenius).fold(0.0, f64::max);
    let mut z = c_dense.clone();
    let mut bty = cf.clone();
    for (k, c) in p.constraints.iter().enumerate() {
        for (zb, ab) in z.iter_mut().zip(c.a.to_dense(&p.blocks)) {
            *zb -= ab * Complex64::new(y[k], 0.0);
        }
        for &(j, v) in &c.free {
            bty[j] -= v * y[k];
        }
    }
    let dual_cone = z.iter().map(|zb| (-linalg::min_eigenvalue(zb)).max(0.0)).fold(0.0, f64::max);
    let dual_free = bty.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let dual = (dual_cone + dual_free) / (1.0 + cnorm);
    let pobj = p.objective_value(g, f);
    let dobj: f64 = p.constraints.iter().zip(y).map(|(c, yk)| c.rhs * yk).sum();
    let gap = if p.objective.is_some() { (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()) } else { 0.0 };
    Residuals { primal, dual, gap }
}

fn ray_report(real: &RealSdp, ray: &DVector<f64>) -> InfeasibilityRay {
    let n = ray.norm();
    let y = if n > 0.0 { ray / n } else { ray.clone() };
    let aty = real.adjoint(&y);
    let lam = aty
        .iter()
        .filter(|m| m.nrows() > 0)
        .map(|m| m.clone().symmetric_eigenvalues().max())
        .fold(0.0, f64::max);
    let bty = if real.num_free() > 0 { (real.bfree.transpose() * &y).norm() } else { 0.0 };
    InfeasibilityRay {
        y: y.iter().copied().collect(),
        margin: real.b.dot(&y) / real.factor,
        violation: lam.max(0.0) + bty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(block: usize, v: f64) -> HermData {
        let mut h = HermData::default();
        h.push(block, 0, 0, Complex64::new(v, 0.0));
        h
    }

    #[test]
    fn minimize_t_with_lower_bound() {
        // minimize t subject to [[t]] ⪰ 0, t - s = 1, s ⪰ 0.
        let mut con = Constraint::new(1.0);
        con.a = scalar(0, 1.0);
        con.a.push(1, 0, 0, Complex64::new(-1.0, 0.0));
        let p = SdpProblem {
            blocks: vec![1, 1],
            constraints: vec![con],
            num_free: 0,
            objective: Some(Objective { c: scalar(0, 1.0), free: vec![] }),
        };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.primal_objective - 1.0).abs() < 1e-7, "{}", r.primal_objective);
        assert!(r.residuals.max() <= 1e-8, "{:?}", r.residuals);
    }

    #[test]
    fn fixed_off_diagonal_two_is_infeasible() {
        // [[1, x], [x, 1]] ⪰ 0 with x = 2.
        let mut cons = Vec::new();
        for (i, j, v) in [(0, 0, 1.0), (1, 1, 1.0)] {
            let mut c = Constraint::new(v);
            c.a.push(0, i, j, Complex64::new(1.0, 0.0));
            cons.push(c);
        }
        let mut c = Constraint::new(2.0);
        c.a.add_functional(0, 0, 1, Complex64::new(1.0, 0.0));
        cons.push(c);
        let p = SdpProblem { blocks: vec![2], constraints: cons, num_free: 0, objective: None };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Infeasible);
        let ray = r.ray.unwrap();
        assert!(ray.margin >= INFEASIBILITY_MARGIN);
        assert!(ray.violation <= 1e-7, "{ray:?}");
    }

    #[test]
    fn feasibility_returns_interior_point() {
        // [[1, x], [x, 1]] ⪰ 0 with x = 0.5: the solver should find it.
        let mut cons = Vec::new();
        for (i, v) in [(0, 1.0), (1, 1.0)] {
            let mut c = Constraint::new(v);
            c.a.push(0, i, i, Complex64::new(1.0, 0.0));
            cons.push(c);
        }
        let mut c = Constraint::new(0.5);
        c.a.add_functional(0, 0, 1, Complex64::new(1.0, 0.0));
        cons.push(c);
        let p = SdpProblem { blocks: vec![2], constraints: cons, num_free: 0, objective: None };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.g[0][(0, 1)].re - 0.5).abs() < 1e-7);
        assert!(r.min_eigenvalue() > 0.4);
    }

    #[test]
    fn complex_entries_and_free_variables() {
        // Minimize f subject to G = [[1, g], [g*, 1]] ⪰ 0, Im g = 0.6,
        // Re g - f = 0: optimum f = -0.8.
        let mut cons = Vec::new();
        for i in 0..2 {
            let mut c = Constraint::new(1.0);
            c.a.push(0, i, i, Complex64::new(1.0, 0.0));
            cons.push(c);
        }
        let mut c = Constraint::new(0.6);
        c.a.add_functional(0, 0, 1, Complex64::new(0.0, -1.0));
        cons.push(c);
        let mut c = Constraint::new(0.0);
        c.a.add_functional(0, 0, 1, Complex64::new(1.0, 0.0));
        c.free.push((0, -1.0));
        cons.push(c);
        let p = SdpProblem {
            blocks: vec![2],
            constraints: cons,
            num_free: 1,
            objective: Some(Objective { c: HermData::default(), free: vec![(0, 1.0)] }),
        };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal, "{:?}", r.residuals);
        assert!((r.free[0] + 0.8).abs() < 1e-6, "{}", r.free[0]);
        assert!((r.g[0][(0, 1)].im - 0.6).abs() < 1e-7);
    }

    #[test]
    fn duplicate_constraints_are_dropped() {
        let mut cons = Vec::new();
        for _ in 0..3 {
            let mut c = Constraint::new(2.0);
            c.a = scalar(0, 1.0);
            cons.push(c);
        }
        let p = SdpProblem {
            blocks: vec![1],
            constraints: cons,
            num_free: 0,
            objective: Some(Objective { c: scalar(0, 1.0), free: vec![] }),
        };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        assert_eq!(r.dropped_constraints, 2);
        assert!((r.g[0][(0, 0)].re - 2.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_duplicates_are_infeasible() {
        let mut cons = Vec::new();
        for v in [1.0, 2.0] {
            let mut c = Constraint::new(v);
            c.a = scalar(0, 1.0);
            cons.push(c);
        }
        let p = SdpProblem { blocks: vec![1], constraints: cons, num_free: 0, objective: None };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_free_objective() {
        // f free with no constraint tying it down.
        let mut c = Constraint::new(1.0);
        c.a = scalar(0, 1.0);
        let p = SdpProblem {
            blocks: vec![1],
            constraints: vec![c],
            num_free: 1,
            objective: Some(Objective { c: HermData::default(), free: vec![(0, 1.0)] }),
        };
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Unbounded);
    }
}
