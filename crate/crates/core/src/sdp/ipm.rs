//! Homogeneous self-dual interior point method.
//!
//! Unknowns `(X, f, y, Z, τ, κ)` with
//!
//! ```text
//! A(X) + B f - b τ = 0
//! Aᵀ y + Z - C τ = 0
//! Bᵀ y - c_f τ = 0
//! bᵀ y - ⟨C, X⟩ - c_fᵀ f - κ = 0
//! X, Z ⪰ 0,  τ, κ ≥ 0
//! ```
//!
//! A solution with `τ > 0` rescales to a primal-dual optimal pair; `κ > 0`
//! yields an infeasibility ray. Directions use Nesterov–Todd scaling
//! `W Z W = X` with Mehrotra's predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::real::RealSdp;
use super::{RealSolution, SdpStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg;

type Blocks = Vec<DMatrix<f64>>;

const STEP_FRACTION: f64 = 0.98;

struct Scaling {
    f: DMatrix<f64>,
    finv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<Scaling> {
    let lx = Cholesky::new(x.clone()).ok_or_else(|| Error::Numerical("primal block lost definiteness".into()))?.unpack();
    let lz = Cholesky::new(z.clone()).ok_or_else(|| Error::Numerical("dual block lost definiteness".into()))?.unpack();
    let (_, lambda, v) = linalg::real_svd(&(lz.transpose() * &lx));
    let lambda = DVector::from_vec(lambda);
    if lambda.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(Error::Numerical("degenerate scaling point".into()));
    }
    let n = x.nrows();
    let mut f = &lx * &v;
    for j in 0..n {
        let s = lambda[j].powf(-0.5);
        f.column_mut(j).scale_mut(s);
    }
    let lx_inv = lx
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular primal factor".into()))?;
    let mut finv = v.transpose() * lx_inv;
    for i in 0..n {
        let s = lambda[i].sqrt();
        finv.row_mut(i).scale_mut(s);
    }
    let w = &f * f.transpose();
    Ok(Scaling { f, finv, w, lambda })
}

fn sym(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Largest `α ≤ ∞` keeping `Λ + α D` PSD, for `D` given in scaled coordinates.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let inv: Vec<f64> = lambda.iter().map(|l| l.powf(-0.5)).collect();
    let m = DMatrix::from_fn(n, n, |i, j| inv[i] * d[(i, j)] * inv[j]);
    let lmin = m.symmetric_eigenvalues().min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

/// Entries `(i, j, value)` of one constraint on one block.
type BlockEntries = Vec<(usize, usize, f64)>;

struct Problem<'a> {
    p: &'a RealSdp,
    c: Blocks,
    /// Constraints touching each block, with their entries there.
    touch: Vec<Vec<(usize, BlockEntries)>>,
    bnorm: f64,
    cnorm: f64,
}

impl<'a> Problem<'a> {
    fn new(p: &'a RealSdp) -> Self {
        let mut c = p.zeros();
        p.c.add_to(1.0, &mut c);
        let mut touch: Vec<Vec<(usize, BlockEntries)>> = vec![Vec::new(); p.dims.len()];
        for (k, a) in p.a.iter().enumerate() {
            for &(b, i, j, v) in &a.entries {
                match touch[b].last_mut() {
                    Some((kk, e)) if *kk == k => e.push((i, j, v)),
                    _ => touch[b].push((k, vec![(i, j, v)])),
                }
            }
        }
        let bnorm = p.b.amax();
        let cnorm = c.iter().map(|m| m.amax()).fold(p.cf.amax(), f64::max);
        Problem { p, c, touch, bnorm, cnorm }
    }

    fn m(&self) -> usize {
        self.p.num_constraints()
    }

    fn nf(&self) -> usize {
        self.p.num_free()
    }

    fn bt(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.nf() > 0 {
            self.p.bfree.transpose() * y
        } else {
            DVector::zeros(0)
        }
    }
}

/// Cholesky with a tiny diagonal shift as a second chance.
fn factor(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1e-300);
    let mut shifted = m.clone();
    for i in 0..m.nrows() {
        shifted[(i, i)] += 1e-13 * scale;
    }
    Cholesky::new(shifted)
}

struct Newton<'a> {
    pr: &'a Problem<'a>,
    sc: Vec<Scaling>,
    chol_m: Cholesky<f64, Dyn>,
    /// `M⁻¹ B` and the Cholesky factor of `Bᵀ M⁻¹ B`.
    minv_b: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
    g: DVector<f64>,
    c_wcw: f64,
    y2: DVector<f64>,
    f2: DVector<f64>,
}

struct Direction {
    dx: Blocks,
    df: DVector<f64>,
    dy: DVector<f64>,
    dz: Blocks,
    dtau: f64,
    dkappa: f64,
}

impl<'a> Newton<'a> {
    fn new(pr: &'a Problem<'a>, x: &Blocks, z: &Blocks) -> Result<Self> {
        let p = pr.p;
        let m = pr.m();
        let sc: Vec<Scaling> = x.iter().zip(z).map(|(x, z)| nt_scaling(x, z)).collect::<Result<_>>()?;
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (b, touch) in pr.touch.iter().enumerate() {
            let w = &sc[b].w;
            let n = w.nrows();
            let mut pk = DMatrix::<f64>::zeros(n, n);
            for (k, ent) in touch {
                pk.fill(0.0);
                for &(i, j, v) in ent {
                    pk.ger(v, &w.column(i), &w.column(j), 1.0);
                    if i != j {
                        pk.ger(v, &w.column(j), &w.column(i), 1.0);
                    }
                }
                for (l, ent2) in touch {
                    let mut s = 0.0;
                    for &(i, j, v) in ent2 {
                        s += if i == j { v * pk[(i, i)] } else { v * (pk[(i, j)] + pk[(j, i)]) };
                    }
                    schur[(*l, *k)] += s;
                }
            }
        }
        sym(&mut schur);
        let chol_m = factor(&schur).ok_or_else(|| Error::Numerical("Schur complement is singular".into()))?;
        let nf = pr.nf();
        let (minv_b, chol_s) = if nf > 0 {
            let mb = chol_m.solve(&p.bfree);
            let mut s = p.bfree.transpose() * &mb;
            sym(&mut s);
            let cs = factor(&s).ok_or_else(|| Error::Numerical("free-variable system is singular".into()))?;
            (mb, Some(cs))
        } else {
            (DMatrix::zeros(m, 0), None)
        };
        let wcw: Blocks = sc
            .iter()
            .zip(&pr.c)
            .map(|(s, c)| {
                let mut t = &s.w * c * &s.w;
                sym(&mut t);
                t
            })
            .collect();
        let g = DVector::from_iterator(m, p.a.iter().map(|a| a.dot(&wcw)));
        let c_wcw = inner(&pr.c, &wcw);
        let mut nt = Newton {
            pr,
            sc,
            chol_m,
            minv_b,
            chol_s,
            g,
            c_wcw,
            y2: DVector::zeros(m),
            f2: DVector::zeros(nf),
        };
        let rhs = &p.b + &nt.g;
        let (y2, f2) = nt.saddle(&rhs, &p.cf);
        nt.y2 = y2;
        nt.f2 = f2;
        Ok(nt)
    }

    /// Solves `[[M, B], [Bᵀ, 0]] (y, f) = (r, s)`.
    fn saddle(&self, r: &DVector<f64>, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match &self.chol_s {
            None => (self.chol_m.solve(r), DVector::zeros(0)),
            Some(cs) => {
                let t = self.minv_b.transpose() * r - s;
                let f = cs.solve(&t);
                let y = self.chol_m.solve(&(r - &self.pr.p.bfree * &f));
                (y, f)
            }
        }
    }

    fn wmw(&self, m: &[DMatrix<f64>]) -> Blocks {
        self.sc
            .iter()
            .zip(m)
            .map(|(s, m)| {
                let mut t = &s.w * m * &s.w;
                sym(&mut t);
                t
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        eta: f64,
        res: &Residual,
        rc: &Blocks,
        r_tau: f64,
        tau: f64,
        kappa: f64,
    ) -> Direction {
        let p = self.pr.p;
        let rd: Blocks = res.rd.iter().map(|m| m * eta).collect();
        let rp = &res.rp * eta;
        let rf = &res.rf * eta;
        let rg = res.rg * eta;
        let wrdw = self.wmw(&rd);
        let t: Blocks = rc.iter().zip(&wrdw).map(|(a, b)| a - b).collect();
        let at = DVector::from_iterator(self.pr.m(), p.a.iter().map(|a| a.dot(&t)));
        let h1 = &rp - at;
        let h4 = rg + inner(&self.pr.c, &t) + r_tau / tau;
        let (y1, f1) = self.saddle(&h1, &rf);
        let bg = &p.b - &self.g;
        let cf1 = if !f1.is_empty() { p.cf.dot(&f1) } else { 0.0 };
        let cf2 = if !self.f2.is_empty() { p.cf.dot(&self.f2) } else { 0.0 };
        let denom = bg.dot(&self.y2) - cf2 + self.c_wcw + kappa / tau;
        let dtau = (h4 - bg.dot(&y1) + cf1) / denom;
        let dy = &y1 + &self.y2 * dtau;
        let df = &f1 + &self.f2 * dtau;
        let aty = p.adjoint(&dy);
        let dz: Blocks = rd
            .iter()
            .zip(&aty)
            .zip(&self.pr.c)
            .map(|((r, a), c)| r - a + c * dtau)
            .collect();
        let wdzw = self.wmw(&dz);
        let dx: Blocks = rc.iter().zip(&wdzw).map(|(a, b)| a - b).collect();
        let dkappa = (r_tau - kappa * dtau) / tau;
        Direction { dx, df, dy, dz, dtau, dkappa }
    }

    fn scaled(&self, d: &Direction) -> (Blocks, Blocks) {
        let dxs = self
            .sc
            .iter()
            .zip(&d.dx)
            .map(|(s, m)| {
                let mut t = &s.finv * m * s.finv.transpose();
                sym(&mut t);
                t
            })
            .collect();
        let dzs = self
            .sc
            .iter()
            .zip(&d.dz)
            .map(|(s, m)| {
                let mut t = s.f.transpose() * m * &s.f;
                sym(&mut t);
                t
            })
            .collect();
        (dxs, dzs)
    }

    fn step(&self, d: &Direction, dxs: &Blocks, dzs: &Blocks, tau: f64, kappa: f64) -> f64 {
        let mut a = f64::INFINITY;
        for (s, (dx, dz)) in self.sc.iter().zip(dxs.iter().zip(dzs)) {
            a = a.min(max_step(&s.lambda, dx)).min(max_step(&s.lambda, dz));
        }
        if d.dtau < 0.0 {
            a = a.min(-tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-kappa / d.dkappa);
        }
        a
    }

    /// `F R̃ Fᵀ` where `Λ R̃ + R̃ Λ = rhs`.
    fn lyapunov(&self, rhs: &[DMatrix<f64>]) -> Blocks {
        self.sc
            .iter()
            .zip(rhs)
            .map(|(s, r)| {
                let n = s.lambda.len();
                let rt = DMatrix::from_fn(n, n, |i, j| r[(i, j)] / (s.lambda[i] + s.lambda[j]));
                let mut t = &s.f * rt * s.f.transpose();
                sym(&mut t);
                t
            })
            .collect()
    }
}

struct Residual {
    rp: DVector<f64>,
    rd: Blocks,
    rf: DVector<f64>,
    rg: f64,
}

struct State {
    x: Blocks,
    f: DVector<f64>,
    y: DVector<f64>,
    z: Blocks,
    tau: f64,
    kappa: f64,
}

impl State {
    fn residual(&self, pr: &Problem) -> Residual {
        let p = pr.p;
        let rp = &p.b * self.tau - p.apply(&self.x, &self.f);
        let aty = p.adjoint(&self.y);
        let rd: Blocks = pr
            .c
            .iter()
            .zip(&aty)
            .zip(&self.z)
            .map(|((c, a), z)| c * self.tau - a - z)
            .collect();
        let rf = &p.cf * self.tau - pr.bt(&self.y);
        let rg = self.kappa - p.b.dot(&self.y) + p.objective(&self.x, &self.f);
        Residual { rp, rd, rf, rg }
    }

    fn mu(&self, nu: f64) -> f64 {
        (inner(&self.x, &self.z) + self.tau * self.kappa) / (nu + 1.0)
    }
}

struct Measures {
    primal: f64,
    dual: f64,
    gap: f64,
}

impl Measures {
    fn worst(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

fn measures(pr: &Problem, s: &State, res: &Residual) -> Measures {
    let t = s.tau;
    let primal = res.rp.amax() / t / (1.0 + pr.bnorm);
    let dual = (res.rd.iter().map(|m| m.amax()).fold(0.0, f64::max) + res.rf.amax()) / t / (1.0 + pr.cnorm);
    let pobj = pr.p.objective(&s.x, &s.f) / t;
    let dobj = pr.p.b.dot(&s.y) / t;
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    Measures { primal, dual, gap }
}

/// Internal accuracy target, a little below the caller's so that the
/// residuals recomputed in complex coordinates still meet `tol`.
const INNER_TOL_FACTOR: f64 = 0.1;

pub(crate) fn solve(p: &RealSdp, opts: &SolverOptions) -> Result<RealSolution> {
    // Normalize b and C; rows are already unit length.
    let beta = p.b.amax().max(1.0);
    let gamma = {
        let mut c = p.zeros();
        p.c.add_to(1.0, &mut c);
        c.iter().map(|m| m.amax()).fold(p.cf.amax(), f64::max).max(1.0)
    };
    let mut scaled = p.clone();
    scaled.b /= beta;
    scaled.c.scale(1.0 / gamma);
    scaled.cf /= gamma;
    let pr = Problem::new(&scaled);
    let nu: f64 = p.dims.iter().sum::<usize>() as f64;
    let tol = opts.tol * INNER_TOL_FACTOR;

    let mut s = State {
        x: p.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        f: DVector::zeros(pr.nf()),
        y: DVector::zeros(pr.m()),
        z: p.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        tau: 1.0,
        kappa: 1.0,
    };

    let finish = |s: &State, status: SdpStatus, iterations: usize, ray: Option<DVector<f64>>| RealSolution {
        status,
        x: s.x.iter().map(|m| m * (beta / s.tau)).collect(),
        f: &s.f * (beta / s.tau),
        y: &s.y * (gamma / s.tau),
        iterations,
        ray,
        used_fallback: false,
    };

    let mut best: Option<(f64, usize, State)> = None;
    let mut stalls = 0;
    let mut iters = 0;
    for it in 0..opts.max_iter {
        iters = it + 1;
        let res = s.residual(&pr);
        let meas = measures(&pr, &s, &res);
        if meas.worst() <= tol {
            return Ok(finish(&s, SdpStatus::Optimal, it, None));
        }
        // Primal infeasibility: bᵀy > 0 while Aᵀy + Z and Bᵀy vanish relative to it.
        let bty = scaled.b.dot(&s.y);
        if bty > 0.0 {
            let aty = scaled.adjoint(&s.y);
            let r: f64 = aty.iter().zip(&s.z).map(|(a, z)| (a + z).amax()).fold(0.0, f64::max);
            if r + pr.bt(&s.y).amax() <= tol * bty {
                let mut out = finish(&s, SdpStatus::Infeasible, it, Some(s.y.clone()));
                out.y = s.y.clone();
                return Ok(out);
            }
        }
        // Dual infeasibility: a primal ray of negative cost.
        let cx = scaled.objective(&s.x, &s.f);
        if cx < 0.0 {
            let r = scaled.apply(&s.x, &s.f).amax();
            if r <= tol * (-cx) {
                return Ok(finish(&s, SdpStatus::Unbounded, it, None));
            }
        }
        if best.as_ref().is_none_or(|b| meas.worst() < b.0) {
            best = Some((
                meas.worst(),
                it,
                State { x: s.x.clone(), f: s.f.clone(), y: s.y.clone(), z: s.z.clone(), tau: s.tau, kappa: s.kappa },
            ));
        }

        let nt = match Newton::new(&pr, &s.x, &s.z) {
            Ok(nt) => nt,
            Err(e) => {
                if it == 0 {
                    return Err(e);
                }
                break;
            }
        };
        let mu = s.mu(nu);

        // Predictor.
        let rc: Blocks = s.x.iter().map(|m| -m).collect();
        let pred = nt.direction(1.0, &res, &rc, -s.tau * s.kappa, s.tau, s.kappa);
        let (dxs, dzs) = nt.scaled(&pred);
        let a_aff = nt.step(&pred, &dxs, &dzs, s.tau, s.kappa).min(1.0);
        let mu_aff = {
            let xz: f64 = s
                .x
                .iter()
                .zip(&pred.dx)
                .zip(s.z.iter().zip(&pred.dz))
                .map(|((x, dx), (z, dz))| (x + dx * a_aff).dot(&(z + dz * a_aff)))
                .sum();
            (xz + (s.tau + a_aff * pred.dtau) * (s.kappa + a_aff * pred.dkappa)) / (nu + 1.0)
        };
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rhs: Blocks = nt
            .sc
            .iter()
            .zip(dxs.iter().zip(&dzs))
            .map(|(sc, (dx, dz))| {
                let n = sc.lambda.len();
                let mut r = -(dx * dz + dz * dx);
                for i in 0..n {
                    r[(i, i)] += 2.0 * sigma * mu - 2.0 * sc.lambda[i] * sc.lambda[i];
                }
                r
            })
            .collect();
        let rc = nt.lyapunov(&rhs);
        let r_tau = sigma * mu - s.tau * s.kappa - pred.dtau * pred.dkappa;
        let dir = nt.direction(1.0 - sigma, &res, &rc, r_tau, s.tau, s.kappa);
        let (dxs, dzs) = nt.scaled(&dir);
        let alpha = (STEP_FRACTION * nt.step(&dir, &dxs, &dzs, s.tau, s.kappa)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }

        for (x, dx) in s.x.iter_mut().zip(&dir.dx) {
            *x += dx * alpha;
            sym(x);
        }
        for (z, dz) in s.z.iter_mut().zip(&dir.dz) {
            *z += dz * alpha;
            sym(z);
        }
        s.f += &dir.df * alpha;
        s.y += &dir.dy * alpha;
        s.tau += alpha * dir.dtau;
        s.kappa += alpha * dir.dkappa;
        if !(s.tau > 0.0 && s.kappa > 0.0) {
            break;
        }
    }
    let (_, _, st) = best.expect("at least one iterate");
    Ok(finish(&st, SdpStatus::MaxIter, iters, None))
}
