//! Lower bounds from explicit finite-dimensional points of a module, and the
//! dilation, extension and compression constructions used to produce them.

mod dilate;
mod sample;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use dilate::{compress, isometry_extend, mconv_sample, unitary_dilate, Isometry, CONTRACTION_TOL, ISOMETRY_TOL};
pub use sample::{project_feasible, sample_feasible};

use crate::error::{Error, Result};
use crate::freealg::{FreePoly, MatrixTuple};
use crate::heisenberg;
use crate::linalg::{self, CMat};
use crate::qmodule::{ModuleDescription, ModuleKind};

/// Feasibility required of a reported search point.
pub const FEAS_TOL: f64 = 1e-8;
/// Smoothing of the top singular values.
pub const SMOOTHING_BETA: f64 = 200.0;
const TOP_K: usize = 3;

#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    pub n: usize,
    pub restarts: usize,
    pub iterations: usize,
    /// Initial ascent step, relative to the size of the tuple.
    pub step: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { n: 2, restarts: 32, iterations: 200, step: 0.5, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    /// `‖a(X)‖` at the returned point.
    pub value: f64,
    pub x: MatrixTuple,
    /// Largest generator violation of `x`.
    pub violation: f64,
    /// Index of the restart that produced `x`.
    pub restart: usize,
}

/// Maximizes `‖a(X)‖` over level-`n` points of `q` by projected gradient
/// ascent from independent random starts.
pub fn search_lower(a: &FreePoly, q: &ModuleDescription, cfg: &SearchConfig) -> Result<SearchResult> {
    if **a.signature() != *q.sig {
        return Err(Error::SignatureMismatch("polynomial and module use different variables".into()));
    }
    if cfg.n == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidInput("search needs n >= 1 and at least one restart".into()));
    }
    match q.kind {
        ModuleKind::Sos => {
            return Err(Error::NotArchimedean(format!("{}: norms are unbounded over sums of squares", q.name)))
        }
        ModuleKind::Custom => {
            return Err(Error::InvalidInput(format!("module `{}` has no feasible-point sampler", q.name)))
        }
        _ => {}
    }
    let runs: Vec<Result<(f64, MatrixTuple)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            if q.kind == ModuleKind::Heisenberg {
                heisenberg_run(a, cfg, &mut rng)
            } else {
                ascent_run(a, q, cfg, &mut rng)
            }
        })
        .collect();
    let mut best: Option<(usize, f64, MatrixTuple)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let (v, x) = run?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((r, v, x));
        }
    }
    let (restart, value, x) = best.expect("at least one restart");
    let violation = q.violation(&x)?;
    if violation > FEAS_TOL {
        return Err(Error::Numerical(format!("no feasible point found (violation {violation:.3e})")));
    }
    Ok(SearchResult { value, x, violation, restart })
}

/// Smoothed objective `β⁻¹ log Σ_k exp(β σ_k²)` over the top singular values,
/// with the weights `∂/∂σ_k²` and the singular pairs.
struct Spectral {
    value: f64,
    norm: f64,
    pairs: Vec<(f64, f64, nalgebra::DVector<Complex64>, nalgebra::DVector<Complex64>)>,
}

fn spectral(m: &CMat) -> Spectral {
    let f = linalg::svd(m);
    let order: Vec<usize> = (0..f.s.len().min(TOP_K)).collect();
    let sig: Vec<f64> = order.iter().map(|&k| f.s[k]).collect();
    let top = sig[0] * sig[0];
    let exps: Vec<f64> = sig.iter().map(|s| (SMOOTHING_BETA * (s * s - top)).exp()).collect();
    let total: f64 = exps.iter().sum();
    let value = top + total.ln() / SMOOTHING_BETA;
    let pairs = order
        .iter()
        .zip(&sig)
        .zip(&exps)
        .map(|((&k, &s), &e)| (s, e / total, f.u.column(k).into_owned(), f.v.column(k).into_owned()))
        .collect();
    Spectral { value, norm: sig[0], pairs }
}

/// Gradient of the smoothed objective with respect to each matrix, using
/// `Re tr(G* dX)` as the pairing.
fn gradient(a: &FreePoly, x: &MatrixTuple, sp: &Spectral) -> Vec<CMat> {
    let sig = a.signature();
    let letters = x.letter_matrices(sig);
    let n = x.dim();
    let mut grads = vec![CMat::zeros(n, n); x.len()];
    for (w, &c) in a.terms() {
        let ls = w.letters();
        if ls.is_empty() {
            continue;
        }
        // prefix[p] = L_0 ... L_{p-1}, suffix[p] = L_{p+1} ... L_end.
        let mut prefix = vec![linalg::identity(n)];
        for &l in ls {
            let next = prefix.last().unwrap() * &letters[l as usize];
            prefix.push(next);
        }
        let mut suffix = vec![linalg::identity(n); ls.len() + 1];
        for p in (0..ls.len()).rev() {
            suffix[p] = &letters[ls[p] as usize] * &suffix[p + 1];
        }
        for (s, wt, u, v) in &sp.pairs {
            let scale = Complex64::new(2.0 * s * wt, 0.0) * c;
            // d(σ²) = 2σ Re(u* c P dL Q v).
            for (p, &l) in ls.iter().enumerate() {
                let k = &suffix[p + 1] * v * (u.adjoint() * &prefix[p]) * scale;
                let (var, star) = sig.letter_var(l);
                if star {
                    grads[var] += k;
                } else {
                    grads[var] += k.adjoint();
                }
            }
        }
    }
    for (i, g) in grads.iter_mut().enumerate() {
        if sig.is_hermitian_var(i) {
            *g = linalg::hermitian_part(g);
        }
    }
    grads
}

fn objective(a: &FreePoly, x: &MatrixTuple) -> Spectral {
    let letters = x.letter_matrices(a.signature());
    spectral(&a.evaluate_letters(&letters, x.dim()))
}

fn ascent_run(a: &FreePoly, q: &ModuleDescription, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Result<(f64, MatrixTuple)> {
    let mut x = project_feasible(&sample_feasible(q, cfg.n, rng)?, q)?;
    let mut cur = objective(a, &x);
    let mut step = cfg.step;
    for _ in 0..cfg.iterations {
        let g = gradient(a, &x, &cur);
        let gnorm = g.iter().map(|m| linalg::frobenius(m).powi(2)).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let xnorm = x.mats().iter().map(|m| linalg::frobenius(m).powi(2)).sum::<f64>().sqrt().max(1.0);
        let mut accepted = false;
        while step > 1e-12 {
            let scale = Complex64::new(step * xnorm / gnorm, 0.0);
            let trial: Vec<CMat> = x.mats().iter().zip(&g).map(|(m, d)| m + d * scale).collect();
            let trial = project_feasible(&MatrixTuple::new(trial)?, q)?;
            let val = objective(a, &trial);
            if val.value > cur.value {
                x = trial;
                cur = val;
                step = (step * 1.5).min(cfg.step * 4.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((cur.norm, x))
}

/// Over Heisenberg points the norm of a direct sum is the largest norm of
/// a summand, so it is enough to search irreducibles of dimension `q ≤ n`
/// over the Bloch phases and pad with copies of the best one's trivial part.
fn heisenberg_run(a: &FreePoly, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Result<(f64, MatrixTuple)> {
    let q = rng.random_range(1..=cfg.n as i64);
    let p = loop {
        let p = rng.random_range(0..q);
        if heisenberg::gcd(p, q) == 1 {
            break p;
        }
    };
    let eval = |k: [f64; 2]| -> Result<f64> {
        let x = heisenberg::irrep(p, q, k[0], k[1])?;
        Ok(linalg::spectral_norm(&a.evaluate(&x)?))
    };
    let mut k = [rng.random::<f64>() * TAU, rng.random::<f64>() * TAU];
    let mut best = eval(k)?;
    let mut h = 0.5;
    let mut iters = 0;
    while h > 1e-9 && iters < cfg.iterations * 4 {
        iters += 1;
        let mut improved = false;
        for dim in 0..2 {
            for sgn in [1.0, -1.0] {
                let mut t = k;
                t[dim] += sgn * h;
                let v = eval(t)?;
                if v > best {
                    best = v;
                    k = t;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let irr = heisenberg::irrep(p, q, k[0], k[1])?;
    let mut x = irr.clone();
    while x.dim() + irr.dim() <= cfg.n {
        x = x.direct_sum(&irr)?;
    }
    if x.dim() < cfg.n {
        let pad = heisenberg::irrep(0, 1, k[0], k[1])?;
        while x.dim() < cfg.n {
            x = x.direct_sum(&pad)?;
        }
    }
    let value = linalg::spectral_norm(&a.evaluate(&x)?);
    Ok((value, x))
}
