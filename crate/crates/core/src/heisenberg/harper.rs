use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freealg::MatrixTuple;
use crate::linalg::{self, CMat};

/// Rational angle `θ = 2πp/q` with Bloch phases and a grid resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarperParams {
    pub p: i64,
    pub q: i64,
    pub k1: f64,
    pub k2: f64,
    pub grid: usize,
}

impl HarperParams {
    pub fn validate(&self) -> Result<()> {
        check_coprime(self.p, self.q)
    }

    pub fn theta(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_coprime(p: i64, q: i64) -> Result<()> {
    if q < 1 {
        return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::InvalidInput(format!("gcd({p}, {q}) != 1")));
    }
    Ok(())
}

/// Irreducible `q`-dimensional representation at `θ = 2πp/q`: `a` is the
/// clock matrix `diag(1, ω, ..., ω^{q-1})` times `e^{ik₁}`, `b` the cyclic
/// shift `e_j -> e_{j+1}` times `e^{ik₂}`, and `c = ω I`.
pub fn irrep(p: i64, q: i64, k1: f64, k2: f64) -> Result<MatrixTuple> {
    check_coprime(p, q)?;
    let n = q as usize;
    let omega = |e: i64| Complex64::cis(TAU * (p * e).rem_euclid(q) as f64 / q as f64);
    let mut a = CMat::zeros(n, n);
    let mut b = CMat::zeros(n, n);
    let ph1 = Complex64::cis(k1);
    let ph2 = Complex64::cis(k2);
    for j in 0..n {
        a[(j, j)] = ph1 * omega(j as i64);
        b[((j + 1) % n, j)] += ph2;
    }
    let c = linalg::identity(n) * omega(1);
    MatrixTuple::new(vec![a, b, c])
}

/// `H = A + A* + B + B*` for the irrep at `(p, q, k₁, k₂)`, built entrywise.
pub fn harper_matrix(p: i64, q: i64, k1: f64, k2: f64) -> CMat {
    let n = q as usize;
    let mut h = CMat::zeros(n, n);
    for j in 0..n {
        let phase = TAU * (p * j as i64).rem_euclid(q) as f64 / q as f64 + k1;
        h[(j, j)] += Complex64::new(2.0 * phase.cos(), 0.0);
        let e = Complex64::cis(k2);
        h[((j + 1) % n, j)] += e;
        h[(j, (j + 1) % n)] += e.conj();
    }
    h
}

/// Spectral edges of `H_θ` over all Bloch phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarperEdges {
    pub max: f64,
    pub min: f64,
    /// Phases at which `max` was found.
    pub argmax: (f64, f64),
}

fn top(p: i64, q: i64, k1: f64, k2: f64) -> f64 {
    linalg::max_eigenvalue(&harper_matrix(p, q, k1, k2))
}

fn bottom(p: i64, q: i64, k1: f64, k2: f64) -> f64 {
    linalg::min_eigenvalue(&harper_matrix(p, q, k1, k2))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Uniform `grid × grid` scan of Bloch phases followed by one
/// golden-section pass per coordinate around the best grid points.
pub fn harper_edges(p: i64, q: i64, grid: usize) -> Result<HarperEdges> {
    check_coprime(p, q)?;
    if grid < 2 {
        return Err(Error::InvalidInput("grid must be at least 2".into()));
    }
    let step = TAU / grid as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for a in 0..grid {
        for b in 0..grid {
            let (k1, k2) = (a as f64 * step, b as f64 * step);
            let vals = linalg::herm_eigenvalues(&harper_matrix(p, q, k1, k2));
            let (lo, hi) = (vals[0], vals[vals.len() - 1]);
            if hi > best.0 {
                best = (hi, k1, k2);
            }
            if lo < worst.0 {
                worst = (lo, k1, k2);
            }
        }
    }
    let iters = 40;
    let (k1, _) = golden_max(|k| top(p, q, k, best.2), best.1 - step, best.1 + step, iters);
    let (k2, refined) = golden_max(|k| top(p, q, k1, k), best.2 - step, best.2 + step, iters);
    let (max, argmax) = if refined > best.0 { (refined, (k1, k2)) } else { (best.0, (best.1, best.2)) };

    let (m1, _) = golden_max(|k| -bottom(p, q, k, worst.2), worst.1 - step, worst.1 + step, iters);
    let (_, m2) = golden_max(|k| -bottom(p, q, m1, k), worst.2 - step, worst.2 + step, iters);
    let min = worst.0.min(-m2);
    Ok(HarperEdges { max, min, argmax })
}

/// Largest eigenvalue of `H_θ` over the Bloch-phase grid (with refinement).
pub fn harper_norm(p: i64, q: i64, grid: usize) -> Result<f64> {
    Ok(harper_edges(p, q, grid)?.max)
}

/// Edge of the spectrum using only the phases `(k₁, k₂) ∈ {0, π/q}²`.
///
/// The characteristic polynomial of the Bloch matrix depends on the phases
/// only through `cos(q k₁) + cos(q k₂)`, so its extreme roots are attained
/// where that sum is ±2. Cheap enough for large `q`.
pub fn harper_norm_chambers(p: i64, q: i64) -> Result<HarperEdges> {
    check_coprime(p, q)?;
    let s = PI / q as f64;
    let mut best = HarperEdges { max: f64::NEG_INFINITY, min: f64::INFINITY, argmax: (0.0, 0.0) };
    for (k1, k2) in [(0.0, 0.0), (s, 0.0), (0.0, s), (s, s)] {
        let vals = linalg::herm_eigenvalues(&harper_matrix(p, q, k1, k2));
        if vals[vals.len() - 1] > best.max {
            best.max = vals[vals.len() - 1];
            best.argmax = (k1, k2);
        }
        best.min = best.min.min(vals[0]);
    }
    Ok(best)
}

/// Reduced fractions `p/q ∈ [0, 1]` with `q ≤ q_max`, ascending.
pub fn farey_fractions(q_max: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for q in 1..=q_max.max(1) {
        for p in 0..=q {
            if gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ButterflyRecord {
    pub theta: f64,
    pub p: i64,
    pub q: i64,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

/// Spectral edges of `H_θ` at every Farey angle `θ = 2πp/q`, `q ≤ q_max`,
/// sorted by `θ`.
pub fn butterfly(q_max: i64, grid: usize) -> Result<Vec<ButterflyRecord>> {
    if q_max < 1 {
        return Err(Error::InvalidInput("q_max must be at least 1".into()));
    }
    farey_fractions(q_max)
        .into_par_iter()
        .map(|(p, q)| {
            let e = harper_edges(p, q, grid)?;
            Ok(ButterflyRecord {
                theta: TAU * p as f64 / q as f64,
                p,
                q,
                norm_plus: e.max,
                norm_minus: e.min,
            })
        })
        .collect()
}

/// Formats `x` with 12 significant digits.
pub(crate) fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.11}", x);
    }
    let mag = x.abs().log10().floor() as i32;
    if mag < -4 {
        return format!("{:.11e}", x);
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub fn butterfly_csv(records: &[ButterflyRecord]) -> String {
    let mut out = String::from("theta,p,q,norm_plus,norm_minus\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig12(r.theta),
            r.p,
            r.q,
            sig12(r.norm_plus),
            sig12(r.norm_minus)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn totient(n: i64) -> i64 {
        (1..=n).filter(|&k| gcd(k, n) == 1).count() as i64
    }

    #[test]
    fn abelian_case_is_scalar() {
        let t = irrep(0, 1, 0.4, -1.2).unwrap();
        assert_eq!(t.dim(), 1);
        assert!((t.get(0)[(0, 0)] - Complex64::cis(0.4)).norm() < 1e-15);
        assert!((t.get(1)[(0, 0)] - Complex64::cis(-1.2)).norm() < 1e-15);
        assert!((t.get(2)[(0, 0)] - linalg::ONE).norm() < 1e-15);
    }

    #[test]
    fn q2_clock_and_shift() {
        let t = irrep(1, 2, 0.0, 0.0).unwrap();
        let a = t.get(0);
        let b = t.get(1);
        assert!((a[(0, 0)] - linalg::ONE).norm() < 1e-15);
        assert!((a[(1, 1)] + linalg::ONE).norm() < 1e-15);
        assert!((b[(0, 1)] - linalg::ONE).norm() < 1e-15 && (b[(1, 0)] - linalg::ONE).norm() < 1e-15);
        let comm = a * b * a.adjoint() * b.adjoint();
        assert!(linalg::max_abs_diff(&comm, &(-linalg::identity(2))) < 1e-15);
    }

    #[test]
    fn rejects_non_coprime() {
        assert!(irrep(2, 4, 0.0, 0.0).is_err());
        assert!(irrep(1, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn harper_matrix_matches_evaluation() {
        let t = irrep(3, 7, 0.2, 0.9).unwrap();
        let sig = super::super::signature();
        let h = super::super::harper_element(&sig).evaluate(&t).unwrap();
        assert!(linalg::max_abs_diff(&h, &harper_matrix(3, 7, 0.2, 0.9)) < 1e-13);
    }

    #[test]
    fn commuting_case_is_four() {
        assert_eq!(harper_norm(0, 1, 8).unwrap(), 4.0);
    }

    #[test]
    fn half_flux_is_two_sqrt_two() {
        let v = harper_norm(1, 2, 64).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-3, "{v}");
    }

    #[test]
    fn chambers_shortcut_matches_grid() {
        for q in 1..=12 {
            for p in 0..q {
                if gcd(p, q) != 1 {
                    continue;
                }
                let g = harper_edges(p, q, 64).unwrap();
                let c = harper_norm_chambers(p, q).unwrap();
                assert!((g.max - c.max).abs() < 1e-9, "p={p} q={q}: {} vs {}", g.max, c.max);
                assert!((g.min - c.min).abs() < 1e-9, "p={p} q={q}: {} vs {}", g.min, c.min);
            }
        }
    }

    #[test]
    fn farey_count() {
        for qmax in 1..=12 {
            let expect: i64 = (1..=qmax).map(totient).sum::<i64>() + 1;
            assert_eq!(farey_fractions(qmax).len() as i64, expect);
        }
    }

    #[test]
    fn csv_has_twelve_significant_digits() {
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(sig12(-2.0 * 2f64.sqrt()), "-2.82842712475");
        assert_eq!(sig12(4.0), "4.00000000000");
    }
}
