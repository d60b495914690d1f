//! Feasible points and retractions, one recipe per module family.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::freealg::MatrixTuple;
use crate::heisenberg;
use crate::linalg::{self, CMat};
use crate::qmodule::{BallKind, ModuleDescription, ModuleKind};

fn require_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("representation dimension must be at least 1".into()));
    }
    Ok(())
}

/// Random point of the level-`n` feasible set of `q`.
pub fn sample_feasible<R: Rng + ?Sized>(q: &ModuleDescription, n: usize, rng: &mut R) -> Result<MatrixTuple> {
    require_dim(n)?;
    let nv = q.sig.nvars();
    let mats: Vec<CMat> = match &q.kind {
        ModuleKind::Sos => (0..nv)
            .map(|i| {
                if q.sig.is_hermitian_var(i) {
                    linalg::gaussian_hermitian(n, rng)
                } else {
                    linalg::gaussian_matrix(n, n, rng)
                }
            })
            .collect(),
        ModuleKind::FreeGroup(_) | ModuleKind::Toeplitz => (0..nv).map(|_| linalg::haar_unitary(n, rng)).collect(),
        ModuleKind::Heisenberg => return sample_heisenberg(n, rng),
        ModuleKind::Isometry(k) => {
            let stack = linalg::haar_isometry(k * n, n, rng);
            unstack(&stack, *k, n)
        }
        ModuleKind::Ball(kind) => {
            let raw: Vec<CMat> = (0..nv)
                .map(|i| {
                    if q.sig.is_hermitian_var(i) {
                        linalg::gaussian_hermitian(n, rng)
                    } else {
                        linalg::gaussian_matrix(n, n, rng)
                    }
                })
                .collect();
            let x = MatrixTuple::new(raw)?;
            // A random radius keeps interior points in the mix.
            let r: f64 = rng.random::<f64>().sqrt();
            let projected = project_ball(&x, *kind)?;
            return MatrixTuple::new(projected.into_mats().into_iter().map(|m| m * Complex64::new(r, 0.0)).collect());
        }
        ModuleKind::Pencil(mats) => {
            let dir: Vec<CMat> = (0..nv).map(|_| linalg::gaussian_hermitian(n, rng)).collect();
            let x = MatrixTuple::new(dir)?;
            let lam = pencil_min_shift(mats, &x);
            let tmax = if lam < 0.0 { 1.0 / -lam } else { 1.0 };
            let t = tmax * rng.random::<f64>();
            return MatrixTuple::new(x.into_mats().into_iter().map(|m| m * Complex64::new(t, 0.0)).collect());
        }
        ModuleKind::Custom => {
            return Err(Error::InvalidInput(format!("module `{}` has no feasible-point sampler", q.name)))
        }
    };
    MatrixTuple::new(mats)
}

/// Direct sum of Heisenberg irreducibles filling dimension `n`, conjugated by
/// a Haar unitary.
fn sample_heisenberg<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MatrixTuple> {
    let mut x: Option<MatrixTuple> = None;
    let mut filled = 0;
    while filled < n {
        let q = rng.random_range(1..=(n - filled) as i64);
        let p = loop {
            let p = rng.random_range(0..q);
            if heisenberg::gcd(p, q) == 1 {
                break p;
            }
        };
        let k1 = rng.random::<f64>() * std::f64::consts::TAU;
        let k2 = rng.random::<f64>() * std::f64::consts::TAU;
        let rep = heisenberg::irrep(p, q, k1, k2)?;
        x = Some(match x {
            None => rep,
            Some(prev) => prev.direct_sum(&rep)?,
        });
        filled += q as usize;
    }
    let x = x.expect("n >= 1");
    let u = linalg::haar_unitary(n, rng);
    MatrixTuple::new(x.into_mats().into_iter().map(|m| u.adjoint() * m * &u).collect())
}

/// `[X_1; ...; X_k]`.
fn stack(mats: &[CMat]) -> CMat {
    let n = mats[0].nrows();
    let mut s = CMat::zeros(mats.len() * n, n);
    for (i, m) in mats.iter().enumerate() {
        s.view_mut((i * n, 0), (n, n)).copy_from(m);
    }
    s
}

fn unstack(s: &CMat, k: usize, n: usize) -> Vec<CMat> {
    (0..k).map(|i| s.view((i * n, 0), (n, n)).into_owned()).collect()
}

fn scale_tuple(mats: Vec<CMat>, s: f64) -> Vec<CMat> {
    mats.into_iter().map(|m| m * Complex64::new(s, 0.0)).collect()
}

fn project_ball(x: &MatrixTuple, kind: BallKind) -> Result<MatrixTuple> {
    let mats = x.mats().to_vec();
    let out = match kind {
        BallKind::RowBall { n, hermitian: false } => {
            let s = stack(&mats);
            unstack(&linalg::clip_singular_values(&s, 1.0), n, x.dim())
        }
        BallKind::RowBall { hermitian: true, .. } => {
            let norm = linalg::spectral_norm(&stack(&mats));
            if norm > 1.0 {
                scale_tuple(mats, 1.0 / norm)
            } else {
                mats
            }
        }
        BallKind::ColumnContractions { hermitian: false, .. } => {
            mats.iter().map(|m| linalg::clip_singular_values(m, 1.0)).collect()
        }
        BallKind::ColumnContractions { hermitian: true, .. } => mats
            .iter()
            .map(|m| {
                let (vals, vecs) = linalg::herm_eig(m);
                let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|v| Complex64::new(v.clamp(-1.0, 1.0), 0.0)),
                ));
                &vecs * d * vecs.adjoint()
            })
            .collect(),
    };
    MatrixTuple::new(out)
}

/// Smallest eigenvalue of `Σ A_i ⊗ X_i`, the linear part of a monic pencil.
fn pencil_min_shift(mats: &[CMat], x: &MatrixTuple) -> f64 {
    let mut m = CMat::zeros(mats[0].nrows() * x.dim(), mats[0].nrows() * x.dim());
    for (a, xi) in mats.iter().zip(x.mats()) {
        m += linalg::kron(a, &linalg::hermitian_part(xi));
    }
    linalg::min_eigenvalue(&m)
}

/// Retraction onto the level-`n` feasible set. Unitary constraints use the
/// polar factor, balls clip singular values, isometry tuples orthonormalize
/// the stacked columns and pencils are scaled back along the ray to 0.
/// Families without a retraction are returned unchanged.
pub fn project_feasible(x: &MatrixTuple, q: &ModuleDescription) -> Result<MatrixTuple> {
    x.validate(&q.sig).or_else(|e| match e {
        Error::NotHermitian(_) => Ok(()),
        other => Err(other),
    })?;
    let herm: Vec<CMat> = x
        .mats()
        .iter()
        .enumerate()
        .map(|(i, m)| if q.sig.is_hermitian_var(i) { linalg::hermitian_part(m) } else { m.clone() })
        .collect();
    let x = MatrixTuple::new(herm)?;
    match &q.kind {
        ModuleKind::FreeGroup(_) | ModuleKind::Toeplitz => {
            MatrixTuple::new(x.mats().iter().map(linalg::polar_factor).collect())
        }
        ModuleKind::Isometry(k) => {
            let s = linalg::polar_factor(&stack(x.mats()));
            MatrixTuple::new(unstack(&s, *k, x.dim()))
        }
        ModuleKind::Ball(kind) => project_ball(&x, *kind),
        ModuleKind::Pencil(mats) => {
            let lam = pencil_min_shift(mats, &x);
            if lam >= -1.0 {
                return Ok(x);
            }
            // Largest s with I + s·M ⪰ 0, pulled in by one ulp-scale margin.
            let s = (1.0 / -lam) * (1.0 - 1e-14);
            MatrixTuple::new(scale_tuple(x.into_mats(), s))
        }
        ModuleKind::Sos | ModuleKind::Heisenberg | ModuleKind::Custom => Ok(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodule::{ball_module, ball_pencil_module, cube_module, group_module, isometry_module, GroupPreset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn presets() -> Vec<ModuleDescription> {
        vec![
            group_module(GroupPreset::FreeGroup(2)).unwrap(),
            group_module(GroupPreset::Heisenberg).unwrap(),
            group_module(GroupPreset::Toeplitz).unwrap(),
            ball_module(BallKind::RowBall { n: 2, hermitian: false }).unwrap(),
            ball_module(BallKind::RowBall { n: 2, hermitian: true }).unwrap(),
            ball_module(BallKind::ColumnContractions { n: 2, hermitian: false }).unwrap(),
            ball_module(BallKind::ColumnContractions { n: 2, hermitian: true }).unwrap(),
            isometry_module(3).unwrap(),
            cube_module(2).unwrap(),
            ball_pencil_module(2).unwrap(),
        ]
    }

    #[test]
    fn samples_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in presets() {
            for n in 1..=4 {
                let x = sample_feasible(&q, n, &mut rng).unwrap();
                x.validate(&q.sig).unwrap();
                assert!(q.violation(&x).unwrap() < 1e-10, "{} at n = {n}", q.name);
            }
        }
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for q in presets() {
            if q.kind == ModuleKind::Heisenberg {
                continue;
            }
            let raw: Vec<CMat> = (0..q.sig.nvars()).map(|_| linalg::gaussian_matrix(3, 3, &mut rng) * Complex64::new(2.0, 0.0)).collect();
            let x = project_feasible(&MatrixTuple::new(raw).unwrap(), &q).unwrap();
            assert!(q.violation(&x).unwrap() < 1e-10, "{}", q.name);
            let y = project_feasible(&x, &q).unwrap();
            for (a, b) in x.mats().iter().zip(y.mats()) {
                assert!(linalg::max_abs_diff(a, b) < 1e-12, "{} {:e}", q.name, linalg::max_abs_diff(a, b));
            }
        }
    }

    #[test]
    fn polar_factor_of_random_matrix_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = linalg::polar_factor(&linalg::gaussian_matrix(5, 5, &mut rng));
        assert!(linalg::identity_residual(&(u.adjoint() * &u)) < 1e-12);
    }
}
