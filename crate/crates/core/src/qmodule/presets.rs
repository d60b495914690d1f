use std::sync::Arc;

use crate::error::{Error, Result};
use crate::freealg::{FreePoly, Signature};
use crate::heisenberg;
use crate::linalg::{self, CMat};

use super::{Generator, ModuleDescription, ModuleKind, PolyMatrix, Reduction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallKind {
    /// `1 - Σ z_i* z_i`: row contractions.
    RowBall { n: usize, hermitian: bool },
    /// `1 - z_i* z_i` for each `i`: tuples of contractions.
    ColumnContractions { n: usize, hermitian: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupPreset {
    FreeGroup(usize),
    Heisenberg,
    Toeplitz,
}

/// Sums of squares only.
pub fn sos_module(sig: Arc<Signature>) -> ModuleDescription {
    let mut m = ModuleDescription::new("sos", sig, Vec::new(), Reduction::None, None).expect("sos");
    m.kind = ModuleKind::Sos;
    m
}

/// Module of the linear pencil `I_s + Σ M_i z_i` over hermitian variables.
/// The archimedean bound is unknown unless set by the caller.
pub fn pencil_module(mats: &[CMat]) -> Result<ModuleDescription> {
    if mats.is_empty() {
        return Err(Error::InvalidInput("pencil needs at least one coefficient".into()));
    }
    for (i, m) in mats.iter().enumerate() {
        if m.nrows() != m.ncols() || m.nrows() != mats[0].nrows() {
            return Err(Error::DimensionMismatch(format!("pencil coefficient {i} has wrong shape")));
        }
        if linalg::hermiticity_error(m) > super::GENERATOR_HERM_TOL {
            return Err(Error::NotHermitian(format!("pencil coefficient {i}")));
        }
    }
    let sig = Signature::hermitian(mats.len());
    let pencil = PolyMatrix::linear_pencil(&sig, mats)?;
    let mut m =
        ModuleDescription::new("pencil", sig, vec![Generator::Pencil(pencil)], Reduction::None, None)?;
    m.kind = ModuleKind::Pencil(mats.to_vec());
    m.rfd = true;
    Ok(m)
}

/// Free cube `diag(1 - z_1, 1 + z_1, ..., 1 - z_n, 1 + z_n)`.
pub fn cube_module(n: usize) -> Result<ModuleDescription> {
    let s = 2 * n;
    let mats: Vec<CMat> = (0..n)
        .map(|i| {
            let mut m = CMat::zeros(s, s);
            m[(2 * i, 2 * i)] = -linalg::ONE;
            m[(2 * i + 1, 2 * i + 1)] = linalg::ONE;
            m
        })
        .collect();
    let mut m = pencil_module(&mats)?.with_archimedean_bound(n as f64);
    m.name = format!("cube:{n}");
    Ok(m)
}

/// Arrow-head pencil of size `n + 1` whose level-1 set is the unit ball.
pub fn ball_pencil_module(n: usize) -> Result<ModuleDescription> {
    let s = n + 1;
    let mats: Vec<CMat> = (0..n)
        .map(|i| {
            let mut m = CMat::zeros(s, s);
            m[(0, i + 1)] = linalg::ONE;
            m[(i + 1, 0)] = linalg::ONE;
            m
        })
        .collect();
    let mut m = pencil_module(&mats)?.with_archimedean_bound(1.0);
    m.name = format!("pencil_ball:{n}");
    Ok(m)
}

pub fn ball_module(kind: BallKind) -> Result<ModuleDescription> {
    let (n, hermitian, row) = match kind {
        BallKind::RowBall { n, hermitian } => (n, hermitian, true),
        BallKind::ColumnContractions { n, hermitian } => (n, hermitian, false),
    };
    if n == 0 {
        return Err(Error::InvalidInput("ball needs at least one variable".into()));
    }
    let sig = if hermitian { Signature::hermitian(n) } else { Signature::general(n) };
    let square = |i: usize| &FreePoly::var_star(&sig, i) * &FreePoly::var(&sig, i);
    let one = FreePoly::one(&sig);
    let generators = if row {
        let mut g = one.clone();
        for i in 0..n {
            g = &g - &square(i);
        }
        vec![Generator::Scalar(g)]
    } else {
        (0..n).map(|i| Generator::Scalar(&one - &square(i))).collect()
    };
    let (name, bound) = match (row, hermitian) {
        (true, false) => (format!("row_ball:{n}"), 1.0),
        (true, true) => (format!("hrow_ball:{n}"), 1.0),
        (false, false) => (format!("column_ball:{n}"), n as f64),
        (false, true) => (format!("hcolumn_ball:{n}"), n as f64),
    };
    let mut m = ModuleDescription::new(name, sig, generators, Reduction::None, Some(bound))?;
    m.kind = ModuleKind::Ball(kind);
    m.rfd = true;
    Ok(m)
}

/// Sums of squares modulo the row-isometry relation `Σ z_i* z_i = 1`.
pub fn isometry_module(n: usize) -> Result<ModuleDescription> {
    if n == 0 {
        return Err(Error::InvalidInput("isometry module needs n >= 1".into()));
    }
    let sig = Signature::general(n);
    let mut r = FreePoly::real(&sig, -1.0);
    for i in 0..n {
        r = &r + &(&FreePoly::var_star(&sig, i) * &FreePoly::var(&sig, i));
    }
    let mut m = ModuleDescription::new(
        format!("isometry:{n}"),
        sig,
        vec![Generator::Ideal(r)],
        Reduction::None,
        Some(1.0),
    )?;
    m.kind = ModuleKind::Isometry(n);
    m.rfd = true;
    Ok(m)
}

fn unitary_relations(sig: &Arc<Signature>, vars: usize) -> Vec<Generator> {
    let one = FreePoly::one(sig);
    let mut out = Vec::new();
    for i in 0..vars {
        let z = FreePoly::var(sig, i);
        let zs = FreePoly::var_star(sig, i);
        out.push(Generator::Ideal(&(&zs * &z) - &one));
        out.push(Generator::Ideal(&(&z * &zs) - &one));
    }
    out
}

pub fn group_module(preset: GroupPreset) -> Result<ModuleDescription> {
    let mut m = match preset {
        GroupPreset::FreeGroup(k) => {
            if k == 0 {
                return Err(Error::InvalidInput("free group needs at least one generator".into()));
            }
            let sig = Signature::general(k);
            let rel = unitary_relations(&sig, k);
            let mut m = ModuleDescription::new(
                format!("free_group:{k}"),
                sig,
                rel,
                Reduction::FreeGroup,
                Some(k as f64),
            )?;
            m.kind = ModuleKind::FreeGroup(k);
            m.rfd = true;
            m
        }
        GroupPreset::Heisenberg => {
            let sig = heisenberg::signature();
            let mut rel = unitary_relations(&sig, 3);
            let v = |i| FreePoly::var(&sig, i);
            let (a, b, c) = (v(0), v(1), v(2));
            rel.push(Generator::Ideal(&(&a * &b) - &(&(&c * &b) * &a)));
            rel.push(Generator::Ideal(&(&c * &a) - &(&a * &c)));
            rel.push(Generator::Ideal(&(&c * &b) - &(&b * &c)));
            let mut m =
                ModuleDescription::new("heisenberg", sig, rel, Reduction::Heisenberg, Some(3.0))?;
            m.kind = ModuleKind::Heisenberg;
            m.rfd = true;
            m
        }
        GroupPreset::Toeplitz => {
            let sig = Signature::general(1);
            let z = FreePoly::var(&sig, 0);
            let zs = FreePoly::var_star(&sig, 0);
            let rel = vec![Generator::Ideal(&(&z * &zs) - &FreePoly::one(&sig))];
            let mut m = ModuleDescription::new("toeplitz", sig, rel, Reduction::Toeplitz, Some(1.0))?;
            m.kind = ModuleKind::Toeplitz;
            m
        }
    };
    m.generators.shrink_to_fit();
    Ok(m)
}

/// Names accepted by [`preset_by_name`]; `:n` takes a positive integer.
pub fn preset_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("sos:n", "sums of squares, n hermitian variables"),
        ("sos_general:n", "sums of squares, n non-hermitian variables"),
        ("free_group:n", "group algebra of the free group on n generators"),
        ("heisenberg", "group algebra of the discrete Heisenberg group (letters a, b, c)"),
        ("toeplitz", "Toeplitz algebra C<z, z*>/(zz* - 1)"),
        ("row_ball:n", "1 - Σ z_i* z_i over n non-hermitian variables"),
        ("column_ball:n", "1 - z_i* z_i for each of n non-hermitian variables"),
        ("hrow_ball:n", "1 - Σ z_i² over n hermitian variables"),
        ("hcolumn_ball:n", "1 - z_i² for each of n hermitian variables"),
        ("isometry:n", "Σ z_i* z_i = 1 (row isometries)"),
        ("cube:n", "free cube pencil diag(1 ∓ z_i)"),
        ("pencil_ball:n", "arrow-head pencil with the unit ball at level 1"),
    ]
}

pub fn preset_by_name(spec: &str) -> Result<ModuleDescription> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let count = || -> Result<usize> {
        let a = arg.ok_or_else(|| Error::UnknownPreset(format!("{spec} (missing `:n`)")))?;
        match a.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::UnknownPreset(format!("{spec} (bad count `{a}`)"))),
        }
    };
    let no_arg = |m: ModuleDescription| -> Result<ModuleDescription> {
        if arg.is_some() {
            Err(Error::UnknownPreset(format!("{spec} (takes no argument)")))
        } else {
            Ok(m)
        }
    };
    match name {
        "sos" => Ok(sos_module(Signature::hermitian(count()?))),
        "sos_general" => Ok(sos_module(Signature::general(count()?))),
        "free_group" => group_module(GroupPreset::FreeGroup(count()?)),
        "heisenberg" => no_arg(group_module(GroupPreset::Heisenberg)?),
        "toeplitz" => no_arg(group_module(GroupPreset::Toeplitz)?),
        "row_ball" => ball_module(BallKind::RowBall { n: count()?, hermitian: false }),
        "column_ball" => ball_module(BallKind::ColumnContractions { n: count()?, hermitian: false }),
        "hrow_ball" => ball_module(BallKind::RowBall { n: count()?, hermitian: true }),
        "hcolumn_ball" => ball_module(BallKind::ColumnContractions { n: count()?, hermitian: true }),
        "isometry" => isometry_module(count()?),
        "cube" => cube_module(count()?),
        "pencil_ball" => ball_pencil_module(count()?),
        _ => Err(Error::UnknownPreset(spec.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::{MatrixTuple, Word};
    use num_complex::Complex64;

    #[test]
    fn interval_pencil() {
        let m = pencil_module(&[CMat::from_element(1, 1, -linalg::ONE)]).unwrap();
        let Generator::Pencil(l) = &m.generators[0] else { panic!() };
        assert_eq!(l.size(), 1);
        let p = l.get(0, 0);
        assert_eq!(p.coeff(&Word::unit()), linalg::ONE);
        assert_eq!(p.coeff(&Word(vec![0])), -linalg::ONE);
        assert!(!m.is_archimedean());
    }

    #[test]
    fn cube_pencil_is_diagonal() {
        let m = cube_module(2).unwrap();
        let Generator::Pencil(l) = &m.generators[0] else { panic!() };
        assert_eq!(l.size(), 4);
        let x = MatrixTuple::new(vec![
            CMat::from_element(1, 1, Complex64::new(0.5, 0.0)),
            CMat::from_element(1, 1, Complex64::new(-0.25, 0.0)),
        ])
        .unwrap();
        let v = l.evaluate(&x).unwrap();
        let expect = [0.5, 1.5, 1.25, 0.75];
        for (k, e) in expect.iter().enumerate() {
            assert!((v[(k, k)].re - e).abs() < 1e-15);
        }
        assert!(m.violation(&x).unwrap() == 0.0);
    }

    #[test]
    fn arrowhead_pencil_matches_ball_on_scalars() {
        // Schur complement: L(x) ⪰ 0 iff 1 - |x|² ≥ 0.
        let m = ball_pencil_module(2).unwrap();
        let Generator::Pencil(l) = &m.generators[0] else { panic!() };
        for &(x1, x2) in &[(0.3, 0.4), (0.6, 0.8), (0.7, 0.8), (-0.1, 0.99), (0.0, 0.0)] {
            let x = MatrixTuple::new(vec![
                CMat::from_element(1, 1, Complex64::new(x1, 0.0)),
                CMat::from_element(1, 1, Complex64::new(x2, 0.0)),
            ])
            .unwrap();
            let lam = linalg::min_eigenvalue(&l.evaluate(&x).unwrap());
            let inside = 1.0 - x1 * x1 - x2 * x2;
            assert_eq!(lam >= -1e-12, inside >= -1e-12, "({x1}, {x2})");
        }
    }

    #[test]
    fn ball_generators() {
        let m = ball_module(BallKind::RowBall { n: 1, hermitian: false }).unwrap();
        let Generator::Scalar(g) = &m.generators[0] else { panic!() };
        assert_eq!(g.to_string(), "1 - z^**z");
        let m2 = ball_module(BallKind::ColumnContractions { n: 2, hermitian: false }).unwrap();
        assert_eq!(m2.generators.len(), 2);
    }

    #[test]
    fn contraction_satisfies_ball() {
        let m = ball_module(BallKind::RowBall { n: 1, hermitian: false }).unwrap();
        let t = CMat::from_row_slice(2, 2, &[
            Complex64::new(0.3, 0.1),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, -0.4),
            Complex64::new(0.5, 0.0),
        ]);
        let t = linalg::clip_singular_values(&t, 0.999);
        let x = MatrixTuple::new(vec![t]).unwrap();
        assert_eq!(m.violation(&x).unwrap(), 0.0);
    }

    #[test]
    fn heisenberg_relations_hold_in_irreps() {
        let m = group_module(GroupPreset::Heisenberg).unwrap();
        assert_eq!(m.generators.len(), 9);
        let rep = heisenberg::irrep(3, 8, 0.7, 2.1).unwrap();
        assert!(m.violation(&rep).unwrap() < 1e-13);
    }

    #[test]
    fn toeplitz_has_single_relation() {
        let m = group_module(GroupPreset::Toeplitz).unwrap();
        assert_eq!(m.generators.len(), 1);
        let Generator::Ideal(r) = &m.generators[0] else { panic!() };
        assert_eq!(r.to_string(), "-1 + z*z^*");
        assert!(!m.rfd);
    }

    #[test]
    fn preset_lookup() {
        for (name, _) in preset_names() {
            let spec = name.replace(":n", ":2");
            preset_by_name(&spec).unwrap();
        }
        assert!(matches!(preset_by_name("nope"), Err(Error::UnknownPreset(_))));
        assert!(preset_by_name("free_group").is_err());
        assert!(preset_by_name("heisenberg:2").is_err());
    }
}
