//! Dense complex matrix helpers shared by the solver front-ends and the
//! representation search.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entrywise modulus of `m - m*`.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn to_faer(m: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let evd = to_faer(&hermitian_part(m)).self_adjoint_eigen(faer::Side::Lower).expect("hermitian eigensolver converges");
    let vals = (0..n).map(|k| evd.S()[k].re).collect();
    (vals, from_faer(evd.U()))
}

pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v = to_faer(&hermitian_part(m))
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("hermitian eigensolver converges");
    v.sort_by(f64::total_cmp);
    v
}

/// Thin singular value decomposition `m = U diag(s) V*`, `s` descending.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Svd { u: CMat::zeros(m.nrows(), 0), s: Vec::new(), v: CMat::zeros(m.ncols(), 0) };
    }
    let f = to_faer(m).thin_svd().expect("svd converges");
    Svd { u: from_faer(f.U()), s: (0..k).map(|i| f.S()[i].re).collect(), v: from_faer(f.V()) }
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    herm_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    herm_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Square root of a Hermitian matrix with negative eigenvalues clipped to 0.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = herm_eig(m);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Thin real SVD `m = U diag(s) Vᵀ`, `s` descending.
pub fn real_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return (DMatrix::zeros(m.nrows(), 0), Vec::new(), DMatrix::zeros(m.ncols(), 0));
    }
    let f = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]).thin_svd().expect("svd converges");
    let conv = |x: faer::MatRef<'_, f64>| DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)]);
    (conv(f.U()), (0..k).map(|i| f.S()[i]).collect(), conv(f.V()))
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values().expect("svd converges");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Unitary (or isometric) polar factor `U V*` of `m = U S V*`.
pub fn polar_factor(m: &CMat) -> CMat {
    let f = svd(m);
    f.u * f.v.adjoint()
}

/// Clip the singular values of `m` to at most `bound`; matrices already
/// within `bound` (up to round-off) are returned unchanged.
pub fn clip_singular_values(m: &CMat, bound: f64) -> CMat {
    let f = svd(m);
    if f.s.iter().all(|&x| x <= bound * (1.0 + 1e-13)) {
        return m.clone();
    }
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        f.s.len(),
        f.s.iter().map(|&x| Complex64::new(x.min(bound), 0.0)),
    ));
    f.u * d * f.v.adjoint()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

pub fn gaussian_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitian_part(&gaussian_matrix(n, n, rng))
}

/// Haar-distributed isometry `C^cols -> C^rows` from the QR factorization of
/// a complex Gaussian matrix, with the phases of `diag(R)` moved into `Q`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    haar_isometry(n, n, rng)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max |m - I|` entrywise, used for unitarity residuals.
pub fn identity_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..m.ncols() {
            let target = if i == j { ONE } else { ZERO };
            err = err.max((m[(i, j)] - target).norm());
        }
    }
    err
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}
