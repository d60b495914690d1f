//! C ABI over `qmcert`.
//!
//! Objects cross the boundary as opaque handles (`QmModule`, `QmPoly`) that
//! the caller releases with the matching `*_free` function. Strings returned
//! by this library are owned by the caller and must be released with
//! `qm_string_free`. Every fallible call returns a `QmStatus`; on failure the
//! message is kept per thread and can be fetched with `qm_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qmcert::certify::{self, CertifyOptions, NormMode};
use qmcert::cli::{execute_problem, ProblemFile};
use qmcert::freealg::{parse_poly, FreePoly};
use qmcert::linalg::CMat;
use qmcert::qmodule::{preset_by_name, ModuleDescription, ModuleFile, ReductionMode};
use qmcert::repsearch::{self, SearchConfig};
use qmcert::sdp::SolverOptions;
use qmcert::{heisenberg, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Parse = 4,
    DimensionMismatch = 5,
    NotArchimedean = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmNormMode {
    Auto = 0,
    Square = 1,
    Hermitian = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmReduction {
    Exact = 0,
    IdealPairs = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QmSolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub reduction: QmReduction,
    pub allow_non_archimedean: bool,
}

/// A quadratic module.
pub struct QmModule(ModuleDescription);

/// A polynomial in the variables of the module it was parsed against.
pub struct QmPoly(FreePoly);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QmStatus {
    match e {
        Error::Parse { .. } => QmStatus::Parse,
        Error::DimensionMismatch(_) | Error::SignatureMismatch(_) => QmStatus::DimensionMismatch,
        Error::NotArchimedean(_) => QmStatus::NotArchimedean,
        Error::Numerical(_) => QmStatus::Numerical,
        _ => QmStatus::InvalidInput,
    }
}

struct Fail(QmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, records any failure and converts panics into `Panic`.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QmStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            QmStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(QmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

unsafe fn module_ref<'a>(m: *const QmModule) -> Result<&'a ModuleDescription, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("module"))
}

unsafe fn poly_ref<'a>(p: *const QmPoly) -> Result<&'a FreePoly, Fail> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("poly"))
}

fn certify_options(o: Option<&QmSolverOptions>) -> CertifyOptions {
    match o {
        None => CertifyOptions::default(),
        Some(o) => CertifyOptions {
            sdp: SolverOptions { tol: o.tol, max_iter: o.max_iter, ..SolverOptions::default() },
            mode: match o.reduction {
                QmReduction::Exact => ReductionMode::Exact,
                QmReduction::IdealPairs => ReductionMode::IdealPairs,
            },
            allow_non_archimedean: o.allow_non_archimedean,
        },
    }
}

/// Message of the last failure on this thread, or null. Free with
/// `qm_string_free`.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(c) => c.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must come from this library and must not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn qm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn qm_solver_options_default() -> QmSolverOptions {
    let d = SolverOptions::default();
    QmSolverOptions { tol: d.tol, max_iter: d.max_iter, reduction: QmReduction::Exact, allow_non_archimedean: false }
}

/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_module_preset(name: *const c_char, out: *mut *mut QmModule) -> QmStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let m = preset_by_name(name)?;
        write_out(out, Box::into_raw(Box::new(QmModule(m))), "out")
    })
}

/// Builds a module from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_module_from_json(json: *const c_char, out: *mut *mut QmModule) -> QmStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let m = ModuleFile::from_json(text)?.into_description()?;
        write_out(out, Box::into_raw(Box::new(QmModule(m))), "out")
    })
}

/// # Safety
/// `m` must be null or a handle from this library that was not freed.
#[no_mangle]
pub unsafe extern "C" fn qm_module_free(m: *mut QmModule) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of variables of the module.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qm_module_nvars(m: *const QmModule) -> usize {
    m.as_ref().map_or(0, |m| m.0.sig.nvars())
}

/// # Safety
/// `m` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_poly_parse(m: *const QmModule, text: *const c_char, out: *mut *mut QmPoly) -> QmStatus {
    guard(|| {
        let q = module_ref(m)?;
        let p = parse_poly(&q.sig, read_str(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(QmPoly(p))), "out")
    })
}

/// Printed form of `p`, or null for a null handle. Free with
/// `qm_string_free`.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qm_poly_to_string(p: *const QmPoly) -> *mut c_char {
    match p.as_ref() {
        Some(p) => into_c_string(p.0.to_string()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `p` must be null or a handle from this library that was not freed.
#[no_mangle]
pub unsafe extern "C" fn qm_poly_free(p: *mut QmPoly) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Upper bound on the module norm of `a` from the degree-`d` truncation.
/// `opts` may be null for defaults.
///
/// # Safety
/// Handles must be live; `opts` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_norm_upper(
    m: *const QmModule,
    a: *const QmPoly,
    d: usize,
    mode: QmNormMode,
    opts: *const QmSolverOptions,
    out: *mut f64,
) -> QmStatus {
    guard(|| {
        let (q, a) = (module_ref(m)?, poly_ref(a)?);
        let mode = match mode {
            QmNormMode::Auto => NormMode::Auto,
            QmNormMode::Square => NormMode::Square,
            QmNormMode::Hermitian => NormMode::Hermitian,
        };
        let r = certify::norm_upper(a, q, d, mode, &certify_options(opts.as_ref()))?;
        write_out(out, r.value, "out")
    })
}

/// Lower bound on the module norm of `a` over `n`-dimensional points.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_search_lower(
    m: *const QmModule,
    a: *const QmPoly,
    n: usize,
    restarts: usize,
    seed: u64,
    out: *mut f64,
) -> QmStatus {
    guard(|| {
        let (q, a) = (module_ref(m)?, poly_ref(a)?);
        let cfg = SearchConfig { n, restarts, seed, ..SearchConfig::default() };
        let r = repsearch::search_lower(a, q, &cfg)?;
        write_out(out, r.value, "out")
    })
}

/// Searches for a degree-`d` certificate of `a + eps`. `found` receives the
/// verdict; `json`, when not null, receives the full result record.
///
/// # Safety
/// Handles must be live; `opts` null or valid; `found` writable; `json`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn qm_member(
    m: *const QmModule,
    a: *const QmPoly,
    d: usize,
    eps: f64,
    opts: *const QmSolverOptions,
    found: *mut bool,
    json: *mut *mut c_char,
) -> QmStatus {
    guard(|| {
        let (q, a) = (module_ref(m)?, poly_ref(a)?);
        let out = certify::member_eps(a, q, d, eps, &certify_options(opts.as_ref()))?;
        write_out(found, out.found(), "found")?;
        if !json.is_null() {
            let rec = certify::Record::member(&a.to_string(), d, eps, &out, &q.sig, None);
            json.write(into_c_string(serde_json::to_string(&rec).expect("record serializes")));
        }
        Ok(())
    })
}

/// Norm of the Harper operator at `θ = 2πp/q`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_harper_norm(p: i64, q: i64, grid: usize, out: *mut f64) -> QmStatus {
    guard(|| {
        let v = heisenberg::harper_norm(p, q, grid)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `out` must be writable; the string is freed with `qm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qm_butterfly_csv(q_max: i64, grid: usize, out: *mut *mut c_char) -> QmStatus {
    guard(|| {
        let recs = heisenberg::butterfly(q_max, grid)?;
        write_out(out, into_c_string(heisenberg::butterfly_csv(&recs)), "out")
    })
}

/// Unitary dilation of the `s × s` contraction given row-major as separate
/// real and imaginary arrays. The `2s × 2s` result is written the same way.
///
/// # Safety
/// `t_re`, `t_im` must hold `s*s` values; `u_re`, `u_im` room for `4*s*s`.
#[no_mangle]
pub unsafe extern "C" fn qm_unitary_dilate(
    t_re: *const f64,
    t_im: *const f64,
    s: usize,
    u_re: *mut f64,
    u_im: *mut f64,
) -> QmStatus {
    guard(|| {
        if t_re.is_null() || t_im.is_null() || u_re.is_null() || u_im.is_null() {
            return Err(null("matrix buffer"));
        }
        let re = std::slice::from_raw_parts(t_re, s * s);
        let im = std::slice::from_raw_parts(t_im, s * s);
        let t = CMat::from_fn(s, s, |i, j| Complex64::new(re[i * s + j], im[i * s + j]));
        let u = repsearch::unitary_dilate(&t)?;
        let n = 2 * s;
        let ore = std::slice::from_raw_parts_mut(u_re, n * n);
        let oim = std::slice::from_raw_parts_mut(u_im, n * n);
        for i in 0..n {
            for j in 0..n {
                ore[i * n + j] = u[(i, j)].re;
                oim[i * n + j] = u[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Executes a problem file (JSON text) and returns what the command line
/// would print for it.
///
/// # Safety
/// `problem` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_run_problem(problem: *const c_char, out: *mut *mut c_char) -> QmStatus {
    guard(|| {
        let p = ProblemFile::from_json(read_str(problem, "problem")?)?;
        let text = execute_problem(p)?;
        write_out(out, into_c_string(text), "out")
    })
}
