//! C interface to `sicseq`.
//!
//! Objects are opaque handles created by `sicseq_*` constructors and released
//! with the matching `*_free`. Every fallible call returns a [`SicseqStatus`];
//! on failure [`sicseq_last_error`] describes the problem on the calling thread.
//! Matrices cross the boundary row-major as separate real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sicseq::catalog::{catalog_entry, QutritGamma};
use sicseq::hwsic::{decompose_hw, hw_sic_from_fiducial, FiducialKet};
use sicseq::linalg::{Ket, Operator, C64};
use sicseq::povm::{born_probabilities, compose_sequential, is_ic, is_sic, Pom, SequentialScheme};
use sicseq::tomography::reconstruct;
use sicseq::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SicseqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NotInformationallyComplete = 4,
    Numerical = 5,
    Panic = 6,
}

/// Opaque measurement handle.
pub struct SicseqPom(Pom);

/// Opaque two-step scheme handle.
pub struct SicseqScheme(SequentialScheme);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn gamma_for(dim: usize, gamma: f64) -> Result<QutritGamma, Error> {
    QutritGamma::new(if dim == 3 { gamma } else { 0.0 })
}

fn status_for(e: &Error) -> SicseqStatus {
    match e {
        Error::Json(_) | Error::Parse(_) | Error::Csv(_) | Error::MalformedLabels(_) => SicseqStatus::Parse,
        Error::RankDeficient { .. } => SicseqStatus::NotInformationallyComplete,
        Error::ImpossibleOutcome(_) | Error::NegativeProbability(_) | Error::InfeasibleCascade(_) => {
            SicseqStatus::Numerical
        }
        _ => SicseqStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SicseqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SicseqStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            SicseqStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_for(&e)
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(&msg);
            SicseqStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            SicseqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Lib(Error::Parse(format!("invalid UTF-8: {e}"))))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = CString::new(s)
        .map_err(|_| Failure::Arg("string contains NUL".into()))?
        .into_raw();
    Ok(())
}

unsafe fn read_operator(d: usize, re: *const f64, im: *const f64) -> Result<Operator, Failure> {
    let re = slice(re, d * d, "re")?;
    let im = slice(im, d * d, "im")?;
    Ok(Operator::new(d, re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect())?)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sicseq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `sicseq_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sicseq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Built-in SIC for `dim` in {2, 3, 4, 8}; `gamma` selects the qutrit
/// family member and is ignored for other dimensions.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sicseq_catalog_pom(dim: usize, gamma: f64, out: *mut *mut SicseqPom) -> SicseqStatus {
    guard(|| {
        let entry = catalog_entry(dim, gamma_for(dim, gamma)?)?;
        write_out(out, SicseqPom(entry.pom))
    })
}

/// Built-in two-step scheme for `dim` in {2, 3, 4, 8}.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sicseq_catalog_scheme(dim: usize, gamma: f64, out: *mut *mut SicseqScheme) -> SicseqStatus {
    guard(|| {
        let entry = catalog_entry(dim, gamma_for(dim, gamma)?)?;
        write_out(out, SicseqScheme(entry.scheme))
    })
}

unsafe fn read_fiducial(dim: usize, re: *const f64, im: *const f64) -> Result<FiducialKet, Failure> {
    let re = slice(re, dim, "re")?;
    let im = slice(im, dim, "im")?;
    let ket = Ket::new(re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect())?;
    Ok(FiducialKet::new(ket, 1e-9)?)
}

/// Heisenberg-Weyl orbit of the normalized fiducial with `dim` amplitudes.
///
/// # Safety
/// `re` and `im` must point to `dim` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_hw_pom(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SicseqPom,
) -> SicseqStatus {
    guard(|| {
        let fid = read_fiducial(dim, re, im)?;
        write_out(out, SicseqPom(hw_sic_from_fiducial(&fid)))
    })
}

/// Diagonal-Kraus plus Fourier-basis scheme realizing the same orbit.
///
/// # Safety
/// `re` and `im` must point to `dim` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_hw_scheme(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SicseqScheme,
) -> SicseqStatus {
    guard(|| {
        let fid = read_fiducial(dim, re, im)?;
        write_out(out, SicseqScheme(decompose_hw(&fid)))
    })
}

/// # Safety
/// `scheme` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_scheme_compose(scheme: *const SicseqScheme, out: *mut *mut SicseqPom) -> SicseqStatus {
    guard(|| {
        let s = deref(scheme, "scheme")?;
        write_out(out, SicseqPom(compose_sequential(&s.0)))
    })
}

/// # Safety
/// `pom` must be a live handle; `dim` and `len` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_shape(pom: *const SicseqPom, dim: *mut usize, len: *mut usize) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        if let Some(d) = dim.as_mut() {
            *d = p.0.dim();
        }
        if let Some(l) = len.as_mut() {
            *l = p.0.len();
        }
        Ok(())
    })
}

/// # Safety
/// `pom` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_is_sic(pom: *const SicseqPom, tol: f64, out: *mut bool) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = is_sic(&p.0, tol).is_sic;
        Ok(())
    })
}

/// # Safety
/// `pom` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_is_ic(pom: *const SicseqPom, tol: f64, out: *mut bool) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = is_ic(&p.0, tol);
        Ok(())
    })
}

/// Outcome probabilities for the `dim x dim` density matrix `rho`.
///
/// # Safety
/// `rho_re`/`rho_im` must hold `dim * dim` values, `probs` room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sicseq_born(
    pom: *const SicseqPom,
    rho_re: *const f64,
    rho_im: *const f64,
    probs: *mut f64,
    len: usize,
) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        if len != p.0.len() {
            return Err(Failure::Arg(format!("probability buffer holds {len}, need {}", p.0.len())));
        }
        let rho = read_operator(p.0.dim(), rho_re, rho_im)?;
        let values = born_probabilities(&p.0, &rho, 1e-9)?;
        slice_mut(probs, len, "probs")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Linear-inversion estimate written to `rho_re`/`rho_im` (`dim * dim` each).
///
/// # Safety
/// `probs` must hold `len` values and the outputs `dim * dim` values.
#[no_mangle]
pub unsafe extern "C" fn sicseq_reconstruct(
    pom: *const SicseqPom,
    probs: *const f64,
    len: usize,
    project_psd: bool,
    rho_re: *mut f64,
    rho_im: *mut f64,
) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        let probs = slice(probs, len, "probs")?;
        let report = reconstruct(probs, &p.0, project_psd, None)?;
        let n = p.0.dim() * p.0.dim();
        let re = slice_mut(rho_re, n, "rho_re")?;
        let im = slice_mut(rho_im, n, "rho_im")?;
        for (i, z) in report.reconstructed.entries().iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_from_json(json: *const c_char, out: *mut *mut SicseqPom) -> SicseqStatus {
    guard(|| {
        let pom: Pom = serde_json::from_str(read_str(json)?).map_err(Error::from)?;
        write_out(out, SicseqPom(pom))
    })
}

/// JSON text to be released with [`sicseq_string_free`].
///
/// # Safety
/// `pom` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_to_json(pom: *const SicseqPom, out: *mut *mut c_char) -> SicseqStatus {
    guard(|| {
        let p = deref(pom, "pom")?;
        write_string(out, serde_json::to_string(&p.0).map_err(Error::from)?)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_scheme_from_json(json: *const c_char, out: *mut *mut SicseqScheme) -> SicseqStatus {
    guard(|| {
        let s: SequentialScheme = serde_json::from_str(read_str(json)?).map_err(Error::from)?;
        write_out(out, SicseqScheme(s))
    })
}

/// # Safety
/// `scheme` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicseq_scheme_to_json(scheme: *const SicseqScheme, out: *mut *mut c_char) -> SicseqStatus {
    guard(|| {
        let s = deref(scheme, "scheme")?;
        write_string(out, serde_json::to_string(&s.0).map_err(Error::from)?)
    })
}

/// # Safety
/// `pom` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sicseq_pom_free(pom: *mut SicseqPom) {
    if !pom.is_null() {
        drop(Box::from_raw(pom));
    }
}

/// # Safety
/// `scheme` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sicseq_scheme_free(scheme: *mut SicseqScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// # Safety
/// `s` must come from a `*_to_json` call and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sicseq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
