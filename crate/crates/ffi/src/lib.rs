//! C ABI over `backstep`: opaque law and transform handles, status codes and
//! a per-thread last-error message.
//!
//! Coefficient arrays are two-sided, `2N+1` entries ordered `−N..=N`, split
//! into separate real and imaginary arrays. Every function returns a
//! [`BsStatus`]; on failure [`bs_last_error`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use backstep::controller::{fourier_coeffs, ControllerSpec, PiecewisePoly};
use backstep::feedback::{eval_f, synth_f, FeedbackLaw};
use backstep::simulate::ConjugateFlow;
use backstep::spectral::{sobolev_norm, FourierVector};
use backstep::transform::BacksteppingTransform;
use backstep::{Complex64, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Controllability = 3,
    Unstable = 4,
    Numerical = 5,
    Panic = 6,
}

/// Feedback law together with the controller coefficients it was built from.
pub struct BsLaw {
    law: FeedbackLaw,
    phi: FourierVector,
}

pub struct BsTransform {
    transform: BacksteppingTransform,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> BsStatus {
    match err {
        Error::ControllabilityViolation { .. } | Error::DegenerateJumps => BsStatus::Controllability,
        Error::Unstable { .. } | Error::NotDecaying { .. } => BsStatus::Unstable,
        Error::LinearAlgebra(_) | Error::Divergent(_) | Error::NonFinite(_) => BsStatus::Numerical,
        _ => BsStatus::InvalidArgument,
    }
}

struct Fail(BsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BsStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BsStatus::Panic
        }
    }
}

/// # Safety
/// `re` and `im` must be null or point to `len` readable doubles.
unsafe fn read_pairs(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, Fail> {
    if re.is_null() || im.is_null() {
        return Err(null("coefficient array"));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

/// # Safety
/// As [`read_pairs`] with `len = 2 * order + 1`.
unsafe fn read_vector(period: f64, re: *const f64, im: *const f64, order: usize) -> Result<FourierVector, Fail> {
    let coeffs = read_pairs(re, im, 2 * order + 1)?;
    Ok(FourierVector::from_coeffs(period, coeffs)?)
}

/// # Safety
/// `re` and `im` must be null or point to `len` writable doubles.
unsafe fn write_vector(v: &FourierVector, re: *mut f64, im: *mut f64, len: usize) -> Result<(), Fail> {
    if re.is_null() || im.is_null() {
        return Err(null("output array"));
    }
    let need = 2 * v.order() + 1;
    if len != need {
        return Err(Fail(BsStatus::InvalidArgument, format!("output length {len}, expected {need}")));
    }
    let re = std::slice::from_raw_parts_mut(re, len);
    let im = std::slice::from_raw_parts_mut(im, len);
    for (k, c) in v.coeffs().iter().enumerate() {
        re[k] = c.re;
        im[k] = c.im;
    }
    Ok(())
}

fn finish_law(phi: FourierVector, lambda: f64, m: u32, out: *mut *mut BsLaw) -> Result<(), Fail> {
    let law = synth_f(&phi, lambda, m)?;
    let handle = Box::new(BsLaw { law, phi });
    // SAFETY: callers check `out` for null before reaching here.
    unsafe { *out = Box::into_raw(handle) };
    Ok(())
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!("backstep ", env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Law for the ramp `φ(x) = L − x` with `m = 1`, coefficients `|n| ≤ order`.
///
/// # Safety
/// `out` must be null or a valid pointer to a `BsLaw*`.
#[no_mangle]
pub unsafe extern "C" fn bs_law_ramp(period: f64, lambda: f64, order: usize, out: *mut *mut BsLaw) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let phi = fourier_coeffs(&ControllerSpec::ramp(period)?, order)?;
        finish_law(phi, lambda, 1, out)
    })
}

/// Law from a piecewise polynomial controller. `breakpoints` holds `pieces + 1`
/// increasing values from 0 to `period`; piece `j` has `piece_len[j]`
/// coefficients (increasing degree), stored consecutively in `coeffs`.
///
/// # Safety
/// `breakpoints` must hold `pieces + 1` doubles, `piece_len` `pieces` entries
/// and `coeffs` their sum; `out` must be a valid pointer to a `BsLaw*`.
#[no_mangle]
pub unsafe extern "C" fn bs_law_piecewise(
    period: f64,
    breakpoints: *const f64,
    piece_len: *const usize,
    pieces: usize,
    coeffs: *const f64,
    m: u32,
    lambda: f64,
    order: usize,
    out: *mut *mut BsLaw,
) -> BsStatus {
    guard(|| {
        if out.is_null() || breakpoints.is_null() || piece_len.is_null() || coeffs.is_null() {
            return Err(null("argument"));
        }
        let bp = std::slice::from_raw_parts(breakpoints, pieces + 1).to_vec();
        let lens = std::slice::from_raw_parts(piece_len, pieces);
        let total: usize = lens.iter().sum();
        let flat = std::slice::from_raw_parts(coeffs, total);
        let mut polys = Vec::with_capacity(pieces);
        let mut at = 0;
        for &len in lens {
            polys.push(flat[at..at + len].to_vec());
            at += len;
        }
        let spec = ControllerSpec::PiecewisePoly(PiecewisePoly::new(period, bp, polys)?);
        let phi = fourier_coeffs(&spec, order)?;
        finish_law(phi, lambda, m, out)
    })
}

/// Law from raw two-sided controller coefficients `φ_{−N..=N}`.
///
/// # Safety
/// `re`, `im` must hold `2 * order + 1` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_law_from_coeffs(
    period: f64,
    re: *const f64,
    im: *const f64,
    order: usize,
    m: u32,
    lambda: f64,
    out: *mut *mut BsLaw,
) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let phi = read_vector(period, re, im, order)?;
        finish_law(phi, lambda, m, out)
    })
}

/// # Safety
/// `law` must come from a `bs_law_*` constructor and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn bs_law_free(law: *mut BsLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// # Safety
/// `law` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_law_gain(law: *const BsLaw, out: *mut f64) -> BsStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(|| null("law"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = law.law.gain();
        Ok(())
    })
}

/// # Safety
/// `law` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_law_bandwidth(law: *const BsLaw, out: *mut usize) -> BsStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(|| null("law"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = law.law.bandwidth();
        Ok(())
    })
}

/// Copies `F_{−N..=N}`; `len` must equal `2N + 1`.
///
/// # Safety
/// `law` must be a live handle; `re`, `im` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_law_coeffs(law: *const BsLaw, re: *mut f64, im: *mut f64, len: usize) -> BsStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(|| null("law"))?;
        write_vector(law.law.coeffs(), re, im, len)
    })
}

/// `u = ⟨α, F⟩` for a state with coefficients `|n| ≤ order`.
///
/// # Safety
/// `law` must be a live handle; `re`, `im` must hold `2 * order + 1`
/// doubles; `out_re`, `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bs_law_eval(
    law: *const BsLaw,
    re: *const f64,
    im: *const f64,
    order: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BsStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(|| null("law"))?;
        let alpha = read_vector(law.law.period(), re, im, order)?;
        let u = eval_f(&alpha, &law.law)?;
        *out_re.as_mut().ok_or_else(|| null("out_re"))? = u.re;
        *out_im.as_mut().ok_or_else(|| null("out_im"))? = u.im;
        Ok(())
    })
}

/// Transform on the law's full bandwidth; states may use `bandwidth / margin` modes.
///
/// # Safety
/// `law` must be a live handle; `out` a valid pointer to a `BsTransform*`.
#[no_mangle]
pub unsafe extern "C" fn bs_transform_new(law: *const BsLaw, margin: usize, out: *mut *mut BsTransform) -> BsStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(|| null("law"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let transform = BacksteppingTransform::new(&law.phi, &law.law, law.law.bandwidth(), margin)?;
        *out = Box::into_raw(Box::new(BsTransform { transform }));
        Ok(())
    })
}

/// # Safety
/// `t` must come from [`bs_transform_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn bs_transform_free(t: *mut BsTransform) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// `z = Tα`; the output has `2 N_work + 1` entries.
///
/// # Safety
/// `t` must be a live handle; inputs hold `2 * order + 1` doubles, outputs `out_len`.
#[no_mangle]
pub unsafe extern "C" fn bs_transform_apply(
    t: *const BsTransform,
    re: *const f64,
    im: *const f64,
    order: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> BsStatus {
    guard(|| {
        let t = &t.as_ref().ok_or_else(|| null("transform"))?.transform;
        let alpha = read_vector(t.period(), re, im, order)?;
        write_vector(&t.apply(&alpha)?, out_re, out_im, out_len)
    })
}

/// `α = T⁻¹z` for `order ≤ N_work / margin`; the output has `2 N_work + 1` entries.
///
/// # Safety
/// As [`bs_transform_apply`].
#[no_mangle]
pub unsafe extern "C" fn bs_transform_apply_inverse(
    t: *const BsTransform,
    re: *const f64,
    im: *const f64,
    order: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> BsStatus {
    guard(|| {
        let t = &t.as_ref().ok_or_else(|| null("transform"))?.transform;
        let z = read_vector(t.period(), re, im, order)?;
        write_vector(&t.apply_inverse(&z)?, out_re, out_im, out_len)
    })
}

/// Closed-loop state at time `time` by conjugation with the target flow,
/// truncated to `out_order`; `norm` (may be null) receives `‖α(t)‖_m`.
///
/// # Safety
/// `t` must be a live handle; inputs hold `2 * order + 1` doubles and the
/// outputs `2 * out_order + 1`.
#[no_mangle]
pub unsafe extern "C" fn bs_closed_loop_state(
    t: *const BsTransform,
    re: *const f64,
    im: *const f64,
    order: usize,
    mu: f64,
    time: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    out_order: usize,
    norm: *mut f64,
) -> BsStatus {
    guard(|| {
        let t = &t.as_ref().ok_or_else(|| null("transform"))?.transform;
        let alpha = read_vector(t.period(), re, im, order)?;
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Fail(BsStatus::InvalidArgument, format!("time must be finite and nonnegative, got {time}")));
        }
        let state = ConjugateFlow::new(t, &alpha, mu)?.state_at(time, out_order)?;
        write_vector(&state, out_re, out_im, 2 * out_order + 1)?;
        if let Some(n) = norm.as_mut() {
            *n = sobolev_norm(&state, t.sobolev_order() as f64);
        }
        Ok(())
    })
}
