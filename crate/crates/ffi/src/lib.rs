//! C ABI for the quatform library: opaque form handles, status codes, and
//! flat buffers. Every function returns a `QfStatus`; results travel
//! through out-parameters. `qf_last_error_message` fetches a thread-local
//! description of the most recent failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use num_traits::ToPrimitive;

use quatform::bounds::BoundReport;
use quatform::error::Error;
use quatform::qform::{jacobi_decompose, min_nonzero, QuadForm};
use quatform::{bounds, exactmath, family, localdens, theta};

/// Opaque handle to a validated quaternary form.
pub struct QfForm {
    inner: QuadForm,
}

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    /// Invalid argument or unsupported form.
    ErrArgument = 2,
    /// A proof-range hypothesis (such as p >= 101) was not met.
    ErrHypothesis = 3,
    /// A checked inequality failed.
    ErrVerification = 4,
    /// Work refused: it would exceed an internal budget.
    ErrResource = 5,
    /// A required pointer was null.
    ErrNull = 6,
    /// A result did not fit the requested C type.
    ErrOverflow = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> QfStatus {
    match err {
        Error::Argument(_) | Error::UnsupportedForm(_) => QfStatus::ErrArgument,
        Error::Hypothesis(_) => QfStatus::ErrHypothesis,
        Error::Verification(_) => QfStatus::ErrVerification,
        Error::Resource(_) => QfStatus::ErrResource,
    }
}

fn fail(err: Error) -> QfStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a form from 16 row-major Gram entries.
///
/// # Safety
/// `gram` must point to 16 readable i64 values and `out` must be a valid
/// location for a pointer. On success `*out` owns the form; release it
/// with [`qf_form_free`].
#[no_mangle]
pub unsafe extern "C" fn qf_form_from_gram(gram: *const i64, out: *mut *mut QfForm) -> QfStatus {
    if gram.is_null() || out.is_null() {
        set_error("null pointer");
        return QfStatus::ErrNull;
    }
    let flat = std::slice::from_raw_parts(gram, 16);
    let mut entries = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            entries[i][j] = flat[4 * i + j];
        }
    }
    match QuadForm::from_gram(entries) {
        Ok(q) => {
            *out = Box::into_raw(Box::new(QfForm { inner: q }));
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Builds the family form of prime discriminant p (p = 5 mod 8).
///
/// # Safety
/// `out` must be a valid location for a pointer; see [`qf_form_from_gram`].
#[no_mangle]
pub unsafe extern "C" fn qf_form_family(p: u64, out: *mut *mut QfForm) -> QfStatus {
    if out.is_null() {
        set_error("null pointer");
        return QfStatus::ErrNull;
    }
    match family::family_form(p) {
        Ok(f) => {
            *out = Box::into_raw(Box::new(QfForm { inner: f.form }));
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a form handle. Null is tolerated.
///
/// # Safety
/// `form` must be null or a pointer produced by this library that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn qf_form_free(form: *mut QfForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

unsafe fn form_ref<'a>(form: *const QfForm) -> Option<&'a QuadForm> {
    form.as_ref().map(|f| &f.inner)
}

/// Discriminant det(A).
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_form_disc(form: *const QfForm, out: *mut i64) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match q.disc().to_i64() {
        Some(d) => {
            *out = d;
            QfStatus::Ok
        }
        None => {
            set_error("discriminant exceeds i64");
            QfStatus::ErrOverflow
        }
    }
}

/// Level N(Q).
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_form_level(form: *const QfForm, out: *mut i64) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match q.level().to_i64() {
        Some(d) => {
            *out = d;
            QfStatus::Ok
        }
        None => {
            set_error("level exceeds i64");
            QfStatus::ErrOverflow
        }
    }
}

/// Dual form with Gram N(Q) A^{-1}.
///
/// # Safety
/// `form` must be a live handle; `out` receives an owned handle.
#[no_mangle]
pub unsafe extern "C" fn qf_form_dual(form: *const QfForm, out: *mut *mut QfForm) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    *out = Box::into_raw(Box::new(QfForm { inner: q.dual() }));
    QfStatus::Ok
}

/// Smallest positive represented integer.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_min_nonzero(form: *const QfForm, out: *mut u64) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match min_nonzero(q) {
        Ok(m) => match m.to_u64() {
            Some(v) => {
                *out = v;
                QfStatus::Ok
            }
            None => {
                set_error("minimum exceeds u64");
                QfStatus::ErrOverflow
            }
        },
        Err(e) => fail(e),
    }
}

/// Outer coefficient a_1 of the reduced decomposition (equals the minimum)
/// as a rational num/den pair.
///
/// # Safety
/// `form` must be a live handle; `num` and `den` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_reduced_a1(form: *const QfForm, num: *mut i64, den: *mut u64) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if num.is_null() || den.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match jacobi_decompose(q) {
        Ok(d) => {
            let (Some(n), Some(dd)) = (d.a[0].numer().to_i64(), d.a[0].denom().to_u64()) else {
                set_error("coefficient exceeds the C types");
                return QfStatus::ErrOverflow;
            };
            *num = n;
            *den = dd;
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Representation counts r(0..=n_max) into a caller buffer of n_max + 1
/// entries.
///
/// # Safety
/// `form` must be a live handle; `out` must have space for n_max + 1 u64.
#[no_mangle]
pub unsafe extern "C" fn qf_representation_counts(
    form: *const QfForm,
    n_max: u64,
    out: *mut u64,
) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match theta::representation_counts(q, n_max) {
        Ok(r) => {
            let dst = std::slice::from_raw_parts_mut(out, n_max as usize + 1);
            dst.copy_from_slice(&r);
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Eisenstein coefficient a_E(n) as a double.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_eisenstein_coeff(form: *const QfForm, n: u64, out: *mut f64) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match theta::eisenstein_coeffs(q, n) {
        Ok(c) => {
            let v = &c[n as usize];
            *out = v.numer().to_f64().unwrap_or(f64::NAN) / v.denom().to_f64().unwrap_or(1.0);
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Exact local density beta_q(n) as num/den.
///
/// # Safety
/// `form` must be a live handle; `num` and `den` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_local_density(
    form: *const QfForm,
    q: u64,
    n: u64,
    num: *mut u64,
    den: *mut u64,
) -> QfStatus {
    let Some(qf) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if num.is_null() || den.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match localdens::local_density(qf, q, n) {
        Ok(rep) => {
            let (Some(nv), Some(dv)) = (rep.beta.numer().to_u64(), rep.beta.denom().to_u64())
            else {
                set_error("density exceeds u64 rational parts");
                return QfStatus::ErrOverflow;
            };
            *num = nv;
            *den = dv;
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Petersson norm bound 1/min Q* + 3216.66 M(25.09 p^(35/6))/p^(1/4).
/// `force` waives the p >= 101 hypothesis.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_petersson_norm_bound(
    form: *const QfForm,
    force: bool,
    out: *mut f64,
) -> QfStatus {
    let Some(q) = form_ref(form) else {
        set_error("null form");
        return QfStatus::ErrNull;
    };
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match BoundReport::compute(q, force) {
        Ok(rep) => {
            *out = rep.petersson_norm_bound();
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Verifies the family classification for p up to n_max. `matches` gets the
/// verdict; up to `cap` computed exceptions are copied into `exceptions`
/// with the true count in `n_exceptions`.
///
/// # Safety
/// `matches` and `n_exceptions` must be writable; `exceptions` must hold
/// `cap` entries (it may be null when cap = 0).
#[no_mangle]
pub unsafe extern "C" fn qf_family_verify(
    p: u64,
    n_max: u64,
    matches: *mut bool,
    exceptions: *mut u64,
    cap: usize,
    n_exceptions: *mut usize,
) -> QfStatus {
    if matches.is_null() || n_exceptions.is_null() || (exceptions.is_null() && cap > 0) {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match family::verify_family(p, n_max) {
        Ok(set) => {
            *matches = set.matches;
            *n_exceptions = set.computed.len();
            let ncopy = set.computed.len().min(cap);
            if ncopy > 0 {
                let dst = std::slice::from_raw_parts_mut(exceptions, ncopy);
                dst.copy_from_slice(&set.computed[..ncopy]);
            }
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Record divisor count M(limit) and its smallest witness.
///
/// # Safety
/// `m` and `witness` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_max_tau(limit: u64, m: *mut u64, witness: *mut u64) -> QfStatus {
    if m.is_null() || witness.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match exactmath::max_tau(&exactmath::WideInt::from(limit)) {
        Ok((mv, w)) => match w.to_u64() {
            Some(wv) => {
                *m = mv;
                *witness = wv;
                QfStatus::Ok
            }
            None => {
                set_error("witness exceeds u64");
                QfStatus::ErrOverflow
            }
        },
        Err(e) => fail(e),
    }
}

/// psi kernel lattice sum at x with truncation tolerance tol.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_psi_sum(x: f64, tol: f64, out: *mut f64) -> QfStatus {
    if out.is_null() {
        set_error("null out pointer");
        return QfStatus::ErrNull;
    }
    match bounds::psi_sum(x, tol) {
        Ok(v) => {
            *out = v;
            QfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn family_handle(p: u64) -> *mut QfForm {
        let mut out = std::ptr::null_mut();
        let st = unsafe { qf_form_family(p, &mut out) };
        assert_eq!(st, QfStatus::Ok);
        out
    }

    #[test]
    fn form_lifecycle_and_invariants() {
        let gram: [i64; 16] = [2, 1, 1, 1, 1, 2, 1, 1, 1, 1, 2, 1, 1, 1, 1, 4];
        let mut form = std::ptr::null_mut();
        let st = unsafe { qf_form_from_gram(gram.as_ptr(), &mut form) };
        assert_eq!(st, QfStatus::Ok);
        let mut disc = 0i64;
        assert_eq!(unsafe { qf_form_disc(form, &mut disc) }, QfStatus::Ok);
        assert_eq!(disc, 13);
        let mut level = 0i64;
        assert_eq!(unsafe { qf_form_level(form, &mut level) }, QfStatus::Ok);
        assert_eq!(level, 13);

        let mut dual = std::ptr::null_mut();
        assert_eq!(unsafe { qf_form_dual(form, &mut dual) }, QfStatus::Ok);
        let mut ddisc = 0i64;
        assert_eq!(unsafe { qf_form_disc(dual, &mut ddisc) }, QfStatus::Ok);
        assert_eq!(ddisc, 13 * 13 * 13);
        let mut min = 0u64;
        assert_eq!(unsafe { qf_min_nonzero(dual, &mut min) }, QfStatus::Ok);
        assert_eq!(min, 2);

        unsafe {
            qf_form_free(dual);
            qf_form_free(form);
            qf_form_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn invalid_gram_reports_argument_error() {
        let gram: [i64; 16] = [2, 1, 0, 0, 1, 2, 0, 0, 0, 0, 3, 0, 0, 0, 0, 2]; // odd diagonal
        let mut form = std::ptr::null_mut();
        let st = unsafe { qf_form_from_gram(gram.as_ptr(), &mut form) };
        assert_eq!(st, QfStatus::ErrArgument);
        let msg = unsafe { CStr::from_ptr(qf_last_error_message()) };
        assert!(msg.to_string_lossy().contains("odd"));
    }

    #[test]
    fn counts_and_density_match_core() {
        let form = family_handle(13);
        let mut counts = vec![0u64; 21];
        let st = unsafe { qf_representation_counts(form, 20, counts.as_mut_ptr()) };
        assert_eq!(st, QfStatus::Ok);
        assert_eq!(counts[0], 1);
        assert_eq!(counts[1], 12);

        let (mut num, mut den) = (0u64, 0u64);
        let st = unsafe { qf_local_density(form, 13, 1, &mut num, &mut den) };
        assert_eq!(st, QfStatus::Ok);
        assert_eq!((num, den), (12, 13)); // 1 - 1/p

        let mut ae = 0.0f64;
        assert_eq!(unsafe { qf_eisenstein_coeff(form, 1, &mut ae) }, QfStatus::Ok);
        assert!((ae - 12.0).abs() < 1e-12);
        unsafe { qf_form_free(form) };
    }

    #[test]
    fn family_and_max_tau_anchors() {
        let mut matches = false;
        let mut exc = vec![0u64; 8];
        let mut n_exc = 0usize;
        let st = unsafe {
            qf_family_verify(229, 500, &mut matches, exc.as_mut_ptr(), exc.len(), &mut n_exc)
        };
        assert_eq!(st, QfStatus::Ok);
        assert!(matches);
        assert_eq!(n_exc, 1);
        assert_eq!(exc[0], 14);

        let (mut m, mut w) = (0u64, 0u64);
        assert_eq!(unsafe { qf_max_tau(48, &mut m, &mut w) }, QfStatus::Ok);
        assert_eq!((m, w), (10, 48));
    }

    #[test]
    fn hypothesis_gate_exposed() {
        let form = family_handle(13);
        let mut bound = 0.0f64;
        let st = unsafe { qf_petersson_norm_bound(form, false, &mut bound) };
        assert_eq!(st, QfStatus::ErrHypothesis);
        let st = unsafe { qf_petersson_norm_bound(form, true, &mut bound) };
        assert_eq!(st, QfStatus::Ok);
        assert!(bound > 0.0);
        unsafe { qf_form_free(form) };
    }

    #[test]
    fn null_pointers_are_rejected() {
        let st = unsafe { qf_form_from_gram(std::ptr::null(), std::ptr::null_mut()) };
        assert_eq!(st, QfStatus::ErrNull);
        let mut out = 0u64;
        assert_eq!(unsafe { qf_min_nonzero(std::ptr::null(), &mut out) }, QfStatus::ErrNull);
    }
}
