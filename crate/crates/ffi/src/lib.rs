//! C ABI over the kernel and constant routines of `polysob`.
//!
//! Every call returns a [`PolysobStatus`] and writes its result through an
//! out-pointer; panics are caught at the boundary and reported as
//! `POLYSOB_STATUS_PANIC`. Kernels are opaque handles owned by the caller and
//! released with [`polysob_kernel_free`].

use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use polysob::constants::{self, DimensionPair};
use polysob::geometry::ModelManifold;
use polysob::green::{self, BesselKernelSum};
use polysob::quotient::{self, TestFunctionFamily};
use polysob::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolysobStatus {
    Ok = 0,
    /// `(n, k)` violates `2 <= 2k < n`.
    InvalidDimension = 1,
    InvalidArgument = 2,
    NullPointer = 3,
    /// Quadrature failure, divergence or a value with no exact form.
    Numerical = 4,
    Panic = 5,
}

/// Fundamental solution of `Δ^k + α^{2k}` on `ℝⁿ`.
pub struct PolysobKernel {
    inner: BesselKernelSum,
}

impl From<Error> for PolysobStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension { .. } => PolysobStatus::InvalidDimension,
            Error::Input(_) => PolysobStatus::InvalidArgument,
            _ => PolysobStatus::Numerical,
        }
    }
}

fn guarded(f: impl FnOnce() -> Result<(), PolysobStatus>) -> PolysobStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PolysobStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => PolysobStatus::Panic,
    }
}

fn pair(n: c_int, k: c_int) -> Result<DimensionPair, PolysobStatus> {
    Ok(DimensionPair::new(n as i64, k as i64)?)
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn store<T>(out: *mut T, value: T) -> Result<(), PolysobStatus> {
    if out.is_null() {
        return Err(PolysobStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn polysob_status_message(status: PolysobStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        PolysobStatus::Ok => b"ok\0",
        PolysobStatus::InvalidDimension => b"invalid dimension pair: need 2 <= 2k < n\0",
        PolysobStatus::InvalidArgument => b"invalid argument\0",
        PolysobStatus::NullPointer => b"null pointer\0",
        PolysobStatus::Numerical => b"numerical failure\0",
        PolysobStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Critical exponent `2n/(n-2k)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn polysob_critical_exponent(n: c_int, k: c_int, out: *mut f64) -> PolysobStatus {
    guarded(|| {
        let d = pair(n, k)?;
        store(out, 2.0 * d.n() as f64 / d.gap() as f64)
    })
}

/// Sharp Euclidean Sobolev constant `K(n,k)`.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn polysob_sharp_constant(n: c_int, k: c_int, out: *mut f64) -> PolysobStatus {
    guarded(|| store(out, constants::sharp_constant(pair(n, k)?).value))
}

/// Coefficient of `r^{2k-n}` in the fundamental solution at the origin.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn polysob_singular_constant(n: c_int, k: c_int, out: *mut f64) -> PolysobStatus {
    guarded(|| store(out, constants::c_green(pair(n, k)?).to_f64()))
}

/// Test-function quotient `Q(ε)` on the unit sphere (`sphere != 0`) or the
/// `2π`-periodic torus, with mass coefficient `b`. Writes `Q` and its error
/// estimate.
///
/// # Safety
/// `q` and `err` must be valid for a write of one `double` each.
#[no_mangle]
pub unsafe extern "C" fn polysob_quotient(
    sphere: c_int,
    n: c_int,
    k: c_int,
    b: f64,
    eps: f64,
    q: *mut f64,
    err: *mut f64,
) -> PolysobStatus {
    guarded(|| {
        if q.is_null() || err.is_null() {
            return Err(PolysobStatus::NullPointer);
        }
        let d = pair(n, k)?;
        let m = if sphere != 0 {
            ModelManifold::sphere(d.n(), 1.0)
        } else {
            ModelManifold::torus(d.n(), 2.0 * std::f64::consts::PI)
        };
        let fam = TestFunctionFamily::new(&m, d)?;
        let s = quotient::quotient_eval(&fam, eps, b)?;
        store(q, s.q)?;
        store(err, s.err)
    })
}

/// Build a kernel evaluated with `precision` decimal digits near the origin
/// (0 selects the default).
///
/// # Safety
/// `out` must be valid for a write of one pointer. On success the handle must
/// be released with [`polysob_kernel_free`].
#[no_mangle]
pub unsafe extern "C" fn polysob_kernel_new(
    n: c_int,
    k: c_int,
    precision: u32,
    out: *mut *mut PolysobKernel,
) -> PolysobStatus {
    guarded(|| {
        if out.is_null() {
            return Err(PolysobStatus::NullPointer);
        }
        let digits = if precision == 0 { green::DEFAULT_PRECISION } else { precision };
        let inner = green::gamma_fn(pair(n, k)?).with_precision(digits)?;
        store(out, Box::into_raw(Box::new(PolysobKernel { inner })))
    })
}

/// `Γ_α(r) = α^{n-2k} Γ(αr)`.
///
/// # Safety
/// `kernel` must come from [`polysob_kernel_new`] and not have been freed;
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn polysob_kernel_eval(
    kernel: *const PolysobKernel,
    alpha: f64,
    r: f64,
    out: *mut f64,
) -> PolysobStatus {
    guarded(|| {
        let kernel = kernel.as_ref().ok_or(PolysobStatus::NullPointer)?;
        if !(alpha > 0.0 && r > 0.0 && alpha.is_finite() && r.is_finite()) {
            return Err(PolysobStatus::InvalidArgument);
        }
        store(out, green::gamma_alpha(&kernel.inner, alpha, r))
    })
}

/// Sum of the moduli of the Bessel terms at `r`, an upper bound for `|Γ(r)|`.
///
/// # Safety
/// Same as [`polysob_kernel_eval`].
#[no_mangle]
pub unsafe extern "C" fn polysob_kernel_envelope(kernel: *const PolysobKernel, r: f64, out: *mut f64) -> PolysobStatus {
    guarded(|| {
        let kernel = kernel.as_ref().ok_or(PolysobStatus::NullPointer)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(PolysobStatus::InvalidArgument);
        }
        store(out, kernel.inner.envelope(r))
    })
}

/// Release a kernel; null is ignored.
///
/// # Safety
/// `kernel` must be null or come from [`polysob_kernel_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn polysob_kernel_free(kernel: *mut PolysobKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}
