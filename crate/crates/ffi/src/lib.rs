//! C ABI over `sgspline`.
//!
//! Objects are opaque handles created by `sg_*_new`/`sg_*_project`/... and
//! released with the matching `sg_*_free`. Every fallible call returns an
//! [`SgStatus`]; on failure the message is kept per thread and can be read
//! with [`sg_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sgspline::bspline::SplineSpace1D;
use sgspline::functions::TargetId;
use sgspline::geometry::GeometryMap;
use sgspline::index::{sparse_dimension, LevelRule};
use sgspline::project::NormMode;
use sgspline::sparse::{combination_project, SparseGridFunction};
use sgspline::Error;

/// Result codes of all fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    OrderTooHigh = 4,
    Singular = 5,
    InvalidGeometry = 6,
    NoConvergence = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for SgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::OutOfDomain(_) => SgStatus::OutOfDomain,
            Error::OrderTooHigh { .. } => SgStatus::OrderTooHigh,
            Error::Singular(_) | Error::RankDeficient(_) => SgStatus::Singular,
            Error::InvalidGeometry(_) => SgStatus::InvalidGeometry,
            Error::NoConvergence { .. } => SgStatus::NoConvergence,
            Error::Io(_) => SgStatus::Io,
            _ => SgStatus::InvalidArgument,
        }
    }
}

/// Univariate clamped dyadic spline space.
pub struct SgSpace(SplineSpace1D);

/// Combination-technique approximation on the unit cube.
pub struct SgSparse(SparseGridFunction);

/// Spline geometry map of the unit cube.
pub struct SgGeometry(GeometryMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SgStatus, msg: impl Into<String>) -> SgStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SgStatus>) -> SgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SgStatus::Panic, msg)
        }
    }
}

fn check<T>(r: sgspline::Result<T>) -> Result<T, SgStatus> {
    r.map_err(|e| fail(SgStatus::from(&e), e.to_string()))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], SgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(SgStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, SgStatus> {
    ptr.as_ref().ok_or_else(|| fail(SgStatus::NullPointer, "null handle"))
}

unsafe fn out<'a, T>(ptr: *mut T) -> Result<&'a mut T, SgStatus> {
    ptr.as_mut().ok_or_else(|| fail(SgStatus::NullPointer, "null output pointer"))
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, SgStatus> {
    if ptr.is_null() {
        return Err(fail(SgStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SgStatus::InvalidArgument, "string is not UTF-8"))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Creates the degree-`degree` space on `2^level` uniform cells.
///
/// # Safety
/// `out_space` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_space_new(degree: usize, level: u32, out_space: *mut *mut SgSpace) -> SgStatus {
    guard(|| {
        let slot = out(out_space)?;
        let space = check(SplineSpace1D::new(degree, level))?;
        *slot = Box::into_raw(Box::new(SgSpace(space)));
        Ok(())
    })
}

/// # Safety
/// `space` must be NULL or a handle from [`sg_space_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_space_free(space: *mut SgSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of basis functions, 0 for a NULL handle.
///
/// # Safety
/// `space` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_space_dim(space: *const SgSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.dim())
}

/// Writes the `order`-th derivatives of all basis functions at `x` into
/// `values[0..len]`; `len` must be at least the space dimension.
///
/// # Safety
/// `space` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_space_eval_basis(
    space: *const SgSpace,
    x: f64,
    order: usize,
    values: *mut f64,
    len: usize,
) -> SgStatus {
    guard(|| {
        let s = &handle(space)?.0;
        if len < s.dim() {
            return Err(fail(SgStatus::BufferTooSmall, format!("need {} values, got {len}", s.dim())));
        }
        if values.is_null() {
            return Err(fail(SgStatus::NullPointer, "null output array"));
        }
        let v = check(s.eval_basis(x, order))?;
        std::slice::from_raw_parts_mut(values, v.len()).copy_from_slice(&v);
        Ok(())
    })
}

/// Sparse and full tensor dimensions for `(d, n, p)`.
///
/// # Safety
/// The output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_sparse_dimension(
    d: usize,
    n: u32,
    degree: usize,
    out_sparse: *mut u64,
    out_full: *mut u64,
) -> SgStatus {
    guard(|| {
        let (so, fo) = (out(out_sparse)?, out(out_full)?);
        let rule = check(LevelRule::new(d, n, degree))?;
        let (s, f) = sparse_dimension(&rule);
        *so = u64::try_from(s).map_err(|_| fail(SgStatus::InvalidArgument, "sparse dimension overflows u64"))?;
        *fo = u64::try_from(f).map_err(|_| fail(SgStatus::InvalidArgument, "full dimension overflows u64"))?;
        Ok(())
    })
}

/// Combination-technique projection of a built-in target (`"sin"`, `"bump"`,
/// `"exp"`, `"sin-exp"`, `"waves"`) with projection order `r`.
///
/// # Safety
/// `target` must be a NUL-terminated string and `out_fn` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_sparse_project(
    d: usize,
    n: u32,
    degree: usize,
    r: usize,
    target: *const c_char,
    param: f64,
    seed: u64,
    out_fn: *mut *mut SgSparse,
) -> SgStatus {
    guard(|| {
        let slot = out(out_fn)?;
        let id = check(TargetId::parse(text(target)?))?;
        let rule = check(LevelRule::new(d, n, degree))?;
        let f = id.build_seeded(d, param, seed);
        let u = check(combination_project(&*f, &rule, r))?;
        *slot = Box::into_raw(Box::new(SgSparse(u)));
        Ok(())
    })
}

/// # Safety
/// `func` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_sparse_free(func: *mut SgSparse) {
    if !func.is_null() {
        drop(Box::from_raw(func));
    }
}

/// Evaluates the approximation at `x[0..d]`.
///
/// # Safety
/// `func` must be a live handle, `x` valid for `d` reads, `value` valid.
#[no_mangle]
pub unsafe extern "C" fn sg_sparse_eval(func: *const SgSparse, x: *const f64, d: usize, value: *mut f64) -> SgStatus {
    guard(|| {
        let u = &handle(func)?.0;
        let slot = out(value)?;
        if d != u.rule().d {
            return Err(fail(SgStatus::InvalidArgument, format!("expected {} coordinates, got {d}", u.rule().d)));
        }
        *slot = check(u.eval(slice(x, d)?))?;
        Ok(())
    })
}

/// L2 error of the approximation against the target it was built from.
///
/// # Safety
/// `func` must be a live handle, `target` NUL-terminated, `error` valid.
#[no_mangle]
pub unsafe extern "C" fn sg_sparse_l2_error(
    func: *const SgSparse,
    target: *const c_char,
    param: f64,
    seed: u64,
    error: *mut f64,
) -> SgStatus {
    guard(|| {
        let u = &handle(func)?.0;
        let slot = out(error)?;
        let id = check(TargetId::parse(text(target)?))?;
        let f = id.build_seeded(u.rule().d, param, seed);
        *slot = check(sgspline::project::error_norm(&*f, u, NormMode::Seminorm(0)))?;
        Ok(())
    })
}

/// Built-in geometry by name (`"identity"`, `"shear"`, `"distorted-square"`).
///
/// # Safety
/// `name` must be NUL-terminated and `out_geo` valid.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_builtin(name: *const c_char, out_geo: *mut *mut SgGeometry) -> SgStatus {
    guard(|| {
        let slot = out(out_geo)?;
        let name = text(name)?;
        let g = GeometryMap::builtin(name)
            .ok_or_else(|| fail(SgStatus::InvalidArgument, format!("unknown geometry '{name}'")))?;
        *slot = Box::into_raw(Box::new(SgGeometry(g)));
        Ok(())
    })
}

/// Parses a geometry from its text form.
///
/// # Safety
/// `source` must be NUL-terminated and `out_geo` valid.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_parse(source: *const c_char, out_geo: *mut *mut SgGeometry) -> SgStatus {
    guard(|| {
        let slot = out(out_geo)?;
        let g = check(GeometryMap::parse(text(source)?))?;
        *slot = Box::into_raw(Box::new(SgGeometry(g)));
        Ok(())
    })
}

/// # Safety
/// `geo` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_free(geo: *mut SgGeometry) {
    if !geo.is_null() {
        drop(Box::from_raw(geo));
    }
}

/// Spatial dimension, 0 for a NULL handle.
///
/// # Safety
/// `geo` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_dims(geo: *const SgGeometry) -> usize {
    geo.as_ref().map_or(0, |g| g.0.dims())
}

/// `x = F(xi)` for `xi[0..dims]`, written to `x[0..dims]`.
///
/// # Safety
/// `geo` must be live; `xi` and `x` valid for `dims` elements.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_eval(geo: *const SgGeometry, xi: *const f64, x: *mut f64, dims: usize) -> SgStatus {
    guard(|| {
        let g = &handle(geo)?.0;
        if dims != g.dims() {
            return Err(fail(SgStatus::InvalidArgument, format!("expected {} coordinates, got {dims}", g.dims())));
        }
        if x.is_null() {
            return Err(fail(SgStatus::NullPointer, "null output array"));
        }
        let v = check(g.eval(slice(xi, dims)?))?;
        std::slice::from_raw_parts_mut(x, dims).copy_from_slice(&v);
        Ok(())
    })
}

/// `xi = F^{-1}(x)` by Newton iteration.
///
/// # Safety
/// `geo` must be live; `x` and `xi` valid for `dims` elements.
#[no_mangle]
pub unsafe extern "C" fn sg_geometry_inverse(geo: *const SgGeometry, x: *const f64, xi: *mut f64, dims: usize) -> SgStatus {
    guard(|| {
        let g = &handle(geo)?.0;
        if dims != g.dims() {
            return Err(fail(SgStatus::InvalidArgument, format!("expected {} coordinates, got {dims}", g.dims())));
        }
        if xi.is_null() {
            return Err(fail(SgStatus::NullPointer, "null output array"));
        }
        let v = check(g.inverse(slice(x, dims)?))?;
        std::slice::from_raw_parts_mut(xi, dims).copy_from_slice(&v);
        Ok(())
    })
}
