//! C ABI for `haar-greedy`.
//!
//! Grid functions cross the boundary as opaque [`HgGrid`] handles created by
//! [`hg_grid_new`] and released with [`hg_grid_free`]. Every fallible call
//! returns an [`HgStatus`] and writes its result through an out pointer; on a
//! nonzero status [`hg_last_error`] describes the failure for the calling
//! thread. Atoms are reported by their position in the dictionary order: the
//! constant first, then by level, cube index and orientation.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use haar_greedy::basis::dictionary_position;
use haar_greedy::bounds::{c4_star, greedy_bound_constant};
use haar_greedy::oracle::{sigma_m, DEFAULT_TOL, MAX_ORACLE_ATOMS, MAX_ORACLE_TERMS};
use haar_greedy::{analyze, greedy_residual, Error, GridFunction, Support};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidExponent = 2,
    InvalidInput = 3,
    TooManyTerms = 4,
    OracleCap = 5,
    NoConvergence = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque piecewise-constant function on a dyadic grid.
pub struct HgGrid {
    inner: GridFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HgStatus {
    match e {
        Error::InvalidExponent(..) => HgStatus::InvalidExponent,
        Error::TooManyTerms { .. } => HgStatus::TooManyTerms,
        Error::OracleCap(_) => HgStatus::OracleCap,
        Error::NoConvergence { .. } => HgStatus::NoConvergence,
        _ => HgStatus::InvalidInput,
    }
}

struct Failure(HgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HgStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HgStatus::Panic
        }
    }
}

unsafe fn grid_ref<'a>(grid: *const HgGrid) -> Result<&'a GridFunction, Failure> {
    grid.as_ref().map(|g| &g.inner).ok_or_else(|| null("grid"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Writes the dictionary positions of `support` to `out`, which holds `cap` entries.
unsafe fn write_support(g: &GridFunction, support: &Support, out: *mut usize, cap: usize) -> Result<(), Failure> {
    if support.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("support buffer"));
    }
    if cap < support.len() {
        return Err(Failure(
            HgStatus::BufferTooSmall,
            format!("support buffer holds {cap} entries, need {}", support.len()),
        ));
    }
    let buf = std::slice::from_raw_parts_mut(out, support.len());
    for (slot, atom) in buf.iter_mut().zip(support.atoms()) {
        *slot = dictionary_position(atom, g.dim(), g.level())
            .ok_or_else(|| Failure(HgStatus::Panic, "atom outside the dictionary".into()))?;
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null after a success.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a grid function on the level-`level` grid of `[0,1]^dim` from
/// `2^(dim*level)` row-major values, axis 1 varying fastest.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hg_grid_new(
    dim: usize,
    level: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut HgGrid,
) -> HgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(values, len).to_vec()
        };
        let inner = GridFunction::new(dim, level, data)?;
        out.write(Box::into_raw(Box::new(HgGrid { inner })));
        Ok(())
    })
}

/// Releases a handle from [`hg_grid_new`]. Null is ignored.
///
/// # Safety
/// `grid` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hg_grid_free(grid: *mut HgGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of cells, which equals the dictionary size. Zero for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_grid_len(grid: *const HgGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.len())
}

/// `||f||_p` for `0 < p`.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hg_lp_norm(grid: *const HgGrid, p: f64, out: *mut f64) -> HgStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        write(out, g.lp_norm(p)?, "out")
    })
}

/// Greedy error `||f - G_m f||_p` and the selected support.
///
/// Up to `cap` dictionary positions go to `support`, which may be null when
/// `m` is zero.
///
/// # Safety
/// `grid` must be a live handle, `error` writable, and `support` must have room
/// for `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn hg_greedy(
    grid: *const HgGrid,
    p: f64,
    m: usize,
    error: *mut f64,
    support: *mut usize,
    cap: usize,
) -> HgStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        if error.is_null() {
            return Err(null("error"));
        }
        let (residual, chosen) = greedy_residual(&analyze(g, p)?, m)?;
        write_support(g, &chosen, support, cap)?;
        write(error, residual.lp_norm(p)?, "error")
    })
}

/// Best m-term error `sigma_m(f)_p` by exhaustive search, with a minimizing support.
///
/// A nonpositive `tol` selects the default solver tolerance. The search is
/// capped at 16 atoms and 5 terms; larger problems return
/// `HG_STATUS_ORACLE_CAP`.
///
/// # Safety
/// `grid` must be a live handle, `sigma` writable, and `support` must have room
/// for `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn hg_sigma_m(
    grid: *const HgGrid,
    p: f64,
    m: usize,
    tol: f64,
    sigma: *mut f64,
    support: *mut usize,
    cap: usize,
) -> HgStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        if sigma.is_null() {
            return Err(null("sigma"));
        }
        if g.len() > MAX_ORACLE_ATOMS || m > MAX_ORACLE_TERMS {
            return Err(Error::OracleCap(format!(
                "dictionary size {} and m = {m} exceed the limits N <= {MAX_ORACLE_ATOMS}, m <= {MAX_ORACLE_TERMS}",
                g.len()
            ))
            .into());
        }
        let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
        let best = sigma_m(g, p, m, tol)?;
        write_support(g, &best.support, support, cap)?;
        write(sigma, best.sigma, "sigma")
    })
}

/// Constant `C` in `||f - G_m f||_p <= C sigma_m(f)_p` for dimension `dim`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hg_greedy_constant(p: f64, dim: usize, out: *mut f64) -> HgStatus {
    guard(|| write(out, greedy_bound_constant(p, dim)?, "out"))
}

/// `(2^dim - 1)(max(p, p') - 1)`, the square-function constant summed over orientations.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hg_c4_star(p: f64, dim: usize, out: *mut f64) -> HgStatus {
    guard(|| write(out, c4_star(p, dim)?, "out"))
}
