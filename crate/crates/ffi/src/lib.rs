//! C ABI for levelreg.
//!
//! Set functions live behind the opaque `LrSetFunction` handle, created by the
//! `lr_setfn_*` constructors and released with [`lr_setfn_free`]. Every call
//! returns an [`LrStatus`]; on failure [`lr_last_error_message`] describes the
//! error. Indices are 0-based and subsets are byte masks (nonzero = member).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use levelreg::lovasz::{greedy, lovasz_extension};
use levelreg::prox::prox;
use levelreg::sfm::minimize;
use levelreg::{
    CardinalityProfile, Error, NoisyCutSpec, ProxEngine, SetFunction, SfmEngine, SubsetMask,
    WeightedGraph,
};

/// Opaque set-function handle.
pub struct LrSetFunction {
    inner: SetFunction,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    GuardExceeded = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrProxEngine {
    Auto = 0,
    Decomposition = 1,
    MinNorm = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LrStatus {
    match e {
        Error::DimensionMismatch { .. } => LrStatus::DimensionMismatch,
        Error::GuardExceeded { .. } => LrStatus::GuardExceeded,
        Error::Numerical(_) | Error::NonConvergence { .. } | Error::CertificationFailed(_) => {
            LrStatus::Numerical
        }
        _ => LrStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guarded(body: impl FnOnce() -> Result<(), Fail>) -> LrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LrStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            LrStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            LrStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `p` points to `len` readable elements.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `p` points to `len` writable elements.
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

unsafe fn handle<'a>(f: *const LrSetFunction) -> Result<&'a SetFunction, Fail> {
    if f.is_null() {
        return Err(Fail::Null("set function"));
    }
    // SAFETY: non-null handles come from an `lr_setfn_*` constructor and are live.
    Ok(unsafe { &(*f).inner })
}

fn check_len(f: &SetFunction, p: usize) -> Result<(), Fail> {
    if f.size() != p {
        return Err(Fail::Lib(Error::DimensionMismatch {
            expected: f.size(),
            got: p,
        }));
    }
    Ok(())
}

unsafe fn store(out: *mut *mut LrSetFunction, f: SetFunction) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output handle"));
    }
    let boxed = Box::into_raw(Box::new(LrSetFunction { inner: f }));
    // SAFETY: `out` is non-null and writable per the caller contract.
    unsafe { *out = boxed };
    Ok(())
}

unsafe fn edge_list(
    n_edges: usize,
    from: *const usize,
    to: *const usize,
    weights: *const f64,
) -> Result<Vec<(usize, usize, f64)>, Fail> {
    let (a, b, w) = unsafe {
        (
            input(from, n_edges, "edge sources")?,
            input(to, n_edges, "edge targets")?,
            input(weights, n_edges, "edge weights")?,
        )
    };
    Ok((0..n_edges).map(|k| (a[k], b[k], w[k])).collect())
}

/// Unit-weight chain total variation on p elements.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_chain_tv(p: usize, out: *mut *mut LrSetFunction) -> LrStatus {
    guarded(|| unsafe { store(out, SetFunction::chain_tv(p)?) })
}

/// Unit-weight 4-neighbour grid total variation; element r·width + c is cell (r, c).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_grid_tv(
    width: usize,
    height: usize,
    out: *mut *mut LrSetFunction,
) -> LrStatus {
    guarded(|| unsafe { store(out, SetFunction::grid_tv(width, height)?) })
}

/// Cut function of an undirected graph with non-negative weights.
///
/// # Safety
/// `from`, `to` and `weights` must each point to `n_edges` readable elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_cut(
    p: usize,
    n_edges: usize,
    from: *const usize,
    to: *const usize,
    weights: *const f64,
    out: *mut *mut LrSetFunction,
) -> LrStatus {
    guarded(|| unsafe {
        let edges = edge_list(n_edges, from, to, weights)?;
        store(out, SetFunction::cut(WeightedGraph::new(p, &edges)?))
    })
}

/// F(A) = h(|A|) from the p + 1 values h(0), …, h(p).
///
/// # Safety
/// `h` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_cardinality(
    h: *const f64,
    len: usize,
    out: *mut *mut LrSetFunction,
) -> LrStatus {
    guarded(|| unsafe {
        let h = input(h, len, "profile")?.to_vec();
        store(out, SetFunction::cardinality(CardinalityProfile::new(h)?))
    })
}

/// Robust cut over a hidden graph on p nodes paired with the p elements.
///
/// # Safety
/// As for [`lr_setfn_cut`].
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_noisy_cut(
    p: usize,
    n_edges: usize,
    from: *const usize,
    to: *const usize,
    weights: *const f64,
    penalty: f64,
    out: *mut *mut LrSetFunction,
) -> LrStatus {
    guarded(|| unsafe {
        let edges = edge_list(n_edges, from, to, weights)?;
        let spec = NoisyCutSpec::new(WeightedGraph::new(p, &edges)?, penalty)?;
        store(out, SetFunction::noisy_cut(spec))
    })
}

/// Explicit table of 2^p values indexed by bitmask (bit i set = element i in A).
///
/// # Safety
/// `values` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_table(
    p: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut LrSetFunction,
) -> LrStatus {
    guarded(|| unsafe {
        let v = input(values, len, "table")?.to_vec();
        store(out, SetFunction::table(p, v)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_free(f: *mut LrSetFunction) {
    if !f.is_null() {
        // SAFETY: `f` came from `Box::into_raw` in a constructor.
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Ground set size.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_size(f: *const LrSetFunction, out: *mut usize) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        output(out, 1, "output size")?[0] = f.size();
        Ok(())
    })
}

/// F(A) for a byte mask of length p.
///
/// # Safety
/// `mask` must point to `p` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lr_setfn_eval(
    f: *const LrSetFunction,
    mask: *const u8,
    p: usize,
    out: *mut f64,
) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        check_len(f, p)?;
        let bits: Vec<bool> = input(mask, p, "mask")?.iter().map(|&b| b != 0).collect();
        output(out, 1, "output value")?[0] = f.eval(&SubsetMask::from_bools(bits))?;
        Ok(())
    })
}

/// Lovász extension f(w).
///
/// # Safety
/// `w` must point to `p` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lr_lovasz_extension(
    f: *const LrSetFunction,
    w: *const f64,
    p: usize,
    out: *mut f64,
) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        check_len(f, p)?;
        output(out, 1, "output value")?[0] = lovasz_extension(f, input(w, p, "w")?)?;
        Ok(())
    })
}

/// Greedy base point s ∈ B(F) maximizing sᵀw, written to `s_out`.
///
/// # Safety
/// `w` must be readable and `s_out` writable for `p` values.
#[no_mangle]
pub unsafe extern "C" fn lr_greedy(
    f: *const LrSetFunction,
    w: *const f64,
    p: usize,
    s_out: *mut f64,
) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        check_len(f, p)?;
        let (s, _) = greedy(f, input(w, p, "w")?)?;
        output(s_out, p, "s_out")?.copy_from_slice(&s.s);
        Ok(())
    })
}

/// argmin_w ½‖w − z‖² + λf(w), written to `w_out`.
///
/// # Safety
/// `z` must be readable and `w_out` writable for `p` values.
#[no_mangle]
pub unsafe extern "C" fn lr_prox(
    f: *const LrSetFunction,
    z: *const f64,
    p: usize,
    lambda: f64,
    engine: LrProxEngine,
    w_out: *mut f64,
) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        check_len(f, p)?;
        let engine = match engine {
            LrProxEngine::Auto => ProxEngine::Auto,
            LrProxEngine::Decomposition => ProxEngine::Decomposition,
            LrProxEngine::MinNorm => ProxEngine::MinNorm,
        };
        let sol = prox(f, input(z, p, "z")?, lambda, engine)?;
        output(w_out, p, "w_out")?.copy_from_slice(&sol.w);
        Ok(())
    })
}

/// Smallest minimizer of λF(A) − z(A) as a byte mask, and the minimum value.
///
/// # Safety
/// `z` must be readable for `p` values, `mask_out` writable for `p` bytes and
/// `value_out` writable.
#[no_mangle]
pub unsafe extern "C" fn lr_sfm(
    f: *const LrSetFunction,
    z: *const f64,
    p: usize,
    lambda: f64,
    mask_out: *mut u8,
    value_out: *mut f64,
) -> LrStatus {
    guarded(|| unsafe {
        let f = handle(f)?;
        check_len(f, p)?;
        let res = minimize(f, input(z, p, "z")?, lambda, SfmEngine::Auto)?;
        for (o, &b) in output(mask_out, p, "mask_out")?
            .iter_mut()
            .zip(res.minimal_minimizer.as_slice())
        {
            *o = b as u8;
        }
        output(value_out, 1, "value_out")?[0] = res.value;
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lr_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
