//! C ABI over the `systemic` core.
//!
//! Graphs are opaque [`SystemicGraph`] handles created by
//! [`systemic_graph_parse`] or [`systemic_graph_new`] and released with
//! [`systemic_graph_free`]. Every fallible call returns a [`SystemicStatus`];
//! on failure a message is available from [`systemic_last_error`] on the
//! same thread. Handles may be shared across threads for reading.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use systemic::design::fundamental_limit;
use systemic::graph::parse_graph;
use systemic::measures::{hp_norm, Exponent, Measure, Network, SchurFn};
use systemic::spectral::eig_sym;
use systemic::{Error, WeightedGraph};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemicStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed edge list, bad weight or node index.
    Format = 2,
    /// Argument outside the domain of the operation (unknown measure id,
    /// invalid exponent, non-UTF-8 string, ...).
    Domain = 3,
    /// The operation needs a connected graph.
    Connectivity = 4,
    Numerical = 5,
    /// The output buffer is shorter than required.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Opaque graph handle with a cached Laplacian spectrum.
pub struct SystemicGraph {
    net: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SystemicStatus {
    match err {
        Error::Format { .. } | Error::Weight { .. } | Error::Index { .. } | Error::Dimension { .. } => {
            SystemicStatus::Format
        }
        Error::Connectivity { .. } => SystemicStatus::Connectivity,
        Error::Numerical { .. } | Error::Solver(_) => SystemicStatus::Numerical,
        _ => SystemicStatus::Domain,
    }
}

struct Fail(SystemicStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SystemicStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SystemicStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            SystemicStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SystemicStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn graph_ref<'a>(g: *const SystemicGraph) -> Result<&'a SystemicGraph, Fail> {
    g.as_ref().ok_or_else(|| null("graph"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(SystemicStatus::Domain, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out(out: *mut f64, value: f64) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

fn boxed(g: WeightedGraph) -> *mut SystemicGraph {
    Box::into_raw(Box::new(SystemicGraph { net: Network::new(g) }))
}

/// Parses an edge list (`n <count>` header, then `u v w` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn systemic_graph_parse(text: *const c_char, out: *mut *mut SystemicGraph) -> SystemicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let g = parse_graph(str_arg(text, "text")?)?;
        *out = boxed(g);
        Ok(())
    })
}

/// Builds a graph from `m` edges `(us[i], vs[i], ws[i])` on `n` nodes.
///
/// # Safety
/// `us`, `vs` and `ws` must each point to `m` readable elements (they may be
/// NULL when `m == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_graph_new(
    n: usize,
    us: *const usize,
    vs: *const usize,
    ws: *const f64,
    m: usize,
    out: *mut *mut SystemicGraph,
) -> SystemicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let edges: Vec<(usize, usize, f64)> = if m == 0 {
            Vec::new()
        } else {
            if us.is_null() || vs.is_null() || ws.is_null() {
                return Err(null("edge array"));
            }
            let (us, vs, ws) = (
                std::slice::from_raw_parts(us, m),
                std::slice::from_raw_parts(vs, m),
                std::slice::from_raw_parts(ws, m),
            );
            (0..m).map(|i| (us[i], vs[i], ws[i])).collect()
        };
        *out = boxed(WeightedGraph::new(n, edges)?);
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `g` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn systemic_graph_free(g: *mut SystemicGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn systemic_graph_node_count(g: *const SystemicGraph) -> usize {
    g.as_ref().map_or(0, |g| g.net.graph().n())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn systemic_graph_edge_count(g: *const SystemicGraph) -> usize {
    g.as_ref().map_or(0, |g| g.net.graph().edge_count())
}

/// Writes the `n` ascending Laplacian eigenvalues to `out[0..n]`. Works
/// for disconnected graphs too.
///
/// # Safety
/// `g` must be a live handle and `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn systemic_spectrum(g: *const SystemicGraph, out: *mut f64, len: usize) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        // disconnected graphs still have a well-defined Laplacian spectrum
        let owned;
        let ev = match g.net.spectrum() {
            Ok(spec) => spec.eigenvalues(),
            Err(Error::Connectivity { .. }) => {
                owned = eig_sym(g.net.graph().laplacian().as_matrix())?;
                owned.eigenvalues()
            }
            Err(e) => return Err(e.into()),
        };
        if len < ev.len() {
            return Err(Fail(
                SystemicStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", ev.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, ev.len()).copy_from_slice(ev);
        Ok(())
    })
}

fn exponent(p: f64) -> Option<Exponent> {
    if p.is_nan() {
        None
    } else if p == f64::INFINITY {
        Some(Exponent::Infinity)
    } else {
        Some(Exponent::Finite(p))
    }
}

/// Evaluates a measure by identifier (`energy1`, `zeta_measure`, ...).
/// Pass NaN for an unused `p` or `k` and NULL for an unused `f`; `p` may be
/// `INFINITY`.
///
/// # Safety
/// `g` must be a live handle, `measure` a NUL-terminated string, `f` NULL or
/// NUL-terminated, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_evaluate(
    g: *const SystemicGraph,
    measure: *const c_char,
    p: f64,
    k: f64,
    f: *const c_char,
    out: *mut f64,
) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let id = str_arg(measure, "measure")?;
        let f = if f.is_null() { None } else { Some(str_arg(f, "f")?) };
        let k = (!k.is_nan()).then_some(k);
        let m = Measure::from_parts(id, exponent(p), k, f)?;
        write_out(out, g.net.evaluate(&m)?)
    })
}

/// `Σ λ_i^{-p}` over the nonzero Laplacian eigenvalues.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_zeta(g: *const SystemicGraph, p: f64, out: *mut f64) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        write_out(out, systemic::measures::zeta(g.net.graph(), p)?)
    })
}

/// Closed-form `H_p` norm; `p` may be `INFINITY`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_hp_norm(g: *const SystemicGraph, p: f64, out: *mut f64) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = exponent(p).ok_or_else(|| Fail(SystemicStatus::Domain, "p is NaN".into()))?;
        write_out(out, hp_norm(g.net.graph(), p)?)
    })
}

/// Weighted spanning-tree count.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_spanning_tree_count(g: *const SystemicGraph, out: *mut f64) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        write_out(out, g.net.graph().spanning_tree_count())
    })
}

/// Lower bound on `Σ f(λ_i)` after adding `k` edges, for the scalar
/// function `f` (`inverse`, `inverse_sq`, `inverse_pow:Q`, `exp_decay:C`).
///
/// # Safety
/// `g` must be a live handle, `f` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn systemic_fundamental_limit(
    g: *const SystemicGraph,
    k: usize,
    f: *const c_char,
    out: *mut f64,
) -> SystemicStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let f = SchurFn::parse(str_arg(f, "f")?)?;
        write_out(out, fundamental_limit(g.net.graph(), k, &f)?)
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn systemic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn systemic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
