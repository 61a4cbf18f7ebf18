//! C interface to graph construction, decoding and confidence scores.
//!
//! Every fallible function returns a [`DcsStatus`]. The message for the most
//! recent failure on the calling thread is available from [`dcs_last_error`].
//! Graph handles are opaque and must be released with [`dcs_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dcs_core::confidence::{CosetOracle, Scorer};
use dcs_core::graph::parse_document;
use dcs_core::multiwindow::{compose_lep, time_overhead};
use dcs_core::{DecodingGraph, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capability = 3,
    Runtime = 4,
    Panic = 5,
}

/// Opaque decoding graph.
pub struct DcsGraph {
    graph: DecodingGraph,
}

/// Decoding of one syndrome with both confidence scores.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DcsScore {
    pub correction_weight: f64,
    /// Parity of the correction across the logical cut.
    pub logical_parity: bool,
    pub gap: f64,
    pub swim: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn call(f: impl FnOnce() -> Result<(), Failure>) -> DcsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            DcsStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => DcsStatus::InvalidArgument,
                3 => DcsStatus::Capability,
                _ => DcsStatus::Runtime,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            DcsStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn graph_ref<'a>(p: *const DcsGraph) -> Result<&'a DecodingGraph, Failure> {
    p.as_ref().map(|g| &g.graph).ok_or(Failure::Null("graph"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

fn boxed(graph: DecodingGraph) -> *mut DcsGraph {
    Box::into_raw(Box::new(DcsGraph { graph }))
}

/// Code-capacity graph with `d_z` rows and `d_x - 1` detector columns.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_code_capacity(
    d_x: usize,
    d_z: usize,
    p: f64,
    out: *mut *mut DcsGraph,
) -> DcsStatus {
    call(|| {
        let slot = out_ref(out, "out")?;
        *slot = boxed(DecodingGraph::code_capacity(d_x, d_z, p)?);
        Ok(())
    })
}

/// Phenomenological graph of distance `d` over `rounds` measurement rounds.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_phenomenological(
    d: usize,
    rounds: usize,
    p_data: f64,
    p_meas: f64,
    out: *mut *mut DcsGraph,
) -> DcsStatus {
    call(|| {
        let slot = out_ref(out, "out")?;
        *slot = boxed(DecodingGraph::phenomenological(d, rounds, p_data, p_meas)?);
        Ok(())
    })
}

/// Graph from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_from_json(json: *const c_char, out: *mut *mut DcsGraph) -> DcsStatus {
    call(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let slot = out_ref(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("json is not UTF-8: {e}")))?;
        let doc = parse_document(text)?;
        *slot = boxed(DecodingGraph::from_document(&doc)?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_free(graph: *mut DcsGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of detectors; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_num_detectors(graph: *const DcsGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.num_detectors())
}

/// Number of edges; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_graph_num_edges(graph: *const DcsGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.num_edges())
}

/// Decodes `syndrome` and computes the complementary gap and swim distance.
///
/// # Safety
/// `syndrome` must point to `len` readable ids (or be null with `len == 0`)
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcs_score(
    graph: *const DcsGraph,
    syndrome: *const usize,
    len: usize,
    out: *mut DcsScore,
) -> DcsStatus {
    call(|| {
        let g = graph_ref(graph)?;
        let s = slice(syndrome, len, "syndrome")?;
        let slot = out_ref(out, "out")?;
        let r = Scorer::new(g).score(s)?;
        *slot = DcsScore {
            correction_weight: r.correction.total_weight,
            logical_parity: g.logical_parity(&r.correction.edges),
            gap: r.gap,
            swim: r.swim,
        };
        Ok(())
    })
}

/// Exact log10 success odds of the minimum-weight correction. Returns
/// `DCS_STATUS_CAPABILITY` for graphs beyond the enumeration bound.
///
/// # Safety
/// As for [`dcs_score`]; `out_lambda` and `out_p_l` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcs_exact_log_odds(
    graph: *const DcsGraph,
    syndrome: *const usize,
    len: usize,
    out_lambda: *mut f64,
    out_p_l: *mut f64,
) -> DcsStatus {
    call(|| {
        let g = graph_ref(graph)?;
        let s = slice(syndrome, len, "syndrome")?;
        let lambda = out_ref(out_lambda, "out_lambda")?;
        let p_l = out_ref(out_p_l, "out_p_l")?;
        let oracle = CosetOracle::new(g)?;
        let c = dcs_core::decoder::decode(g, s)?;
        let odds = oracle.log_odds(&c.edges);
        *lambda = odds.lambda;
        *p_l = odds.p_l;
        Ok(())
    })
}

/// Logical error probability of `len` independent windows.
///
/// # Safety
/// `ps` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcs_compose_lep(ps: *const f64, len: usize, out: *mut f64) -> DcsStatus {
    call(|| {
        let v = slice(ps, len, "ps")?;
        *out_ref(out, "out")? = compose_lep(v)?;
        Ok(())
    })
}

/// Mean processor time per accepted `n`-window circuit at discard fraction `f`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcs_time_overhead(f: f64, n: u64, out: *mut f64) -> DcsStatus {
    call(|| {
        *out_ref(out, "out")? = time_overhead(f, n)?;
        Ok(())
    })
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn dcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn dcs_status_name(status: DcsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        DcsStatus::Ok => c"ok",
        DcsStatus::NullPointer => c"null pointer",
        DcsStatus::InvalidArgument => c"invalid argument",
        DcsStatus::Capability => c"capability exceeded",
        DcsStatus::Runtime => c"runtime failure",
        DcsStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
