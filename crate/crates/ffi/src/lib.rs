//! C ABI for soflab.
//!
//! Every fallible call returns a [`SoflabStatus`]; on failure the message
//! is available from [`soflab_last_error`] on the same thread until the
//! next failing call. Handles are opaque and owned by the caller, who
//! releases them with the matching `_free` function. Strings returned
//! through `char **` are released with [`soflab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use soflab::cli::{run, spec};
use soflab::covers::Cover;
use soflab::entropy::{sofic_topological_trace, EntropyValue, SoficParams};
use soflab::group::{FiniteSubset, GroupElement, GroupSpec};
use soflab::sofic::{FolnerModel, SoficSequence};
use soflab::symbolic::SymbolicSystem;
use soflab::tiling::epsilon_disjoint_check;
use soflab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoflabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    BudgetExceeded = 4,
    Schema = 5,
    Assertion = 6,
    Io = 7,
    Utf8 = 8,
    Panic = 9,
}

/// A subshift: group, alphabet and forbidden patterns.
pub struct SoflabSystem {
    inner: SymbolicSystem,
}

/// A sofic approximation sequence.
pub struct SoflabSofic {
    inner: SoficSequence,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SoflabStatus {
    match e {
        Error::Argument(_) => SoflabStatus::InvalidArgument,
        Error::Unsupported(_) => SoflabStatus::Unsupported,
        Error::Resource { .. } => SoflabStatus::BudgetExceeded,
        Error::Schema { .. } => SoflabStatus::Schema,
        Error::Assertion(_) => SoflabStatus::Assertion,
        Error::Io(_) => SoflabStatus::Io,
    }
}

struct Fail(SoflabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SoflabStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SoflabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SoflabStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SoflabStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SoflabStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap().into_raw()
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn soflab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn soflab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn soflab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a system from the JSON of an experiment's `system` block.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_system_from_json(json: *const c_char, out: *mut *mut SoflabSystem) -> SoflabStatus {
    guard(|| {
        let inner = spec::parse_system(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(SoflabSystem { inner })), "out")
    })
}

/// The full shift on `k` symbols over Z.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_system_full_shift(k: usize, out: *mut *mut SoflabSystem) -> SoflabStatus {
    guard(|| {
        let inner = SymbolicSystem::full_shift(GroupSpec::lattice(1)?, k)?;
        put(out, Box::into_raw(Box::new(SoflabSystem { inner })), "out")
    })
}

/// The golden-mean shift over Z.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_system_golden_mean(out: *mut *mut SoflabSystem) -> SoflabStatus {
    guard(|| {
        let inner = SymbolicSystem::golden_mean()?;
        put(out, Box::into_raw(Box::new(SoflabSystem { inner })), "out")
    })
}

/// # Safety
/// `sys` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soflab_system_free(sys: *mut SoflabSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_system_alphabet_size(sys: *const SoflabSystem, out: *mut usize) -> SoflabStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        put(out, sys.inner.alphabet_size(), "out")
    })
}

/// Number of admissible patterns on a window of Z given by its positions.
///
/// # Safety
/// `window` must point to `len` integers and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_language_size(
    sys: *const SoflabSystem,
    window: *const i64,
    len: usize,
    budget: u64,
    out: *mut u64,
) -> SoflabStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        if !matches!(sys.inner.group(), GroupSpec::Lattice { rank: 1 }) {
            return Err(Fail(SoflabStatus::Unsupported, "window positions need the group Z".into()));
        }
        let elems = slice(window, len, "window")?.iter().map(|&n| GroupElement::Lattice(vec![n])).collect();
        let w = FiniteSubset::new(elems)?;
        let n = sys.inner.language_size(&w, (budget > 0).then_some(budget))?;
        let n = u64::try_from(n).map_err(|_| Fail(SoflabStatus::InvalidArgument, "count exceeds 64 bits".into()))?;
        put(out, n, "out")
    })
}

/// Cyclic models of the intervals `{0..d-1}` of Z, one stage per size.
///
/// # Safety
/// `sizes` must point to `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_cyclic(sizes: *const usize, n: usize, out: *mut *mut SoflabSofic) -> SoflabStatus {
    guard(|| {
        let ds = slice(sizes, n, "sizes")?;
        let inner = SoficSequence::from_folner_boxes(&GroupSpec::lattice(1)?, ds, FolnerModel::Cyclic)?;
        put(out, Box::into_raw(Box::new(SoflabSofic { inner })), "out")
    })
}

/// Independent uniform permutations for the generators of the free group
/// of the given rank, one stage per degree, reproducible from `seed`.
///
/// # Safety
/// `degrees` must point to `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_random_free(
    rank: usize,
    degrees: *const usize,
    n: usize,
    seed: u64,
    out: *mut *mut SoflabSofic,
) -> SoflabStatus {
    guard(|| {
        let ds = slice(degrees, n, "degrees")?;
        let inner = SoficSequence::random_free(rank, ds, seed)?;
        put(out, Box::into_raw(Box::new(SoflabSofic { inner })), "out")
    })
}

/// # Safety
/// `seq` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_free(seq: *mut SoflabSofic) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Number of stages.
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_len(seq: *const SoflabSofic, out: *mut usize) -> SoflabStatus {
    guard(|| {
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        put(out, seq.inner.len(), "out")
    })
}

/// Degree `d_i` of stage `i` (0-based).
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_degree(seq: *const SoflabSofic, i: usize, out: *mut usize) -> SoflabStatus {
    guard(|| {
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        if i >= seq.inner.len() {
            return Err(Fail(SoflabStatus::InvalidArgument, format!("stage {i} out of range")));
        }
        put(out, seq.inner.stage(i).d(), "out")
    })
}

fn as_double(v: Option<EntropyValue>) -> f64 {
    match v {
        Some(EntropyValue::Finite(x)) => x,
        Some(EntropyValue::NegInfinity) => f64::NEG_INFINITY,
        None => f64::NAN,
    }
}

/// Sofic trace of the symbol partition with `F` the generators and `W`
/// the identity: writes `n = stages` values per mode. `-INFINITY` marks an
/// empty microstate set and NaN a stage that ran out of budget.
///
/// # Safety
/// Handles must be live; `inner` and `outer` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn soflab_sofic_topological_trace(
    sys: *const SoflabSystem,
    seq: *const SoflabSofic,
    delta: f64,
    budget: u64,
    inner: *mut f64,
    outer: *mut f64,
    n: usize,
) -> SoflabStatus {
    guard(|| {
        let sys = &sys.as_ref().ok_or_else(|| null("sys"))?.inner;
        let seq = &seq.as_ref().ok_or_else(|| null("seq"))?.inner;
        if n != seq.len() {
            return Err(Fail(SoflabStatus::InvalidArgument, format!("{n} slots for {} stages", seq.len())));
        }
        if inner.is_null() || outer.is_null() {
            return Err(null("output buffer"));
        }
        let group = sys.group();
        let u = Cover::symbol_partition(sys)?;
        let f = FiniteSubset::from_unique(group.generators());
        let w = FiniteSubset::from_unique([group.identity()]);
        let p = SoficParams {
            cover: &u,
            f: &f,
            delta,
            window: &w,
            budget: (budget > 0).then_some(budget),
        };
        let t = sofic_topological_trace(sys, &p, seq)?;
        for (k, row) in t.rows.iter().enumerate() {
            inner.add(k).write(as_double(row.value_inner));
            outer.add(k).write(as_double(row.value_outer));
        }
        Ok(())
    })
}

/// Whether the sets admit pairwise disjoint cores of relative size at
/// least `1 - eps`. Set `i` is `elements[offset_i .. offset_i + lengths[i]]`
/// with the sets stored back to back.
///
/// # Safety
/// `lengths` must hold `n_sets` values and `elements` their sum.
#[no_mangle]
pub unsafe extern "C" fn soflab_epsilon_disjoint(
    elements: *const usize,
    lengths: *const usize,
    n_sets: usize,
    eps: f64,
    out: *mut bool,
) -> SoflabStatus {
    guard(|| {
        let lens = slice(lengths, n_sets, "lengths")?;
        let total = lens.iter().try_fold(0usize, |a, &l| a.checked_add(l));
        let total = total.ok_or_else(|| Fail(SoflabStatus::InvalidArgument, "lengths overflow".into()))?;
        let flat = slice(elements, total, "elements")?;
        let mut family = Vec::with_capacity(n_sets);
        let mut at = 0;
        for &l in lens {
            family.push(flat[at..at + l].to_vec());
            at += l;
        }
        put(out, epsilon_disjoint_check(&family, eps)?.holds, "out")
    })
}

/// Runs an experiment document (the JSON accepted by the `soflab` CLI)
/// and returns its JSON report and CSV table. `budget` 0 keeps the
/// document's own budget. Either output pointer may be NULL.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; non-NULL outputs must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn soflab_run_spec(
    spec_json: *const c_char,
    budget: u64,
    out_json: *mut *mut c_char,
    out_csv: *mut *mut c_char,
) -> SoflabStatus {
    guard(|| {
        let report = run::evaluate(text(spec_json, "spec_json")?, (budget > 0).then_some(budget))?;
        let csv = report.csv()?;
        if !out_json.is_null() {
            out_json.write(owned_string(report.json().to_string()));
        }
        if !out_csv.is_null() {
            out_csv.write(owned_string(csv));
        }
        if let Some(f) = report.outcome.failures.first() {
            return Err(Fail(SoflabStatus::Assertion, f.clone()));
        }
        Ok(())
    })
}
